#include "higgs/ks_family.hpp"

#include <cmath>
#include <limits>

namespace higgs {

namespace {

std::vector<double> key_of(const SVec& s) {
  std::vector<double> k;
  k.reserve(static_cast<std::size_t>(2 * s.size()));
  for (const cplx& c : s) {
    k.push_back(std::round(c.real() * 1e13) / 1e13);
    k.push_back(std::round(c.imag() * 1e13) / 1e13);
  }
  return k;
}

}  // namespace

SVec FamilyChart::QuadMap::apply(const SVec& y) const {
  SVec x = origin + y;
  for (std::size_t p = 0; p < gamma.size(); ++p) x[static_cast<Eigen::Index>(p)] += 0.5 * (y.transpose() * gamma[p] * y).value();
  return x;
}

Eigen::MatrixXcd FamilyChart::QuadMap::jacobian(const SVec& y) const {
  const Eigen::Index m = y.size();
  Eigen::MatrixXcd J = Eigen::MatrixXcd::Identity(m, m);
  for (std::size_t p = 0; p < gamma.size(); ++p) J.row(static_cast<Eigen::Index>(p)) += (gamma[p] * y).transpose();
  return J;
}

FamilyChart::FamilyChart(std::string name, BackgroundPtr bg, int m, std::vector<FamilyTerm> terms,
                         FamilyOptions opts)
    : name_(std::move(name)), bg_(std::move(bg)), m_(m), terms_(std::move(terms)), opts_(opts),
      cache_(std::make_shared<Cache>()) {
  if (m_ < 1) throw std::invalid_argument("FamilyChart: parameter dimension must be positive");
  for (const FamilyTerm& t : terms_) {
    if (static_cast<int>(t.powers.size()) != m_) throw std::invalid_argument("FamilyChart: monomial arity mismatch");
    if (t.a01.rank() != bg_->rank() || t.phi.rank() != bg_->rank())
      throw std::invalid_argument("FamilyChart: coefficient rank mismatch");
  }
  opts_.flow.tol = opts_.he_tol;
}

SVec FamilyChart::to_family(const SVec& t) const {
  SVec x = t;
  for (auto it = maps_.rbegin(); it != maps_.rend(); ++it) x = it->apply(x);
  return x;
}

Eigen::MatrixXcd FamilyChart::jacobian(const SVec& t) const {
  Eigen::MatrixXcd J = Eigen::MatrixXcd::Identity(m_, m_);
  SVec x = t;
  for (auto it = maps_.rbegin(); it != maps_.rend(); ++it) {
    J = it->jacobian(x) * J;
    x = it->apply(x);
  }
  return J;
}

FamilyChart FamilyChart::reparametrize(QuadMap map) const {
  FamilyChart out = *this;
  out.maps_.insert(out.maps_.begin() + static_cast<std::ptrdiff_t>(maps_.size()), std::move(map));
  out.etas_.clear();
  return out;
}

FormField FamilyChart::data_at_family(const SVec& s, int deriv) const {
  FormField out(grid(), Coeff::Endomorphism, bg_->rank(), 0, 1);
  for (const FamilyTerm& t : terms_) {
    cplx c = 1.0;
    for (int k = 0; k < m_; ++k) {
      const int pw = t.powers[static_cast<std::size_t>(k)];
      if (k == deriv) {
        c *= pw == 0 ? 0.0 : static_cast<double>(pw) * std::pow(s[k], pw - 1);
      } else {
        c *= std::pow(s[k], pw);
      }
    }
    if (c == cplx(0.0)) continue;
    out.data(Part::p01) += c * t.a01.data(Part::p01);
    out.data(Part::p10) += c * t.phi.data(Part::p10);
  }
  return out;
}

BundleConfig FamilyChart::data(const SVec& t) const {
  const FormField d = data_at_family(to_family(t), -1);
  BundleConfig b = trivial_bundle(bg_);
  b.a01 = d.only(Part::p01);
  b.phi = d.only(Part::p10);
  b.higgs_residual = check_higgs(b);
  return b;
}

FormField FamilyChart::d_data(const SVec& t, int i) const {
  const SVec s = to_family(t);
  const Eigen::MatrixXcd J = jacobian(t);
  FormField out(grid(), Coeff::Endomorphism, bg_->rank(), 0, 1);
  for (int p = 0; p < m_; ++p)
    if (J(p, i) != cplx(0.0)) out.axpy(J(p, i), data_at_family(s, p));
  return out;
}

const BundleConfig& FamilyChart::fiber(const SVec& t) {
  const SVec s = to_family(t);
  const std::vector<double> key = key_of(s);
  if (auto it = cache_->fibers.find(key); it != cache_->fibers.end())
    return opts_.log_scale ? scaled_fiber(key, s, it->second) : it->second;
  BundleConfig b = data(t);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [k, fb] : cache_->fibers) {
    double dist = 0.0;
    for (std::size_t q = 0; q < k.size(); ++q) dist += (k[q] - key[q]) * (k[q] - key[q]);
    if (dist < best) {
      best = dist;
      b.h = fb.h;
    }
  }
  try {
    auto [solved, trace] = donaldson_flow(b, opts_.flow);
    ++cache_->solves;
    cache_->traces.push_back(std::move(trace));
    const BundleConfig& out = cache_->fibers.emplace(key, std::move(solved)).first->second;
    return opts_.log_scale ? scaled_fiber(key, s, out) : out;
  } catch (const FlowFailure& e) {
    throw FiberError(std::string("fiber solve failed in family ") + name_ + ": " + e.what());
  }
}

const BundleConfig& FamilyChart::scaled_fiber(const std::vector<double>& key, const SVec& s,
                                              const BundleConfig& solved) {
  if (auto it = cache_->scaled.find(key); it != cache_->scaled.end()) return it->second;
  BundleConfig b = solved;
  b.h *= cplx(std::exp(opts_.log_scale(s)));
  return cache_->scaled.emplace(key, std::move(b)).first->second;
}

const EtaCacheEntry* FamilyChart::cached_eta(const SVec& t, int i) const {
  auto it = etas_.find({key_of(t), i});
  return it == etas_.end() ? nullptr : &it->second;
}

void FamilyChart::store_eta(const SVec& t, int i, EtaCacheEntry e) { etas_[{key_of(t), i}] = std::move(e); }

nlohmann::json FamilyChart::to_json() const {
  const TorusGrid& g = grid();
  return nlohmann::json{{"name", name_},
                        {"rank", bg_->rank()},
                        {"degree", bg_->degree()},
                        {"N", g.n()},
                        {"tau", {g.tau().real(), g.tau().imag()}},
                        {"scale", g.scale()},
                        {"m", m_},
                        {"terms", terms_.size()},
                        {"reparametrized", reparametrized()},
                        {"fd_step", fd_step()},
                        {"he_tol", opts_.he_tol},
                        {"fiber_solves", solves()}};
}

}  // namespace higgs
