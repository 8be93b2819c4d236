#include "higgs/form_field.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>
#include <stdexcept>

namespace higgs {

FormField::FormField(const TorusGrid& grid, Coeff coeff, int rank, int twist, int degree)
    : grid_(grid), coeff_(coeff), rank_(rank), twist_(twist), degree_(degree) {
  if (rank < 1 || rank > kMaxRank) throw std::invalid_argument("FormField: rank out of range");
  if (degree < 0) throw std::invalid_argument("FormField: negative degree");
  for (int s = 0; s < num_parts(); ++s) parts_[s] = Eigen::VectorXcd::Zero(sites() * block());
}

int FormField::slot(Part p) const {
  if (part_degree(p) != degree_) throw std::invalid_argument("FormField: part not present in this degree");
  return p == Part::p01 ? 1 : 0;
}

Part FormField::part_at(int s) const {
  switch (degree_) {
    case 0: return Part::p00;
    case 1: return s == 0 ? Part::p10 : Part::p01;
    case 2: return Part::p11;
    default: throw std::invalid_argument("FormField: no parts above degree 2");
  }
}

std::pair<int, int> FormField::bidegree() const {
  switch (degree_) {
    case 0: return {0, 0};
    case 2: return {1, 1};
    case 1: {
      const bool dz = parts_[0].squaredNorm() > 0.0;
      const bool dzb = parts_[1].squaredNorm() > 0.0;
      if (dz && dzb) throw std::logic_error("FormField: mixed (1,0)+(0,1) field has no single bidegree");
      return dzb ? std::pair{0, 1} : std::pair{1, 0};
    }
    default: return {degree_ - 1, 1};
  }
}

void FormField::require_same_shape(const FormField& o, const char* where) const {
  if (!(grid_ == o.grid_)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
  if (coeff_ != o.coeff_) throw std::invalid_argument(std::string(where) + ": coefficient tag mismatch");
  if (rank_ != o.rank_) throw std::invalid_argument(std::string(where) + ": rank mismatch");
  if (twist_ != o.twist_) throw std::invalid_argument(std::string(where) + ": twist mismatch");
  if (degree_ != o.degree_) throw std::invalid_argument(std::string(where) + ": degree mismatch");
}

FormField& FormField::operator+=(const FormField& o) {
  require_same_shape(o, "operator+=");
  for (int s = 0; s < num_parts(); ++s) parts_[s] += o.parts_[s];
  return *this;
}

FormField& FormField::operator-=(const FormField& o) {
  require_same_shape(o, "operator-=");
  for (int s = 0; s < num_parts(); ++s) parts_[s] -= o.parts_[s];
  return *this;
}

FormField& FormField::operator*=(cplx c) {
  for (int s = 0; s < num_parts(); ++s) parts_[s] *= c;
  return *this;
}

FormField& FormField::axpy(cplx c, const FormField& x) {
  require_same_shape(x, "axpy");
  for (int s = 0; s < num_parts(); ++s) parts_[s] += c * x.parts_[s];
  return *this;
}

void FormField::set_zero() {
  for (int s = 0; s < num_parts(); ++s) parts_[s].setZero();
}

FormField FormField::only(Part p) const {
  FormField out = *this;
  for (int s = 0; s < num_parts(); ++s)
    if (part_at(s) != p) out.parts_[s].setZero();
  return out;
}

double FormField::coeff_norm() const {
  double acc = 0.0;
  for (int s = 0; s < num_parts(); ++s) acc += parts_[s].squaredNorm();
  return std::sqrt(acc);
}

FormField operator+(FormField a, const FormField& b) { return a += b; }
FormField operator-(FormField a, const FormField& b) { return a -= b; }
FormField operator*(cplx c, FormField a) { return a *= c; }

HermitianMetric::HermitianMetric(const TorusGrid& grid, int rank) : rank_(rank), identity_(true) {
  const Mat id = Mat::Identity(rank, rank);
  h_.assign(grid.sites(), id);
  hinv_ = sqrt_ = sqrt_inv_ = h_;
}

HermitianMetric::HermitianMetric(const FormField& h) : rank_(h.rank()), identity_(false) {
  if (h.coeff() != Coeff::Endomorphism || h.degree() != 0)
    throw std::invalid_argument("HermitianMetric: expects an Endomorphism 0-form");
  const std::size_t n = h.sites();
  h_.resize(n);
  hinv_.resize(n);
  sqrt_.resize(n);
  sqrt_inv_.resize(n);
  min_eig_ = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  for (std::size_t s = 0; s < n; ++s) {
    Eigen::MatrixXcd m = h.mat(Part::p00, s);
    m = 0.5 * (m + m.adjoint()).eval();
    es.compute(m);
    const Eigen::VectorXd ev = es.eigenvalues();
    min_eig_ = std::min(min_eig_, ev.minCoeff());
    if (!(ev.minCoeff() > 1e-10))
      throw std::domain_error("HermitianMetric: sample is not positive-definite");
    const Eigen::MatrixXcd& U = es.eigenvectors();
    h_[s] = m;
    hinv_[s] = U * ev.cwiseInverse().asDiagonal() * U.adjoint();
    sqrt_[s] = U * ev.cwiseSqrt().asDiagonal() * U.adjoint();
    sqrt_inv_[s] = U * ev.cwiseSqrt().cwiseInverse().asDiagonal() * U.adjoint();
  }
}

FormField HermitianMetric::as_field(const TorusGrid& grid) const {
  FormField f(grid, Coeff::Endomorphism, rank_, 0, 0);
  for (std::size_t s = 0; s < f.sites(); ++s) f.mat(Part::p00, s) = h_[s];
  return f;
}

double part_metric_factor(const TorusGrid& grid, Part p) {
  const int deg = part_degree(p);
  return deg == 0 ? 1.0 : (deg == 1 ? grid.g_inv() : grid.g_inv() * grid.g_inv());
}

cplx global_inner_product(const FormField& a, const FormField& b, const HermitianMetric& h) {
  a.require_same_shape(b, "global_inner_product");
  if (h.rank() != a.rank()) throw std::invalid_argument("global_inner_product: metric rank mismatch");
  const int r = a.rank();
  cplx total = 0.0;
  for (int s = 0; s < a.num_parts(); ++s) {
    const Part p = a.part_at(s);
    const double m = part_metric_factor(a.grid(), p);
    cplx acc = 0.0;
    if (h.is_identity()) {
      acc = b.data(p).dot(a.data(p));
    } else if (a.coeff() == Coeff::Endomorphism) {
      for (std::size_t x = 0; x < a.sites(); ++x) {
        const Mat ha = h.h(x) * a.mat(p, x) * h.hinv(x);
        acc += (ha * b.mat(p, x).adjoint()).trace();
      }
    } else {
      for (std::size_t x = 0; x < a.sites(); ++x) {
        Eigen::Map<const Eigen::VectorXcd> av(a.at(p, x), r), bv(b.at(p, x), r);
        acc += bv.dot(h.h(x) * av);
      }
    }
    total += m * acc;
  }
  return total * a.grid().cell_weight();
}

FormField lambda_contract(const FormField& f) {
  if (f.degree() != 2) throw std::invalid_argument("lambda_contract: expects a (1,1)-form");
  FormField out(f.grid(), f.coeff(), f.rank(), f.twist(), 0);
  out.data(Part::p00) = (-I * f.grid().g_inv()) * f.data(Part::p11);
  return out;
}

FormField lambda_lift(const FormField& c) {
  if (c.degree() != 0) throw std::invalid_argument("lambda_lift: expects a 0-form");
  FormField out(c.grid(), c.coeff(), c.rank(), c.twist(), 2);
  out.data(Part::p11) = (I * c.grid().g_zzbar()) * c.data(Part::p00);
  return out;
}

namespace {

void require_end(const FormField& a, const char* where) {
  if (a.coeff() != Coeff::Endomorphism)
    throw std::invalid_argument(std::string(where) + ": Endomorphism-valued input required");
}

// out += sign * [x, y] at every site
void add_commutator(FormField& out, Part po, const FormField& x, Part px, const FormField& y, Part py,
                    double sign) {
  for (std::size_t s = 0; s < out.sites(); ++s) {
    const Mat xm = x.mat(px, s);
    const Mat ym = y.mat(py, s);
    out.mat(po, s) += sign * (xm * ym - ym * xm);
  }
}

}  // namespace

FormField wedge_bracket(const FormField& a, const FormField& b) {
  require_end(a, "wedge_bracket");
  require_end(b, "wedge_bracket");
  if (a.rank() != b.rank()) throw std::invalid_argument("wedge_bracket: rank mismatch");
  const int deg = a.degree() + b.degree();
  FormField out(a.grid(), Coeff::Endomorphism, a.rank(), 0, deg);
  if (deg > 2) return out;
  if (a.degree() == 1 && b.degree() == 1) {
    add_commutator(out, Part::p11, a, Part::p10, b, Part::p01, 1.0);
    add_commutator(out, Part::p11, a, Part::p01, b, Part::p10, -1.0);
    return out;
  }
  // one side is a 0-form: plain commutator part by part
  for (int s = 0; s < out.num_parts(); ++s) {
    const Part p = out.part_at(s);
    if (a.degree() == 0)
      add_commutator(out, p, a, Part::p00, b, p, 1.0);
    else
      add_commutator(out, p, a, p, b, Part::p00, 1.0);
  }
  return out;
}

FormField star_adjoint(const FormField& a, const HermitianMetric& h) {
  require_end(a, "star_adjoint");
  FormField out = FormField::zeros_like(a);
  auto adj = [&](std::size_t s, const CMatMap& m) -> Mat {
    if (h.is_identity()) return m.adjoint();
    return h.hinv(s) * m.adjoint() * h.h(s);
  };
  for (std::size_t s = 0; s < a.sites(); ++s) {
    switch (a.degree()) {
      case 0: out.mat(Part::p00, s) = adj(s, a.mat(Part::p00, s)); break;
      case 1:
        out.mat(Part::p10, s) = adj(s, a.mat(Part::p01, s));
        out.mat(Part::p01, s) = adj(s, a.mat(Part::p10, s));
        break;
      case 2: out.mat(Part::p11, s) = -adj(s, a.mat(Part::p11, s)); break;
      default: break;
    }
  }
  return out;
}

FormField act(const FormField& x, const FormField& f) {
  require_end(x, "act");
  if (x.degree() != 0) throw std::invalid_argument("act: expects an Endomorphism 0-form");
  if (f.coeff() == Coeff::Endomorphism) return wedge_bracket(x, f);
  return multiply(x, f);
}

FormField multiply(const FormField& x, const FormField& f) {
  require_end(x, "multiply");
  if (x.degree() != 0 || x.rank() != f.rank()) throw std::invalid_argument("multiply: shape mismatch");
  FormField out = FormField::zeros_like(f);
  const int r = f.rank();
  const int cols = f.coeff() == Coeff::Endomorphism ? r : 1;
  for (int s = 0; s < f.num_parts(); ++s) {
    const Part p = f.part_at(s);
    for (std::size_t site = 0; site < f.sites(); ++site) {
      Eigen::Map<const Eigen::MatrixXcd> fm(f.at(p, site), r, cols);
      Eigen::Map<Eigen::MatrixXcd> om(out.at(p, site), r, cols);
      om.noalias() = x.mat(Part::p00, site) * fm;
    }
  }
  return out;
}

namespace {

struct SnapshotHeader {
  char magic[8];
  std::int32_t n;
  std::int32_t rank;
  std::int32_t coeff;
  std::int32_t degree;
  std::int32_t twist;
  std::int32_t p;
  std::int32_t q;
  std::int32_t parts;
  char reserved[24];
};
static_assert(sizeof(SnapshotHeader) == 64);

constexpr char kMagic[8] = {'H', 'G', 'F', 'I', 'E', 'L', 'D', '1'};

}  // namespace

void write_snapshot(const FormField& f, const std::string& path) {
  SnapshotHeader hdr{};
  std::memcpy(hdr.magic, kMagic, 8);
  hdr.n = f.n();
  hdr.rank = f.rank();
  hdr.coeff = static_cast<std::int32_t>(f.coeff());
  hdr.degree = f.degree();
  hdr.twist = f.twist();
  hdr.parts = f.num_parts();
  try {
    const auto bd = f.bidegree();
    hdr.p = bd.first;
    hdr.q = bd.second;
  } catch (const std::logic_error&) {
    hdr.p = hdr.q = -1;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  out.write(reinterpret_cast<const char*>(&hdr), sizeof hdr);
  for (int s = 0; s < f.num_parts(); ++s) {
    const Eigen::VectorXcd& d = f.slot_data(s);
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      const float pair[2] = {static_cast<float>(d[k].real()), static_cast<float>(d[k].imag())};
      out.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
  }
}

FormField read_snapshot(const std::string& path, const TorusGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  SnapshotHeader hdr{};
  in.read(reinterpret_cast<char*>(&hdr), sizeof hdr);
  if (!in || std::memcmp(hdr.magic, kMagic, 8) != 0) throw std::runtime_error("read_snapshot: bad header");
  if (hdr.n != grid.n()) throw std::runtime_error("read_snapshot: grid size mismatch");
  FormField f(grid, static_cast<Coeff>(hdr.coeff), hdr.rank, hdr.twist, hdr.degree);
  for (int s = 0; s < f.num_parts(); ++s) {
    Eigen::VectorXcd& d = f.slot_data(s);
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      float pair[2];
      in.read(reinterpret_cast<char*>(pair), sizeof pair);
      d[k] = cplx(pair[0], pair[1]);
    }
  }
  if (!in) throw std::runtime_error("read_snapshot: truncated data");
  return f;
}

}  // namespace higgs
