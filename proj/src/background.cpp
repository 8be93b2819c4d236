#include "higgs/background.hpp"

#include <fftw3.h>

#include <cmath>
#include <stdexcept>

namespace higgs {

namespace {

Mat clock_matrix(int r) {
  Mat c = Mat::Zero(r, r);
  for (int k = 0; k < r; ++k) c(k, k) = std::polar(1.0, 2.0 * kPi * k / r);
  return c;
}

Mat shift_matrix(int r) {
  Mat s = Mat::Zero(r, r);
  for (int k = 0; k < r; ++k) s((k + 1) % r, k) = 1.0;
  return s;
}

Mat power(const Mat& m, int e) {
  Mat out = Mat::Identity(m.rows(), m.cols());
  for (int k = 0; k < e; ++k) out = out * m;
  return out;
}

double frac(double x) { return x - std::floor(x); }

}  // namespace

Background::Background(const TorusGrid& grid, int rank, int degree)
    : grid_(grid), rank_(rank), degree_(degree) {
  if (rank < 1 || rank > kMaxRank) throw std::invalid_argument("Background: rank out of range");
  const int dmod = ((degree % rank) + rank) % rank;
  P_ = power(shift_matrix(rank), dmod);
  Q_ = clock_matrix(rank);
  if (dmod == 0) Q_ = Mat::Identity(rank, rank);

  const int n = grid.n();
  const double f = flux();
  const double h = grid.spacing();
  for (int d = 0; d < 2; ++d) {
    phase_[d].assign(grid.sites(), 1.0);
    wraps_[d].assign(grid.sites(), 0);
  }
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      const std::size_t x = grid.index(p, q);
      if (p == n - 1) {
        phase_[0][x] = std::polar(1.0, 2.0 * kPi * f * grid.v(q));
        wraps_[0][x] = 1;
      }
      phase_[1][x] = std::polar(1.0, -2.0 * kPi * f * grid.u(p) * h);
      if (q == n - 1) wraps_[1][x] = 1;
    }
  }
  const Mat C = clock_matrix(rank), S = shift_matrix(rank);
  weyl_.reserve(static_cast<std::size_t>(rank * rank));
  for (int a = 0; a < rank; ++a)
    for (int b = 0; b < rank; ++b) weyl_.push_back(power(C, a) * power(S, b));
}

double Background::weyl_theta_u(int a, int /*b*/) const {
  const int dmod = ((degree_ % rank_) + rank_) % rank_;
  return frac(-static_cast<double>(a * dmod) / rank_);
}

double Background::weyl_theta_v(int /*a*/, int b) const {
  const int dmod = ((degree_ % rank_) + rank_) % rank_;
  return dmod == 0 ? 0.0 : frac(static_cast<double>(b) / rank_);
}

namespace stencil {

namespace {

std::size_t block_of(const Background& bg, Coeff c) {
  return c == Coeff::Endomorphism ? static_cast<std::size_t>(bg.rank() * bg.rank())
                                  : static_cast<std::size_t>(bg.rank());
}

// out_block = L in_block (sections) or W in W^dagger (Endomorphisms; phases cancel)
inline void apply_link(const Background& bg, Coeff c, Dir d, std::size_t x, bool adjoint, const cplx* in,
                       cplx* out) {
  const int r = bg.rank();
  const bool wraps = bg.link_wraps(d, x);
  if (c == Coeff::Endomorphism) {
    if (!wraps) {
      for (int k = 0; k < r * r; ++k) out[k] = in[k];
      return;
    }
    const Mat& W = bg.wrap_matrix(d);
    Eigen::Map<const Eigen::MatrixXcd> X(in, r, r);
    Eigen::Map<Eigen::MatrixXcd> Y(out, r, r);
    if (adjoint)
      Y.noalias() = W.adjoint() * X * W;
    else
      Y.noalias() = W * X * W.adjoint();
    return;
  }
  const cplx ph = adjoint ? std::conj(bg.link_phase(d, x)) : bg.link_phase(d, x);
  if (!wraps) {
    for (int k = 0; k < r; ++k) out[k] = ph * in[k];
    return;
  }
  const Mat& W = bg.wrap_matrix(d);
  Eigen::Map<const Eigen::VectorXcd> s(in, r);
  Eigen::Map<Eigen::VectorXcd> t(out, r);
  if (adjoint)
    t.noalias() = ph * (W.adjoint() * s);
  else
    t.noalias() = ph * (W * s);
}

}  // namespace

void forward(const Background& bg, Coeff c, Dir d, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
  const TorusGrid& g = bg.grid();
  const int n = g.n();
  const std::size_t blk = block_of(bg, c);
  out.resize(in.size());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const std::size_t x = g.index(p, q);
      const std::size_t y = d == Dir::u ? g.index(p + 1, q) : g.index(p, q + 1);
      apply_link(bg, c, d, x, false, in.data() + y * blk, out.data() + x * blk);
    }
}

void backward(const Background& bg, Coeff c, Dir d, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
  const TorusGrid& g = bg.grid();
  const int n = g.n();
  const std::size_t blk = block_of(bg, c);
  out.resize(in.size());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const std::size_t x = g.index(p, q);
      const std::size_t y = d == Dir::u ? g.index(p - 1, q) : g.index(p, q - 1);
      apply_link(bg, c, d, y, true, in.data() + y * blk, out.data() + x * blk);
    }
}

namespace {

// (-3 f + 4 T f - T^2 f) / (2h) with T the forward (or backward) transport
Eigen::VectorXcd one_sided(const Background& bg, Coeff c, Dir d, const Eigen::VectorXcd& in, bool adj) {
  Eigen::VectorXcd t1, t2;
  if (adj) {
    backward(bg, c, d, in, t1);
    backward(bg, c, d, t1, t2);
  } else {
    forward(bg, c, d, in, t1);
    forward(bg, c, d, t1, t2);
  }
  const double inv2h = 0.5 * bg.grid().n();
  return inv2h * (-3.0 * in + 4.0 * t1 - t2);
}

Eigen::VectorXcd centered(const Background& bg, Coeff c, Dir d, const Eigen::VectorXcd& in) {
  Eigen::VectorXcd f, b;
  forward(bg, c, d, in, f);
  backward(bg, c, d, in, b);
  return (0.5 * bg.grid().n()) * (f - b);
}

}  // namespace

Eigen::VectorXcd dbar(const Background& bg, Coeff c, const Eigen::VectorXcd& in) {
  const TorusGrid& g = bg.grid();
  return g.dbar_cu() * one_sided(bg, c, Dir::u, in, false) + g.dbar_cv() * one_sided(bg, c, Dir::v, in, false);
}

Eigen::VectorXcd dbar_adjoint(const Background& bg, Coeff c, const Eigen::VectorXcd& in) {
  const TorusGrid& g = bg.grid();
  return std::conj(g.dbar_cu()) * one_sided(bg, c, Dir::u, in, true) +
         std::conj(g.dbar_cv()) * one_sided(bg, c, Dir::v, in, true);
}

Eigen::VectorXcd central_dbar(const Background& bg, Coeff c, const Eigen::VectorXcd& in) {
  const TorusGrid& g = bg.grid();
  return g.dbar_cu() * centered(bg, c, Dir::u, in) + g.dbar_cv() * centered(bg, c, Dir::v, in);
}

Eigen::VectorXcd central_d(const Background& bg, Coeff c, const Eigen::VectorXcd& in) {
  const TorusGrid& g = bg.grid();
  return std::conj(g.dbar_cu()) * centered(bg, c, Dir::u, in) +
         std::conj(g.dbar_cv()) * centered(bg, c, Dir::v, in);
}

}  // namespace stencil

struct WeylFourier::Plan {
  int n = 0;
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  ~Plan() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf) fftw_free(buf);
  }
};

WeylFourier::WeylFourier(BackgroundPtr bg) : bg_(std::move(bg)), plan_(std::make_unique<Plan>()) {
  const int n = bg_->grid().n();
  plan_->n = n;
  plan_->buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n) * n));
  plan_->fwd = fftw_plan_dft_2d(n, n, plan_->buf, plan_->buf, FFTW_FORWARD, FFTW_ESTIMATE);
  plan_->bwd = fftw_plan_dft_2d(n, n, plan_->buf, plan_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

WeylFourier::~WeylFourier() = default;

Eigen::VectorXcd WeylFourier::apply_impl(const Eigen::VectorXcd& in,
                                         const std::function<cplx(double, double)>& m) const {
  const Background& bg = *bg_;
  const TorusGrid& g = bg.grid();
  const int n = g.n();
  const int r = bg.rank();
  const std::size_t rr = static_cast<std::size_t>(r * r);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(in.size());
  auto* buf = reinterpret_cast<cplx*>(plan_->buf);
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) {
      const Mat& B = bg.weyl_basis(a, b);
      const double tu = bg.weyl_theta_u(a, b), tv = bg.weyl_theta_v(a, b);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          const std::size_t x = g.index(p, q);
          Eigen::Map<const Eigen::MatrixXcd> X(in.data() + x * rr, r, r);
          const cplx coef = (B.adjoint() * X).trace() / static_cast<double>(r);
          buf[x] = coef * std::polar(1.0, -2.0 * kPi * (tu * g.u(p) + tv * g.v(q)));
        }
      fftw_execute(plan_->fwd);
      for (int i = 0; i < n; ++i) {
        const int ki = i <= n / 2 ? i : i - n;
        for (int j = 0; j < n; ++j) {
          const int kj = j <= n / 2 ? j : j - n;
          const double ku = 2.0 * kPi * (ki + tu) / n, kv = 2.0 * kPi * (kj + tv) / n;
          buf[static_cast<std::size_t>(i) * n + j] *= m(ku, kv) / static_cast<double>(n * n);
        }
      }
      fftw_execute(plan_->bwd);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          const std::size_t x = g.index(p, q);
          const cplx coef = buf[x] * std::polar(1.0, 2.0 * kPi * (tu * g.u(p) + tv * g.v(q)));
          Eigen::Map<Eigen::MatrixXcd> Y(out.data() + x * rr, r, r);
          Y += coef * B;
        }
    }
  }
  return out;
}

Eigen::VectorXcd WeylFourier::synthesize(const std::vector<Mode>& modes) const {
  const Background& bg = *bg_;
  const TorusGrid& g = bg.grid();
  const int r = bg.rank();
  const std::size_t rr = static_cast<std::size_t>(r * r);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(g.sites() * rr));
  for (const Mode& md : modes) {
    const Mat& B = bg.weyl_basis(md.a, md.b);
    const double ku = md.nu + bg.weyl_theta_u(md.a, md.b);
    const double kv = md.nv + bg.weyl_theta_v(md.a, md.b);
    for (int p = 0; p < g.n(); ++p)
      for (int q = 0; q < g.n(); ++q) {
        const std::size_t x = g.index(p, q);
        const cplx e = md.c * std::polar(1.0, 2.0 * kPi * (ku * g.u(p) + kv * g.v(q)));
        Eigen::Map<Eigen::MatrixXcd> Y(out.data() + x * rr, r, r);
        Y += e * B;
      }
  }
  return out;
}

}  // namespace higgs
