#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <type_traits>

#include "higgs/form_field.hpp"

namespace higgs {

using SVec = Eigen::VectorXcd;

// A finite-difference value with a step-halving error estimate.
template <class T>
struct FdValue {
  T value;
  double error = 0.0;
};

inline double fd_norm(const FormField& f) { return f.coeff_norm(); }
inline double fd_norm(cplx c) { return std::abs(c); }
inline double fd_norm(double c) { return std::abs(c); }
template <class D>
double fd_norm(const Eigen::MatrixBase<D>& m) {
  return m.norm();
}

namespace fd_detail {

template <class F>
using sample_t = std::decay_t<std::invoke_result_t<F&, const SVec&>>;

inline SVec shifted(const SVec& s, int i, cplx step) {
  SVec t = s;
  t[i] += step;
  return t;
}

// Central Wirtinger derivative with one step size.
template <class F>
auto wirtinger(F& f, const SVec& s, int i, bool conj, double d) {
  using T = sample_t<F>;
  const T dx = f(shifted(s, i, d)) - f(shifted(s, i, -d));
  const T dy = f(shifted(s, i, cplx(0, d))) - f(shifted(s, i, cplx(0, -d)));
  // d/ds = (d/dx - i d/dy)/2, d/dsbar = (d/dx + i d/dy)/2
  const cplx cy = conj ? cplx(0, 1) : cplx(0, -1);
  return T(cplx(0.25 / d) * dx + (0.25 / d * cy) * dy);
}

// d^2/ds_i dsbar_j with one step size, real cross stencils.
template <class F>
auto mixed(F& f, const SVec& s, int i, int j, double d) {
  using T = sample_t<F>;
  const cplx e = 1.0, ie(0, 1);
  auto cross = [&](cplx a, cplx b) {
    auto p = [&](double sa, double sb) {
      SVec t = s;
      t[i] += sa * d * a;
      t[j] += sb * d * b;
      return f(t);
    };
    return T(cplx(0.25 / (d * d)) * (p(1, 1) - p(1, -1) - p(-1, 1) + p(-1, -1)));
  };
  // d_i dbar_j = (1/4)[d_xi d_xj + d_yi d_yj + i(d_xi d_yj - d_yi d_xj)]
  if (i == j) {
    const T c = f(s);
    const T lap = f(shifted(s, i, d)) + f(shifted(s, i, -d)) + f(shifted(s, i, cplx(0, d))) +
                  f(shifted(s, i, cplx(0, -d))) - cplx(4.0) * c;
    return T(cplx(0.25 / (d * d)) * lap);
  }
  return T(cplx(0.25) * (cross(e, e) + cross(ie, ie) + cplx(0, 1) * (cross(e, ie) - cross(ie, e))));
}

}  // namespace fd_detail

// d f / ds_i (conj = false) or d f / dsbar_i (conj = true), one Richardson level.
template <class F>
auto fd_wirtinger(F&& f, const SVec& s, int i, bool conj, double step) {
  auto d1 = fd_detail::wirtinger(f, s, i, conj, step);
  auto d2 = fd_detail::wirtinger(f, s, i, conj, 2.0 * step);
  using T = decltype(d1);
  const double err = fd_norm(T(d1 - d2)) / 3.0;
  return FdValue<T>{T(cplx(4.0 / 3.0) * d1 - cplx(1.0 / 3.0) * d2), err};
}

// d^2 f / ds_i dsbar_j, one Richardson level.
template <class F>
auto fd_mixed(F&& f, const SVec& s, int i, int j, double step) {
  auto d1 = fd_detail::mixed(f, s, i, j, step);
  auto d2 = fd_detail::mixed(f, s, i, j, 2.0 * step);
  using T = decltype(d1);
  const double err = fd_norm(T(d1 - d2)) / 3.0;
  return FdValue<T>{T(cplx(4.0 / 3.0) * d1 - cplx(1.0 / 3.0) * d2), err};
}

}  // namespace higgs
