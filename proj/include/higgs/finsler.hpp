#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "higgs/ks_family.hpp"

namespace higgs {

struct TangentVector {
  SVec s;
  SVec xi;
};

struct FinslerValue {
  double F1 = 0.0;
  double F2 = 0.0;
  double Fk = 0.0;
};

// Fiber data at one base point: eta_i, their Gram matrix and the bracket pairings
// P(a, b, c, d) = <[eta_a ^ eta_b], G[eta_c ^ eta_d]>.
class FinslerPoint {
 public:
  FinslerPoint(HodgeEngine& endo, std::vector<FormField> etas);
  FinslerPoint(FamilyChart& fam, const SVec& s);

  int dim() const { return static_cast<int>(etas_.size()); }
  const std::vector<FormField>& etas() const { return etas_; }
  const Eigen::MatrixXcd& gram() const { return gram_; }
  cplx bracket_pairing(int a, int b, int c, int d) const { return pairing_[index(a, b, c, d)]; }

  FinslerValue value(const SVec& xi, double kappa) const;
  // F_kappa^2 as a function of xi.
  double f_squared(const SVec& xi, double kappa) const;
  // Six-term closed form of d^2 F^2 / dxi^i dxibar^j.
  Eigen::MatrixXcd levi(const SVec& xi, double kappa) const;
  // Independent route: FD second derivatives of f_squared in xi, one Richardson level.
  Eigen::MatrixXcd levi_fd(const SVec& xi, double kappa, double step) const;

  struct DiagonalBound {
    double levi = 0.0;
    double bound = 0.0;       // cube term + kappa square term + kappa^2 product term, over F^6
    double cs_first = 0.0;    // f b_i - |X_i|^2 >= 0
    double cs_second = 0.0;   // sqrt(a g_ii f b_i) - |X_i <H, eta_i>| >= 0
  };
  DiagonalBound diagonal_bound(const SVec& xi, double kappa, int i) const;

 private:
  std::size_t index(int a, int b, int c, int d) const {
    const std::size_t m = etas_.size();
    return ((static_cast<std::size_t>(a) * m + b) * m + c) * m + d;
  }
  cplx gram_form(const SVec& x, const SVec& y) const;  // <H(x), H(y)>
  // <[H(x) ^ H(y)], G[H(z) ^ H(w)]>
  cplx bracket_form(const SVec& x, const SVec& y, const SVec& z, const SVec& w) const;

  std::vector<FormField> etas_;
  Eigen::MatrixXcd gram_;
  std::vector<cplx> pairing_;
};

FinslerValue fkappa(FamilyChart& fam, const TangentVector& v, double kappa);
Eigen::MatrixXcd levi_matrix(FamilyChart& fam, const TangentVector& v, double kappa);

struct Lemma44Terms {
  std::array<double, 5> definitional{};  // A, B, C, D, E
  std::array<double, 5> closed_form{};
  std::array<double, 5> fd_error{};      // definitional route
  double b_projection = 0.0;             // |P(nabla_i^2 eta_i)| at s0
  double scale = 0.0;                    // |eta_i|^2 squared, the natural size of the terms
  std::array<double, 5> gaps() const;    // relative to max(|route|, noise floor)
};

// Closed forms from one eta (Lemma 4.4 right-hand sides).
struct Lemma44Closed {
  double a = 0.0;            // <eta, eta>
  double bracket = 0.0;      // |d^dagger G[eta ^ eta]|^2
  double endo = 0.0;         // <eta^dagger eta, G eta^dagger eta>
  double X1 = 0.0, X2 = 0.0, Z = 0.0, B = 0.0, D = 0.0;
  cplx X3 = 0.0;
  cplx E1 = 0.0, E2 = 0.0;
  double A() const { return -6.0 * X2 + 12.0 * X3.real() + 5.0 * X1; }
  double C() const { return D + 4.0 * Z + X2; }
  double E() const { return std::norm(E1 + 2.0 * E2); }
};
Lemma44Closed lemma44_closed(HodgeEngine& endo, const FormField& eta);

Lemma44Terms terms_lemma44(FamilyChart& fam, const SVec& s0, int i);

// Theorem 4.5 assembled from the closed-form primitives.
double finsler_hsc(const Lemma44Closed& t, double kappa);
double finsler_hsc(FamilyChart& fam, const SVec& s0, int i, double kappa);
// Same value through the Lemma 4.4 terms and -dd log(a^2 + kappa f) (consistency route).
double finsler_hsc_from_terms(const Lemma44Closed& t, double kappa);

struct GaussOracle {
  double value = 0.0;
  double error = 0.0;
  double pullback_gap = 0.0;  // F^4 route vs the nabla eta / harmonic projection expansion
};
GaussOracle fd_gauss_oracle(FamilyChart& fam, const SVec& s0, int i, double kappa, double fd_step);

class DegenerateDirection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace higgs
