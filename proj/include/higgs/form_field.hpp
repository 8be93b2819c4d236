#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "higgs/torus_grid.hpp"

namespace higgs {

inline constexpr int kMaxRank = 4;

// Small dense blocks live on the stack.
using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxRank, kMaxRank>;
using Vec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxRank, 1>;
using MatMap = Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>>;
using CMatMap = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>>;

enum class Coeff : std::uint8_t { Endomorphism = 0, Section = 1 };

// Bidegree components at n = 1.
enum class Part : std::uint8_t { p00 = 0, p10 = 1, p01 = 2, p11 = 3 };

inline int part_degree(Part p) {
  return p == Part::p00 ? 0 : (p == Part::p11 ? 2 : 1);
}

// A bundle-valued form of fixed total degree. Degree 1 carries both the
// dz and the dzbar component; pure bidegree fields keep the other one zero.
class FormField {
 public:
  FormField() = default;
  FormField(const TorusGrid& grid, Coeff coeff, int rank, int twist, int degree);

  static FormField zeros_like(const FormField& f) {
    return FormField(f.grid(), f.coeff(), f.rank(), f.twist(), f.degree());
  }

  const TorusGrid& grid() const { return grid_; }
  Coeff coeff() const { return coeff_; }
  int rank() const { return rank_; }
  int twist() const { return twist_; }
  int degree() const { return degree_; }
  int n() const { return grid_.n(); }
  std::size_t sites() const { return grid_.sites(); }
  // complex entries per site per part
  std::size_t block() const {
    return coeff_ == Coeff::Endomorphism ? static_cast<std::size_t>(rank_ * rank_)
                                         : static_cast<std::size_t>(rank_);
  }
  // Degrees above 2 vanish at n = 1 and carry no parts.
  int num_parts() const { return degree_ == 1 ? 2 : (degree_ > 2 ? 0 : 1); }
  Part part_at(int slot) const;
  bool has(Part p) const { return part_degree(p) == degree_; }

  Eigen::VectorXcd& data(Part p) { return parts_[slot(p)]; }
  const Eigen::VectorXcd& data(Part p) const { return parts_[slot(p)]; }
  Eigen::VectorXcd& slot_data(int s) { return parts_[s]; }
  const Eigen::VectorXcd& slot_data(int s) const { return parts_[s]; }

  cplx* at(Part p, std::size_t site) { return data(p).data() + site * block(); }
  const cplx* at(Part p, std::size_t site) const { return data(p).data() + site * block(); }
  MatMap mat(Part p, std::size_t site) { return MatMap(at(p, site), rank_, rank_); }
  CMatMap mat(Part p, std::size_t site) const { return CMatMap(at(p, site), rank_, rank_); }

  // Bidegree of a pure field; throws if degree 1 with both parts nonzero.
  std::pair<int, int> bidegree() const;

  bool same_shape(const FormField& o) const {
    return grid_ == o.grid_ && coeff_ == o.coeff_ && rank_ == o.rank_ && twist_ == o.twist_ &&
           degree_ == o.degree_;
  }
  void require_same_shape(const FormField& o, const char* where) const;

  FormField& operator+=(const FormField& o);
  FormField& operator-=(const FormField& o);
  FormField& operator*=(cplx c);
  FormField& axpy(cplx c, const FormField& x);
  void set_zero();

  // Keep only one bidegree part (degree-1 helper).
  FormField only(Part p) const;

  // Flat Euclidean norm of the coefficient array (no metric, no area).
  double coeff_norm() const;

 private:
  int slot(Part p) const;

  TorusGrid grid_{8, cplx(0, 1), 1.0};
  Coeff coeff_ = Coeff::Endomorphism;
  int rank_ = 1;
  int twist_ = 0;
  int degree_ = 0;
  std::array<Eigen::VectorXcd, 2> parts_;
};

FormField operator+(FormField a, const FormField& b);
FormField operator-(FormField a, const FormField& b);
FormField operator*(cplx c, FormField a);

// Pointwise Hermitian metric h with cached inverse and square root.
class HermitianMetric {
 public:
  HermitianMetric() = default;
  // Identity metric.
  HermitianMetric(const TorusGrid& grid, int rank);
  // From an Endomorphism 0-form; throws if some sample is not positive-definite.
  explicit HermitianMetric(const FormField& h);

  int rank() const { return rank_; }
  bool is_identity() const { return identity_; }
  std::size_t sites() const { return h_.size(); }
  const Mat& h(std::size_t s) const { return h_[s]; }
  const Mat& hinv(std::size_t s) const { return hinv_[s]; }
  const Mat& sqrt(std::size_t s) const { return sqrt_[s]; }
  const Mat& sqrt_inv(std::size_t s) const { return sqrt_inv_[s]; }
  double min_eigenvalue() const { return min_eig_; }
  FormField as_field(const TorusGrid& grid) const;

 private:
  int rank_ = 1;
  bool identity_ = true;
  double min_eig_ = 1.0;
  std::vector<Mat> h_, hinv_, sqrt_, sqrt_inv_;
};

// Metric factor of the pairing on a part: g^{zbar z} per form index.
double part_metric_factor(const TorusGrid& grid, Part p);

// Quadrature of the pointwise pairing h~(a, b) with area weights.
cplx global_inner_product(const FormField& a, const FormField& b, const HermitianMetric& h);

// Lambda contraction of a (1,1)-field: -i g^{zbar z} f_{z zbar}, so that Lambda(omega Id) = Id.
FormField lambda_contract(const FormField& f);
// Inverse direction: a 0-form c yields the (1,1)-form with Lambda = c.
FormField lambda_lift(const FormField& c);

// Graded Lie bracket [a ^ b] of Endomorphism forms at n = 1.
FormField wedge_bracket(const FormField& a, const FormField& b);
// Pointwise h-adjoint with (1,0) <-> (0,1) swap.
FormField star_adjoint(const FormField& a, const HermitianMetric& h);
// Pointwise action of an Endomorphism 0-form: f -> X f (sections) or [X, f] (Endomorphisms).
FormField act(const FormField& x, const FormField& f);
// Pointwise product X f for an Endomorphism 0-form X and any field f (matrix product).
FormField multiply(const FormField& x, const FormField& f);

// Binary snapshot: 64-byte header then complex64 pairs, site-major per part.
void write_snapshot(const FormField& f, const std::string& path);
FormField read_snapshot(const std::string& path, const TorusGrid& grid);

}  // namespace higgs
