#pragma once

// Target laws: the Hua-Pickrell matrix and eigenvalue log-densities
// (unnormalized), and normalized one-dimensional densities with CDFs.
//
// The 1D family used here is (1 + x^2)^(-a) exp(b atan x). Substituting
// x = tan(theta) turns it into cos(theta)^(2a - 2) exp(b theta) on
// (-pi/2, pi/2), which tanh-sinh quadrature handles including the
// integrable endpoint singularities for 1/2 < a < 1.

#include <span>
#include <string>

#include "hplab/linalg.hpp"
#include "hplab/random.hpp"

namespace hplab {

/// -(Re s + N) sum log(1 + l^2) + 2 Im(s) sum atan(l) over the eigenvalues l of X.
double hp_matrix_logdensity(const HermitianMatrix& x, Complex s);

/// 2 sum_{i<j} log(x_j - x_i) + sum_j [-(Re s + N) log(1 + x_j^2) + 2 Im(s) atan(x_j)].
/// Returns -infinity when x is not strictly ascending.
double hp_eigen_logdensity(std::span<const double> x, Complex s);

enum class DensityKind {
  kPearson4,     ///< exp(-2 mu atan x) / (1 + x^2)^(nu + 1/2)
  kHpEigen1d,    ///< N = 1 eigenvalue law: (1 + x^2)^(-Re s - 1) exp(2 Im s atan x)
  kReversibleM,  ///< (1 + w^2)^(-Re s - N) exp(2 Im s atan w)
  kGamma,        ///< x^(k-1) exp(-x/theta) on (0, inf)
};

const char* density_kind_name(DensityKind kind) noexcept;

/// Immutable normalized density; the normalizing constant is computed once
/// at construction, after which the object is safe to share across threads.
class Density1D {
 public:
  static Density1D pearson4(double nu, double mu);
  static Density1D hp_eigen_1d(Complex s);
  static Density1D reversible_m(Complex s, int n);
  static Density1D gamma(double shape, double scale = 1.0);

  DensityKind kind() const noexcept { return kind_; }
  double lower() const noexcept;
  double upper() const noexcept;
  std::string describe() const;

  double log_unnormalized(double x) const;
  /// log of the integral of exp(log_unnormalized).
  double log_norm() const noexcept { return log_norm_; }
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;
  /// One draw. Rejection in theta = atan(x) when the theta-density is
  /// bounded (power >= 1), inversion otherwise.
  double sample(RngStream& stream) const;

  /// For the arctan family: the exponents (a, b) of (1 + x^2)^(-a) exp(b atan x).
  double power() const noexcept { return a_; }
  double tilt() const noexcept { return b_; }

 private:
  Density1D(DensityKind kind, double a, double b);

  /// Mass of the theta-density within `reach` of the endpoint side * pi/2
  /// (side = -1 or +1). The quadrature error is judged relative to `scale`
  /// (the total mass) when given, else to the integral's L1 norm.
  double tail_integral(double reach, int side, double scale = 0.0) const;

  DensityKind kind_;
  double a_ = 0.0;  // power, or gamma shape
  double b_ = 0.0;  // tilt, or gamma scale
  double log_norm_ = 0.0;
};

/// Normalized Pearson type IV density. Throws kNormalizationFailure if the
/// quadrature does not reach 1e-8 relative accuracy.
double pearson4_pdf(double x, double nu, double mu);
double reversible_m_pdf(double w, Complex s, int n);
double cdf_1d(const Density1D& d, double x);

}  // namespace hplab
