#include "hplab/measures.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "hplab/error.hpp"

namespace hplab {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kQuadratureTolerance = 1e-12;
constexpr double kRequiredAccuracy = 1e-8;

double arctan_family_log(double x, double a, double b) { return -a * std::log1p(x * x) + b * std::atan(x); }

void require_integrable(double a, const char* what) {
  if (!(2.0 * a > 1.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": density is not integrable (power " +
                                                 std::to_string(a) + " <= 1/2)");
  }
}

}  // namespace

double hp_matrix_logdensity(const HermitianMatrix& x, Complex s) {
  const double n = static_cast<double>(x.dim());
  double value = 0.0;
  for (double l : eigvalsh(x)) value += arctan_family_log(l, s.real() + n, 2.0 * s.imag());
  return value;
}

double hp_eigen_logdensity(std::span<const double> x, Complex s) {
  const double n = static_cast<double>(x.size());
  double value = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (!(x[j] > x[i])) return -std::numeric_limits<double>::infinity();
      value += 2.0 * std::log(x[j] - x[i]);
    }
  }
  for (double v : x) value += arctan_family_log(v, s.real() + n, 2.0 * s.imag());
  return value;
}

const char* density_kind_name(DensityKind kind) noexcept {
  switch (kind) {
    case DensityKind::kPearson4: return "pearson4";
    case DensityKind::kHpEigen1d: return "hp_eigen_1d";
    case DensityKind::kReversibleM: return "reversible_m";
    case DensityKind::kGamma: return "gamma";
  }
  return "unknown";
}

Density1D::Density1D(DensityKind kind, double a, double b) : kind_(kind), a_(a), b_(b) {
  if (kind_ == DensityKind::kGamma) {
    log_norm_ = std::lgamma(a_) + a_ * std::log(b_);
    return;
  }
  log_norm_ = std::log(tail_integral(kHalfPi, -1) + tail_integral(kHalfPi, +1));
}

Density1D Density1D::pearson4(double nu, double mu) {
  if (!(nu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "pearson4 needs nu > 0");
  return Density1D(DensityKind::kPearson4, nu + 0.5, -2.0 * mu);
}

Density1D Density1D::hp_eigen_1d(Complex s) {
  require_integrable(s.real() + 1.0, "hp_eigen_1d");
  return Density1D(DensityKind::kHpEigen1d, s.real() + 1.0, 2.0 * s.imag());
}

Density1D Density1D::reversible_m(Complex s, int n) {
  require_integrable(s.real() + n, "reversible_m");
  return Density1D(DensityKind::kReversibleM, s.real() + n, 2.0 * s.imag());
}

Density1D Density1D::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gamma needs shape, scale > 0");
  return Density1D(DensityKind::kGamma, shape, scale);
}

double Density1D::lower() const noexcept {
  return kind_ == DensityKind::kGamma ? 0.0 : -std::numeric_limits<double>::infinity();
}

double Density1D::upper() const noexcept { return std::numeric_limits<double>::infinity(); }

std::string Density1D::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << density_kind_name(kind_);
  if (kind_ == DensityKind::kGamma) {
    os << "(shape=" << a_ << ",scale=" << b_ << ")";
  } else {
    os << "(power=" << a_ << ",tilt=" << b_ << ")";
  }
  return os.str();
}

double Density1D::log_unnormalized(double x) const {
  if (kind_ == DensityKind::kGamma) {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    return (a_ - 1.0) * std::log(x) - x / b_;
  }
  return arctan_family_log(x, a_, b_);
}

double Density1D::pdf(double x) const { return std::exp(log_unnormalized(x) - log_norm_); }

double Density1D::tail_integral(double reach, int side, double scale) const {
  if (!(reach > 0.0)) return 0.0;
  const double exponent = 2.0 * a_ - 2.0;
  // u is the distance from the endpoint side * pi/2, so theta = side (pi/2 - u)
  // and cos(theta) = sin(u). Next to u = 0 the complement argument xc = -u
  // carries u without rounding.
  auto integrand = [&](double u, double xc) {
    if (xc < 0.0) u = -xc;
    const double c = std::sin(u);
    if (c <= 0.0) return 0.0;
    return std::exp(exponent * std::log(c) + b_ * side * (kHalfPi - u));
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(integrand, 0.0, reach, kQuadratureTolerance, &error, &l1);
  if (!std::isfinite(value) || error > kRequiredAccuracy * (scale > 0.0 ? scale : l1)) {
    throw Error(ErrorCode::kNormalizationFailure, describe() + ": quadrature error " + std::to_string(error) +
                                                      " exceeds tolerance");
  }
  return value;
}

double Density1D::cdf(double x) const {
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (kind_ == DensityKind::kGamma) {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(a_, x / b_);
  }
  if (x == -std::numeric_limits<double>::infinity()) return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return 1.0;
  const double norm = std::exp(log_norm_);
  // distance of atan(x) from -pi/2 (x <= 0) or from +pi/2 (x > 0)
  if (x <= 0.0) {
    const double reach = x == 0.0 ? kHalfPi : std::atan(-1.0 / x);
    return std::min(1.0, tail_integral(reach, -1, norm) / norm);
  }
  return std::max(0.0, 1.0 - tail_integral(std::atan(1.0 / x), +1, norm) / norm);
}

double Density1D::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    if (u == 0.0) return lower();
    if (u == 1.0) return upper();
    throw Error(ErrorCode::kInvalidArgument, "quantile level must lie in [0, 1]");
  }
  if (kind_ == DensityKind::kGamma) return b_ * boost::math::gamma_p_inv(a_, u);
  double lo = -kHalfPi;
  double hi = kHalfPi;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(std::tan(mid)) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::tan(0.5 * (lo + hi));
}

double Density1D::sample(RngStream& stream) const {
  if (kind_ == DensityKind::kGamma || a_ < 1.0) return quantile(stream.uniform());
  // log g(theta) = (2a - 2) log cos(theta) + b theta, maximized in closed form.
  double theta_max;
  if (a_ > 1.0) {
    theta_max = std::atan(b_ / (2.0 * a_ - 2.0));
  } else {
    theta_max = b_ >= 0.0 ? kHalfPi : -kHalfPi;
  }
  auto log_g = [&](double theta) {
    const double c = std::cos(theta);
    const double lc = a_ > 1.0 ? (2.0 * a_ - 2.0) * std::log(c) : 0.0;
    return lc + b_ * theta;
  };
  const double log_bound = log_g(theta_max);
  for (;;) {
    const double theta = std::numbers::pi * (stream.uniform() - 0.5);
    if (std::log(stream.uniform()) <= log_g(theta) - log_bound) return std::tan(theta);
  }
}

double pearson4_pdf(double x, double nu, double mu) { return Density1D::pearson4(nu, mu).pdf(x); }

double reversible_m_pdf(double w, Complex s, int n) { return Density1D::reversible_m(s, n).pdf(w); }

double cdf_1d(const Density1D& d, double x) { return d.cdf(x); }

}  // namespace hplab
