#pragma once

// Goodness-of-fit tests and estimators that turn simulated batches into
// verdicts: one- and two-sample Kolmogorov-Smirnov, growth-rate slopes with
// confidence intervals, and empirical quadratic covariation of matrix
// increments.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hplab/linalg.hpp"
#include "hplab/sde.hpp"

namespace hplab {

inline constexpr double kDefaultAlpha = 1e-3;
inline constexpr std::size_t kMinKsSample = 100;

/// A batch of scalar statistics. Replicates whose tail did not converge are
/// counted in `flagged` and never enter `values`.
struct EmpiricalSample {
  std::vector<double> values;
  std::string label;
  std::string params_fingerprint;
  std::uint64_t seed = 0;
  std::size_t flagged = 0;

  EmpiricalSample() = default;
  EmpiricalSample(std::vector<double> v, std::string lbl = {});

  /// Appends a replicate; flagged or non-finite values are counted, not stored.
  void add(double value, bool is_flagged = false);
  std::size_t size() const noexcept { return values.size(); }
};

struct TestReport {
  std::string name;
  std::string kind;  ///< "ks1", "ks2", "slope", "covariation", ...
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double threshold = 0.0;  ///< criterion-specific bound, if any
  double alpha = kDefaultAlpha;
  bool passed = false;
  std::uint64_t seed = 0;
  std::string params_fingerprint;
  std::string detail;

  std::string to_json() const;
};

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

/// One-sample KS against a continuous CDF. Needs n >= 100.
TestReport ks_one_sample(const EmpiricalSample& sample, const std::function<double(double)>& cdf,
                         double alpha = kDefaultAlpha);
/// Two-sample KS with effective size n1 n2 / (n1 + n2). Needs both n >= 100.
TestReport ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b, double alpha = kDefaultAlpha);

struct SlopeEstimate {
  double slope = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t batches = 0;  ///< replicates, or within-path batches for a single path

  double half_width() const noexcept { return 0.5 * (ci_high - ci_low); }
};

/// Growth rate of the top coordinate (last component) of each path: OLS
/// slope against t after discarding the first `burn_in` fraction of the
/// horizon. Several paths give one slope each and a 95% t-interval; a
/// single path is cut into 20 consecutive batches instead. Throws
/// kInsufficientHorizon when the retained window is shorter than 10.
SlopeEstimate lyapunov_slope(std::span<const Trajectory<RealVector>> paths, double burn_in);
SlopeEstimate lyapunov_slope(const Trajectory<RealVector>& path, double burn_in);

/// Least-squares slope of log(y) against log(x); all values must be positive.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Ordinary least-squares slope of y against x.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// Empirical E[dG_ij conj(dG_kl)] / dt and E[dG_ij dG_kl] / dt with
/// standard errors. Index pairs are flattened as p = i*N + j, entry
/// (p, q) stored at p * N^2 + q.
struct CovariationSummary {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<Complex> conj_mean, plain_mean;
  std::vector<double> conj_se, plain_se;

  std::size_t index(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const noexcept;
  /// Largest |mean - target| / SE over all entries, with target 2 delta delta
  /// for the conjugate products and 0 for the plain ones. Entries with zero
  /// SE count as infinite unless they hit the target exactly.
  double max_z_score() const;
  bool matches_complex_bm(double z = 3.0) const { return max_z_score() <= z; }
};

CovariationSummary covariation_matrix(std::span<const ComplexMatrix> increments, double dt);

}  // namespace hplab
