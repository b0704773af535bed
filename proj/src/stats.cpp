#include "hplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "hplab/error.hpp"

namespace hplab {

EmpiricalSample::EmpiricalSample(std::vector<double> v, std::string lbl) : label(std::move(lbl)) {
  values.reserve(v.size());
  for (double x : v) add(x);
}

void EmpiricalSample::add(double value, bool is_flagged) {
  if (is_flagged || !std::isfinite(value)) {
    ++flagged;
    return;
  }
  values.push_back(value);
}

std::string TestReport::to_json() const {
  nlohmann::json j = {
      {"name", name},         {"kind", kind},
      {"statistic", statistic}, {"p_value", p_value},
      {"n", n2 ? nlohmann::json::array({n1, n2}) : nlohmann::json(n1)},
      {"threshold", threshold}, {"alpha", alpha},
      {"verdict", passed ? "pass" : "fail"},
      {"seed", seed},         {"params_fingerprint", params_fingerprint},
  };
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 0.2) return 1.0;
  if (lambda <= 1.18) {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k <= 10; ++k) {
      const double m = 2.0 * k - 1.0;
      sum += std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double stephens_p_value(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
}

void require_size(const EmpiricalSample& s, const char* what) {
  if (s.size() < kMinKsSample) {
    throw Error(ErrorCode::kInsufficientSample, std::string(what) + ": sample '" + s.label + "' has " +
                                                    std::to_string(s.size()) + " values, need at least " +
                                                    std::to_string(kMinKsSample));
  }
}

}  // namespace

TestReport ks_one_sample(const EmpiricalSample& sample, const std::function<double(double)>& cdf, double alpha) {
  require_size(sample, "ks_one_sample");
  std::vector<double> x = sample.values;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  TestReport r;
  r.name = sample.label;
  r.kind = "ks1";
  r.statistic = d;
  r.p_value = stephens_p_value(d, n);
  r.n1 = x.size();
  r.alpha = alpha;
  r.passed = r.p_value > alpha;
  r.seed = sample.seed;
  r.params_fingerprint = sample.params_fingerprint;
  return r;
}

TestReport ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b, double alpha) {
  require_size(a, "ks_two_sample");
  require_size(b, "ks_two_sample");
  std::vector<double> x = a.values, y = b.values;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  TestReport r;
  r.name = a.label + " vs " + b.label;
  r.kind = "ks2";
  r.statistic = d;
  r.p_value = stephens_p_value(d, n1 * n2 / (n1 + n2));
  r.n1 = x.size();
  r.n2 = y.size();
  r.alpha = alpha;
  r.passed = r.p_value > alpha;
  r.seed = a.seed;
  r.params_fingerprint = a.params_fingerprint;
  return r;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::kInvalidArgument, "ols_slope needs >= 2 pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kInvalidArgument, "ols_slope: x values are all equal");
  return sxy / sxx;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "loglog_slope needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return ols_slope(lx, ly);
}

namespace {

constexpr std::size_t kSinglePathBatches = 20;
constexpr double kMinSlopeWindow = 10.0;

SlopeEstimate t_interval(const std::vector<double>& slopes) {
  const double r = static_cast<double>(slopes.size());
  double mean = 0.0;
  for (double s : slopes) mean += s;
  mean /= r;
  double var = 0.0;
  for (double s : slopes) var += (s - mean) * (s - mean);
  var /= (r - 1.0);
  const boost::math::students_t dist(r - 1.0);
  const double half = boost::math::quantile(dist, 0.975) * std::sqrt(var / r);
  return {mean, mean - half, mean + half, slopes.size()};
}

std::size_t window_start(const Trajectory<RealVector>& path, double burn_in) {
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw Error(ErrorCode::kInvalidArgument, "burn_in must be in [0, 1)");
  const PathGrid& g = path.grid;
  const double window = (g.horizon - g.t0) * (1.0 - burn_in);
  if (window < kMinSlopeWindow) {
    throw Error(ErrorCode::kInsufficientHorizon, "post burn-in window " + std::to_string(window) +
                                                     " is shorter than " + std::to_string(kMinSlopeWindow));
  }
  return static_cast<std::size_t>(std::ceil(burn_in * static_cast<double>(g.steps)));
}

double segment_slope(const Trajectory<RealVector>& path, std::size_t from, std::size_t to) {
  std::vector<double> t, y;
  t.reserve(to - from);
  y.reserve(to - from);
  for (std::size_t k = from; k < to; ++k) {
    t.push_back(path.grid.time(k));
    y.push_back(path.states[k].back());
  }
  return ols_slope(t, y);
}

}  // namespace

SlopeEstimate lyapunov_slope(std::span<const Trajectory<RealVector>> paths, double burn_in) {
  if (paths.empty()) throw Error(ErrorCode::kInsufficientSample, "lyapunov_slope: no paths");
  if (paths.size() == 1) return lyapunov_slope(paths.front(), burn_in);
  std::vector<double> slopes;
  slopes.reserve(paths.size());
  for (const auto& p : paths) slopes.push_back(segment_slope(p, window_start(p, burn_in), p.states.size()));
  return t_interval(slopes);
}

SlopeEstimate lyapunov_slope(const Trajectory<RealVector>& path, double burn_in) {
  const std::size_t start = window_start(path, burn_in);
  const std::size_t len = path.states.size() - start;
  if (len < 2 * kSinglePathBatches) throw Error(ErrorCode::kInsufficientSample, "lyapunov_slope: path too coarse");
  std::vector<double> slopes;
  for (std::size_t b = 0; b < kSinglePathBatches; ++b) {
    const std::size_t from = start + b * len / kSinglePathBatches;
    const std::size_t to = start + (b + 1) * len / kSinglePathBatches;
    slopes.push_back(segment_slope(path, from, to));
  }
  return t_interval(slopes);
}

std::size_t CovariationSummary::index(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const noexcept {
  return (i * dim + j) * dim * dim + (k * dim + l);
}

double CovariationSummary::max_z_score() const {
  const std::size_t n2 = dim * dim;
  double worst = 0.0;
  auto score = [&](Complex mean, double se, Complex target) {
    const double gap = std::abs(mean - target);
    if (se == 0.0) return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return gap / se;
  };
  for (std::size_t p = 0; p < n2; ++p) {
    for (std::size_t q = 0; q < n2; ++q) {
      const std::size_t idx = p * n2 + q;
      worst = std::max(worst, score(conj_mean[idx], conj_se[idx], p == q ? Complex(2.0) : Complex(0.0)));
      worst = std::max(worst, score(plain_mean[idx], plain_se[idx], Complex(0.0)));
    }
  }
  return worst;
}

CovariationSummary covariation_matrix(std::span<const ComplexMatrix> increments, double dt) {
  constexpr std::size_t kMinIncrements = 1000;
  if (increments.size() < kMinIncrements) {
    throw Error(ErrorCode::kInsufficientSample, "covariation_matrix needs at least 1000 increments, got " +
                                                    std::to_string(increments.size()));
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidStep, "covariation_matrix: dt must be positive");
  CovariationSummary out;
  out.dim = increments.front().dim();
  out.count = increments.size();
  const std::size_t n2 = out.dim * out.dim;
  const std::size_t cells = n2 * n2;
  std::vector<Complex> sum_c(cells), sum_p(cells);
  std::vector<double> sq_c(cells), sq_p(cells);
  for (const auto& m : increments) {
    const auto a = m.data();
    for (std::size_t p = 0; p < n2; ++p) {
      for (std::size_t q = 0; q < n2; ++q) {
        const Complex c = a[p] * std::conj(a[q]) / dt;
        const Complex v = a[p] * a[q] / dt;
        sum_c[p * n2 + q] += c;
        sum_p[p * n2 + q] += v;
        sq_c[p * n2 + q] += std::norm(c);
        sq_p[p * n2 + q] += std::norm(v);
      }
    }
  }
  const double n = static_cast<double>(increments.size());
  out.conj_mean.resize(cells);
  out.plain_mean.resize(cells);
  out.conj_se.resize(cells);
  out.plain_se.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    out.conj_mean[c] = sum_c[c] / n;
    out.plain_mean[c] = sum_p[c] / n;
    // sum |x - mean|^2 = sum |x|^2 - n |mean|^2
    const double vc = std::max(0.0, sq_c[c] - n * std::norm(out.conj_mean[c]));
    const double vp = std::max(0.0, sq_p[c] - n * std::norm(out.plain_mean[c]));
    out.conj_se[c] = std::sqrt(vc / (n * (n - 1.0)));
    out.plain_se[c] = std::sqrt(vp / (n * (n - 1.0)));
  }
  return out;
}

}  // namespace hplab
