#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hplab/error.hpp"
#include "hplab/experiment.hpp"
#include "hplab/measures.hpp"
#include "hplab/parallel.hpp"

namespace hplab {

namespace {

constexpr double kMinHalvingSlope = 0.4;
constexpr double kCovariationZ = 3.0;
constexpr double kDensityTolerance = 1e-8;

struct Replicate {
  std::vector<double> values;  // one entry per statistic name
  bool flagged = false;
  std::vector<PathRow> path;
};

struct Context {
  const ExperimentConfig& c;
  RunResult& out;
  unsigned threads;
};

template <class Fn>
std::vector<Replicate> fan_out(const Context& x, std::size_t count, Fn&& fn) {
  std::vector<Replicate> reps(count);
  parallel_for(count, x.threads, [&](std::size_t r) {
    try {
      reps[r] = fn(r);
    } catch (const Error& e) {
      throw Error(e.code(), "replicate " + std::to_string(r) + ": " + e.detail());
    }
  });
  return reps;
}

/// Appends every replicate to samples.csv rows and returns one sample per
/// statistic with flagged replicates excluded.
std::vector<EmpiricalSample> collect(const Context& x, const std::vector<std::string>& names,
                                     std::vector<Replicate>& reps) {
  std::vector<EmpiricalSample> samples(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    samples[k].label = names[k];
    samples[k].seed = x.c.seed;
    samples[k].params_fingerprint = x.c.fingerprint();
  }
  for (std::size_t r = 0; r < reps.size(); ++r) {
    auto& rep = reps[r];
    if (rep.flagged) x.out.flagged_replicates.push_back(r);
    for (std::size_t k = 0; k < names.size(); ++k) {
      x.out.samples.push_back({r, names[k], rep.values.at(k), rep.flagged});
      samples[k].add(rep.values[k], rep.flagged);
    }
    x.out.paths.insert(x.out.paths.end(), rep.path.begin(), rep.path.end());
    rep.path.clear();
  }
  return samples;
}

TestReport decorate(TestReport r, const Context& x, std::string name) {
  r.name = std::move(name);
  r.seed = x.c.seed;
  r.params_fingerprint = x.c.fingerprint();
  return r;
}

TestReport ks1(const Context& x, const EmpiricalSample& s, const std::function<double(double)>& cdf, std::string name) {
  return decorate(ks_one_sample(s, cdf, x.c.alpha), x, std::move(name));
}

TestReport ks2(const Context& x, const EmpiricalSample& a, const EmpiricalSample& b, std::string name) {
  return decorate(ks_two_sample(a, b, x.c.alpha), x, std::move(name));
}

/// Grid indices kept in paths.csv: at most `points`, always including the end.
std::vector<std::size_t> thinned(std::size_t steps, std::size_t points) {
  const std::size_t stride = std::max<std::size_t>(1, (steps + points - 2) / (points - 1));
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < steps; k += stride) idx.push_back(k);
  idx.push_back(steps);
  return idx;
}

void record_path(Replicate& rep, std::size_t r, const PathGrid& grid, std::size_t points,
                 const std::function<RealVector(std::size_t)>& state) {
  for (std::size_t k : thinned(grid.steps, points)) {
    const RealVector v = state(k);
    for (std::size_t i = 0; i < v.size(); ++i) rep.path.push_back({r, grid.time(k), i, v[i]});
  }
}

struct Spectrum {
  double lmin, lmax, trace, det;
};

Spectrum spectrum(const HermitianMatrix& x) {
  const RealVector l = eigvalsh(x);
  Spectrum s{l.front(), l.back(), 0.0, 1.0};
  for (double v : l) {
    s.trace += v;
    s.det *= v;
  }
  return s;
}

double top_log_sv(const ComplexMatrix& m) { return log_squared_singular_values(m).back(); }

PathGrid even_grid(double t, double h) {
  PathGrid g = PathGrid::with_step(t, h);
  if (g.steps % 2) ++g.steps;
  return g;
}

// ------------------------------------------------------------ experiments ---

void scalar_bougerol(Context& x) {
  const auto& c = x.c;
  const PathGrid grid = PathGrid::with_step(c.t, c.h);
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    Replicate rep;
    RngStream beta = role_stream(c.seed, StreamRole::kScalarBeta, r);
    RngStream gamma = role_stream(c.seed, StreamRole::kScalarGamma, r);
    RngStream ref = role_stream(c.seed, StreamRole::kReference, r);
    const double ito = scalar_bougerol_functional(0.0, 0.0, grid, beta, gamma);
    rep.values = {ito, std::sinh(std::sqrt(c.t) * ref.normal())};
    if (r < c.save_paths) {
      RngStream aux = role_stream(c.seed, StreamRole::kAuxiliary, r);
      const auto path = simulate_scalar(ScalarKind::kSinhBougerol, c.model(), 0.0, grid, aux);
      record_path(rep, r, grid, c.path_points, [&](std::size_t k) { return RealVector{path.states[k]}; });
    }
    return rep;
  });
  const auto s = collect(x, {"ito_sum", "sinh_beta"}, reps);
  const double sd = std::sqrt(c.t);
  x.out.reports.push_back(ks2(x, s[0], s[1], "Ito sum vs sinh(beta_t)"));
  x.out.reports.push_back(ks1(x, s[0], [sd](double v) { return 0.5 * std::erfc(-std::asinh(v) / sd / std::sqrt(2.0)); },
                              "Ito sum vs CDF of sinh(beta_t)"));
}

void pearson4_functional(Context& x) {
  const auto& c = x.c;
  const TailPolicy policy = c.tail_policy(TailPolicy::defaults_for_rate(c.nu));
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    RngStream beta = role_stream(c.seed, StreamRole::kScalarBeta, r);
    RngStream gamma = role_stream(c.seed, StreamRole::kScalarGamma, r);
    const auto res = scalar_bougerol_functional(c.nu, c.mu, policy, c.h, beta, gamma);
    return Replicate{{res.value}, !res.converged, {}};
  });
  const auto s = collect(x, {"functional"}, reps);
  const Density1D f = Density1D::pearson4(c.nu, c.mu);
  x.out.reports.push_back(ks1(x, s[0], [&](double v) { return f.cdf(v); }, "infinite functional vs Pearson IV"));
}

void dufresne(Context& x) {
  const auto& c = x.c;
  const TailPolicy scalar_policy = c.tail_policy(TailPolicy::defaults_for_rate(c.nu));
  const ModelParams p = ModelParams::from_nu(1, c.nu);
  const TailPolicy matrix_policy = c.tail_policy(TailPolicy::defaults_for(p));
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    RngStream beta = role_stream(c.seed, StreamRole::kScalarBeta, r);
    RngStream w = role_stream(c.seed, StreamRole::kMatrixW, r);
    const auto a = scalar_dufresne_functional(c.nu, scalar_policy, c.h, beta);
    const auto m = dufresne_integral(p, matrix_policy, c.h, w);
    return Replicate{{1.0 / (2.0 * a.value), 1.0 / m.value(0, 0).real()}, !a.converged || !m.converged, {}};
  });
  const auto s = collect(x, {"scalar_reciprocal", "matrix_reciprocal"}, reps);
  const Density1D g1 = Density1D::gamma(c.nu), g2 = Density1D::gamma(2.0 * c.nu);
  x.out.reports.push_back(ks1(x, s[0], [&](double v) { return g1.cdf(v); }, "1/(2 a_inf) vs Gamma(nu)"));
  x.out.reports.push_back(
      ks1(x, s[1], [&](double v) { return g2.cdf(v); }, "N=1 matrix: 1/int |M^(-nu)|^2 dt vs Gamma(2 nu)"));
}

void matrix_bougerol(Context& x) {
  const auto& c = x.c;
  const ModelParams p = c.model();
  const PathGrid grid = PathGrid::with_step(c.t, c.h);
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    Replicate rep;
    RngStream g = role_stream(c.seed, StreamRole::kMatrixW, r);
    const auto em = simulate_hp_diffusion(p, HermitianMatrix(p.n), grid, g);
    RngStream w = role_stream(c.seed, StreamRole::kSecondW, r), b = role_stream(c.seed, StreamRole::kSecondB, r);
    const HermitianMatrix integral = bougerol_integral(p, grid, w, b);
    const Spectrum a = spectrum(em.terminal()), z = spectrum(integral);
    rep.values = {a.lmin, a.lmax, a.trace, a.det, z.lmin, z.lmax, z.trace, z.det};
    if (r < c.save_paths)
      record_path(rep, r, grid, c.path_points, [&](std::size_t k) { return eigvalsh(em.states[k]); });
    return rep;
  });
  const auto s = collect(x,
                         {"em_lambda_min", "em_lambda_max", "em_trace", "em_det", "integral_lambda_min",
                          "integral_lambda_max", "integral_trace", "integral_det"},
                         reps);
  const char* what[] = {"lambda_min", "lambda_max", "trace", "det"};
  for (int k = 0; k < 4; ++k)
    x.out.reports.push_back(ks2(x, s[k], s[k + 4], std::string("Euler-Maruyama vs stochastic integral: ") + what[k]));
}

void hua_pickrell_limit(Context& x) {
  const auto& c = x.c;
  const ModelParams p = c.model();
  const TailPolicy policy = c.tail_policy(TailPolicy::defaults_for(p));
  const PathGrid ref_grid = PathGrid::with_step(c.t, c.h);
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    Replicate rep;
    RngStream w = role_stream(c.seed, StreamRole::kMatrixW, r), b = role_stream(c.seed, StreamRole::kMatrixB, r);
    const auto res = bougerol_integral_infinite(p, policy, c.h, w, b);
    rep.flagged = !res.converged;
    if (p.n == 1) {
      rep.values = {res.value(0, 0).real()};
    } else {
      RngStream ref = role_stream(c.seed, StreamRole::kReference, r);
      const RealVector l = simulate_eigen_system(p, RealVector(p.n, 0.0), ref_grid, ref).terminal();
      const Spectrum a = spectrum(res.value);
      double tr = 0.0;
      for (double v : l) tr += v;
      rep.values = {a.lmax, a.trace, l.back(), tr};
    }
    return rep;
  });
  if (p.n == 1) {
    const auto s = collect(x, {"x_infinity"}, reps);
    const Density1D f = Density1D::hp_eigen_1d(p.s());
    x.out.reports.push_back(ks1(x, s[0], [&](double v) { return f.cdf(v); }, "infinite functional vs N=1 density"));
  } else {
    const auto s = collect(x, {"lambda_max", "trace", "eigen_lambda_max", "eigen_trace"}, reps);
    x.out.reports.push_back(ks2(x, s[0], s[2], "infinite functional vs eigenvalue diffusion at t: lambda_max"));
    x.out.reports.push_back(ks2(x, s[1], s[3], "infinite functional vs eigenvalue diffusion at t: trace"));
  }
}

void invariance(Context& x) {
  const auto& c = x.c;
  const ModelParams p = c.model();
  const TailPolicy policy = c.tail_policy(TailPolicy::defaults_for(p));
  const PathGrid grid = PathGrid::with_step(c.t, c.h);
  const Density1D m = Density1D::reversible_m(p.s(), p.n);
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    Replicate rep;
    RngStream w = role_stream(c.seed, StreamRole::kMatrixW, r), b = role_stream(c.seed, StreamRole::kMatrixB, r);
    const auto x0 = bougerol_integral_infinite(p, policy, c.init_h, w, b);
    rep.flagged = !x0.converged;
    RngStream g = role_stream(c.seed, StreamRole::kSecondW, r);
    const auto path = simulate_hp_diffusion(p, x0.value, grid, g);

    RngStream init = role_stream(c.seed, StreamRole::kInitial, r);
    RngStream beta = role_stream(c.seed, StreamRole::kScalarBeta, r);
    const double w0 = m.sample(init);
    const double wt = simulate_scalar(ScalarKind::kPearson1d, p, w0, grid, beta).terminal();

    const Spectrum a = spectrum(path.initial()), z = spectrum(path.terminal());
    rep.values = {a.lmax, a.trace, z.lmax, z.trace, w0, wt};
    if (r < c.save_paths)
      record_path(rep, r, grid, c.path_points, [&](std::size_t k) { return eigvalsh(path.states[k]); });
    return rep;
  });
  const auto s = collect(
      x, {"initial_lambda_max", "initial_trace", "final_lambda_max", "final_trace", "m_initial", "m_final"}, reps);
  x.out.reports.push_back(ks2(x, s[0], s[2], "initial vs final: lambda_max"));
  x.out.reports.push_back(ks2(x, s[1], s[3], "initial vs final: trace"));
  x.out.reports.push_back(ks2(x, s[4], s[5], "one-dimensional diffusion from m_s: initial vs final"));
}

void time_reversal(Context& x) {
  const auto& c = x.c;
  const ModelParams p = c.model();
  const PathGrid grid = even_grid(c.t, c.h);
  const std::size_t half = grid.steps / 2;
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    Replicate rep;
    RngStream w = role_stream(c.seed, StreamRole::kMatrixW, r);
    const auto pair = simulate_inverse_pair(p, grid, w);
    const ComplexMatrix& inv_t = pair.inverse.terminal();
    RngStream w2 = role_stream(c.seed, StreamRole::kSecondW, r);
    const auto ref = simulate_exp_bm(p, -1, grid, w2);
    rep.values = {top_log_sv(inv_t), top_log_sv(inv_t * pair.forward.states[grid.steps - half]),
                  top_log_sv(ref.terminal()), top_log_sv(ref.states[half])};
    if (r < c.save_paths)
      record_path(rep, r, grid, c.path_points, [&](std::size_t k) {
        return log_squared_singular_values(inv_t * pair.forward.states[grid.steps - k]);
      });
    return rep;
  });
  const auto s = collect(x, {"reversed_T", "reversed_half", "reference_T", "reference_half"}, reps);
  x.out.reports.push_back(ks2(x, s[0], s[2], "log lambda_max: reversed path vs M^(-nu) at T"));
  x.out.reports.push_back(ks2(x, s[1], s[3], "log lambda_max: reversed path vs M^(-nu) at T/2"));
}

void lyapunov(Context& x) {
  const auto& c = x.c;
  const ModelParams p = c.model();
  const PathGrid grid = PathGrid::with_step(c.t, c.h);
  const std::size_t first = static_cast<std::size_t>(std::ceil(c.burn_in * grid.steps));
  std::vector<Trajectory<RealVector>> paths(c.replicates);
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    Replicate rep;
    RngStream w = role_stream(c.seed, StreamRole::kMatrixW, r);
    paths[r] = simulate_singular_log(p, grid, w);
    const auto& path = paths[r];
    std::vector<double> ts, ys;
    for (std::size_t k = first; k <= grid.steps; ++k) {
      ts.push_back(grid.time(k));
      ys.push_back(path.states[k].back());
    }
    rep.values = {ols_slope(ts, ys)};
    if (r < c.save_paths) record_path(rep, r, grid, c.path_points, [&](std::size_t k) { return path.states[k]; });
    return rep;
  });
  collect(x, {"growth_rate"}, reps);
  const SlopeEstimate est = lyapunov_slope(paths, c.burn_in);

  const double bound = -2.0 * p.nu() + p.n - 1.0;
  const double hw = est.half_width();
  const boost::math::students_t dist(static_cast<double>(est.batches) - 1.0);
  const double se = hw / boost::math::quantile(dist, 0.975);
  TestReport rep;
  rep.kind = "slope";
  rep.statistic = est.slope;
  rep.threshold = bound;
  rep.n1 = est.batches;
  rep.alpha = 0.05;
  const double z = se > 0.0 ? (est.slope - bound) / se : 0.0;
  if (p.n == 1) {
    rep.passed = std::abs(est.slope - bound) <= hw;
    rep.p_value = se > 0.0 ? 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z))) : 1.0;
  } else {
    rep.passed = est.slope <= bound + hw;
    rep.p_value = se > 0.0 ? boost::math::cdf(boost::math::complement(dist, z)) : (est.slope <= bound ? 1.0 : 0.0);
  }
  rep.detail = "95% CI [" + std::to_string(est.ci_low) + ", " + std::to_string(est.ci_high) + "]";
  x.out.reports.push_back(decorate(rep, x,
                                   p.n == 1 ? "growth rate of log |M^(-nu)|^2 equals -2 nu"
                                            : "growth rate of top log singular value <= -2 nu + N - 1"));
}

void explicit_solution(Context& x) {
  const auto& c = x.c;
  const ModelParams p = c.model();
  const std::size_t coarse = static_cast<std::size_t>(std::max(1.0, std::round(c.t / c.h)));
  const std::size_t fine = coarse << (c.levels - 1);
  const double fine_dt = c.t / static_cast<double>(fine);
  const HermitianMatrix x0(p.n);
  std::vector<std::vector<ComplexMatrix>> gammas(c.replicates);
  auto reps = fan_out(x, c.replicates, [&](std::size_t r) {
    Replicate rep;
    RngStream sw = role_stream(c.seed, StreamRole::kMatrixW, r), sb = role_stream(c.seed, StreamRole::kMatrixB, r);
    const auto fw = draw_matrix_increments(sw, p.n, fine_dt, fine);
    const auto fb = draw_matrix_increments(sb, p.n, fine_dt, fine);
    for (int l = 0; l < c.levels; ++l) {
      const std::size_t steps = coarse << l;
      const PathGrid grid = PathGrid::uniform(c.t, steps);
      ReplayMatrixNoise rw(fw, fine / steps), rb(fb, fine / steps);
      const auto sol = explicit_solution_path(p, x0, grid, rw, rb);
      auto gamma = reconstruct_gamma_increments(sol);
      ReplayMatrixNoise rg(gamma);
      const auto em = simulate_hp_diffusion(p, x0, grid, rg);
      rep.values.push_back(max_abs_diff(em.terminal().matrix(), sol.path.terminal().matrix()));
      if (l + 1 == c.levels) {
        gammas[r] = std::move(gamma);
        if (r < c.save_paths)
          record_path(rep, r, grid, c.path_points, [&](std::size_t k) { return eigvalsh(sol.path.states[k]); });
      }
    }
    return rep;
  });
  std::vector<std::string> names;
  std::vector<double> hs;
  for (int l = 0; l < c.levels; ++l) {
    names.push_back("gap_level_" + std::to_string(l));
    hs.push_back(c.t / static_cast<double>(coarse << l));
  }
  const auto s = collect(x, names, reps);
  std::vector<double> means;
  for (const auto& sample : s) {
    double sum = 0.0;
    for (double v : sample.values) sum += v;
    means.push_back(sum / static_cast<double>(sample.size()));
  }
  TestReport slope;
  slope.kind = "slope";
  slope.statistic = loglog_slope(hs, means);
  slope.p_value = std::numeric_limits<double>::quiet_NaN();
  slope.threshold = kMinHalvingSlope;
  slope.n1 = c.replicates;
  slope.passed = slope.statistic >= kMinHalvingSlope;
  x.out.reports.push_back(decorate(slope, x, "terminal gap step-halving slope"));

  std::vector<ComplexMatrix> pooled;
  pooled.reserve(fine * c.replicates);
  for (auto& g : gammas) pooled.insert(pooled.end(), g.begin(), g.end());
  const CovariationSummary cov = covariation_matrix(pooled, fine_dt);
  TestReport qc;
  qc.kind = "covariation";
  qc.statistic = cov.max_z_score();
  qc.p_value = std::numeric_limits<double>::quiet_NaN();
  qc.threshold = kCovariationZ;
  qc.n1 = cov.count;
  qc.passed = cov.matches_complex_bm(kCovariationZ);
  x.out.reports.push_back(decorate(qc, x, "reconstructed noise covariation, max |z|"));
}

void density_eval(Context& x) {
  const auto& c = x.c;
  const ModelParams p = c.model();
  const Density1D m = Density1D::reversible_m(p.s(), p.n);
  for (std::size_t k = 0; k < c.points; ++k) {
    const double v = c.x_min + (c.x_max - c.x_min) * static_cast<double>(k) / static_cast<double>(c.points - 1);
    x.out.density.push_back({v, m.pdf(v), m.cdf(v)});
  }

  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < x.out.density.size(); ++k) {
    const auto& a = x.out.density[k];
    const auto& b = x.out.density[k + 1];
    const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double v) { return m.pdf(v); }, a.x, b.x, 10, 1e-14);
    worst = std::max(worst, std::abs((b.cdf - a.cdf) - mass));
  }
  TestReport quad;
  quad.kind = "quadrature";
  quad.statistic = worst;
  quad.p_value = std::numeric_limits<double>::quiet_NaN();
  quad.threshold = kDensityTolerance;
  quad.n1 = c.points;
  quad.passed = worst <= kDensityTolerance;
  x.out.reports.push_back(decorate(quad, x, "CDF increments vs Gauss-Kronrod integral of the pdf"));

  if (p.n == 1 && p.s_re == 0.0 && p.s_im == 0.0) {
    double rel = 0.0;
    for (const auto& row : x.out.density) {
      const double cauchy = 1.0 / (std::numbers::pi * (1.0 + row.x * row.x));
      rel = std::max(rel, std::abs(row.pdf - cauchy) / cauchy);
    }
    TestReport cr = quad;
    cr.kind = "closed-form";
    cr.statistic = rel;
    cr.passed = rel <= kDensityTolerance;
    x.out.reports.push_back(decorate(cr, x, "pdf vs standard Cauchy, max relative error"));
  }
}

}  // namespace

bool RunResult::passed() const noexcept {
  return std::all_of(reports.begin(), reports.end(), [](const TestReport& r) { return r.passed; });
}

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunResult out;
  out.config = config;
  out.threads_used = resolve_threads(config.threads);
  Context x{out.config, out, out.threads_used};
  const auto start = std::chrono::steady_clock::now();
  switch (config.experiment) {
    case ExperimentKind::kScalarBougerol: scalar_bougerol(x); break;
    case ExperimentKind::kPearson4Functional: pearson4_functional(x); break;
    case ExperimentKind::kDufresne: dufresne(x); break;
    case ExperimentKind::kMatrixBougerol: matrix_bougerol(x); break;
    case ExperimentKind::kHuaPickrellLimit: hua_pickrell_limit(x); break;
    case ExperimentKind::kInvariance: invariance(x); break;
    case ExperimentKind::kTimeReversal: time_reversal(x); break;
    case ExperimentKind::kLyapunov: lyapunov(x); break;
    case ExperimentKind::kExplicitSolution: explicit_solution(x); break;
    case ExperimentKind::kDensityEval: density_eval(x); break;
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

int exit_code_for(ErrorCode code) noexcept { return is_numerical(code) ? 3 : 2; }

DeterminantStudy determinant_identity_study(const ModelParams& params, double horizon, double coarsest_h, int levels,
                                            std::size_t replicates, std::uint64_t seed, unsigned threads) {
  params.validate();
  if (!(horizon > 0.0) || !(coarsest_h > 0.0) || levels < 2 || replicates < 1)
    throw Error(ErrorCode::kInvalidArgument, "determinant study needs horizon, h > 0, levels >= 2, replicates >= 1");
  const std::size_t coarse = static_cast<std::size_t>(std::max(1.0, std::round(horizon / coarsest_h)));
  const std::size_t fine = coarse << (levels - 1);
  const std::size_t n = static_cast<std::size_t>(params.n);
  const double shift = params.nu() * params.n * horizon;

  std::vector<std::vector<double>> defects(replicates);
  parallel_for(replicates, resolve_threads(threads), [&](std::size_t r) {
    RngStream st = role_stream(seed, StreamRole::kMatrixW, r);
    const auto incs = draw_matrix_increments(st, n, horizon / static_cast<double>(fine), fine);
    ComplexMatrix w(n);
    for (const auto& d : incs) w += d;
    const Complex target = std::exp(w.trace() / std::numbers::sqrt2 + shift);
    for (int l = 0; l < levels; ++l) {
      const std::size_t steps = coarse << l;
      ReplayMatrixNoise noise(incs, fine / steps);
      const auto path = simulate_exp_bm(params, +1, PathGrid::uniform(horizon, steps), noise);
      defects[r].push_back(std::abs(det_and_trace(path.terminal()).det - target));
    }
  });

  DeterminantStudy study;
  for (int l = 0; l < levels; ++l) {
    double sum = 0.0;
    for (const auto& d : defects) sum += d[l];
    study.steps.push_back(horizon / static_cast<double>(coarse << l));
    study.mean_defect.push_back(sum / static_cast<double>(replicates));
  }
  study.slope = loglog_slope(study.steps, study.mean_defect);
  return study;
}

}  // namespace hplab
