#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hplab/error.hpp"
#include "hplab/functionals.hpp"
#include "hplab/measures.hpp"
#include "hplab/stats.hpp"

using namespace hplab;

TEST_SUITE("functionals") {
  TEST_CASE("tail policy defaults and validation") {
    const TailPolicy a = TailPolicy::defaults_for(ModelParams::from_nu(1, 2.0));
    CHECK(a.eps == 1e-6);
    CHECK(a.block == 1.0);
    CHECK(a.max_t == doctest::Approx(10.0));
    CHECK(TailPolicy::defaults_for(ModelParams::from_nu(2, 0.55)).max_t == doctest::Approx(200.0));
    CHECK(TailPolicy::defaults_for(ModelParams::from_nu(2, 1.0)).max_t == doctest::Approx(40.0));
    CHECK_THROWS_AS((TailPolicy{1e-6, 2.0, 1.0}.validate()), Error);
    CHECK_THROWS_AS((TailPolicy{0.0, 1.0, 10.0}.validate()), Error);
  }

  TEST_CASE("Bougerol integral noise-off closed forms") {
    ZeroMatrixNoise w, b;
    const ModelParams p{2, 0.3, 0.8};  // nu = 1.3, mu = 0.8 sqrt2
    const double nu = p.nu(), mu = p.mu();
    const HermitianMatrix finite = bougerol_integral(p, PathGrid::uniform(2.0, 8192), w, b);
    const double expect = std::sqrt(2.0) * mu * (1.0 - std::exp(-2.0 * nu * 2.0)) / (2.0 * nu);
    CHECK(finite(0, 0).real() == doctest::Approx(expect).epsilon(1e-3));
    CHECK(finite(1, 1).real() == doctest::Approx(expect).epsilon(1e-3));
    CHECK(std::abs(finite(0, 1)) == 0.0);

    const TailPolicy policy{1e-9, 1.0, 60.0};
    const auto inf = bougerol_integral_infinite(p, policy, 1.0 / 1024, w, b);
    CHECK(inf.converged);
    CHECK(inf.value(0, 0).real() == doctest::Approx(std::sqrt(2.0) * mu / (2.0 * nu)).epsilon(1e-3));
  }

  TEST_CASE("Bougerol integral is exactly Hermitian") {
    RngStream a(1, 0), b(1, 1);
    const HermitianMatrix x = bougerol_integral({3, 0.1, 0.4}, PathGrid::uniform(1.0, 256), a, b);
    CHECK(hermiticity_defect(x.matrix()) == 0.0);
  }

  TEST_CASE("infinite Bougerol functional at N=1, s=0 is standard Cauchy") {
    const ModelParams p{1, 0.0, 0.0};
    const TailPolicy policy = TailPolicy::defaults_for(p);
    EmpiricalSample s;
    s.label = "N=1 s=0";
    for (int r = 0; r < 2000; ++r) {
      RngStream w = role_stream(15, StreamRole::kMatrixW, r), b = role_stream(15, StreamRole::kMatrixB, r);
      const auto res = bougerol_integral_infinite(p, policy, 1.0 / 128, w, b);
      s.add(res.value(0, 0).real(), !res.converged);
    }
    CHECK(s.flagged < 20);
    CHECK(ks_one_sample(s, [](double x) { return 0.5 + std::atan(x) / std::numbers::pi; }).p_value > 1e-3);
  }

  TEST_CASE("tail policy at nu=2, N=1: flagged rate and decaying blocks") {
    const ModelParams p = ModelParams::from_nu(1, 2.0);
    const TailPolicy policy{1e-6, 1.0, 60.0};
    int flagged = 0;
    const int reps = 500;
    std::vector<double> first(3, 0.0);
    for (int r = 0; r < reps; ++r) {
      RngStream w = role_stream(16, StreamRole::kMatrixW, r), b = role_stream(16, StreamRole::kMatrixB, r);
      const auto res = bougerol_integral_infinite(p, policy, 1.0 / 128, w, b);
      flagged += !res.converged;
      REQUIRE(res.block_norms.size() >= 3);
      for (int k = 0; k < 3; ++k) first[k] += std::log(res.block_norms[k]) / reps;
    }
    CHECK(flagged < reps / 100);
    CHECK(first[1] < first[0]);
    CHECK(first[2] < first[1]);
  }

  TEST_CASE("Dufresne functionals") {
    ZeroMatrixNoise zero;
    const auto det = dufresne_integral(ModelParams::from_nu(1, 1.0), TailPolicy{1e-10, 1.0, 40.0}, 1.0 / 4096, zero);
    CHECK(det.value(0, 0).real() == doctest::Approx(0.5).epsilon(1e-3));

    // scalar: 1 / (2 a) with a = int exp(2 (B_t - nu t)) dt is Gamma(nu)
    EmpiricalSample scalar;
    scalar.label = "scalar Dufresne nu=1";
    for (int r = 0; r < 2000; ++r) {
      RngStream st = role_stream(17, StreamRole::kScalarBeta, r);
      const auto res = scalar_dufresne_functional(1.0, TailPolicy{1e-6, 1.0, 40.0}, 1.0 / 256, st);
      scalar.add(1.0 / (2.0 * res.value), !res.converged);
    }
    const Density1D exp1 = Density1D::gamma(1.0);
    CHECK(ks_one_sample(scalar, [&](double x) { return exp1.cdf(x); }).p_value > 1e-3);

    // matrix at N=1: |M|^2 = exp(sqrt2 Re W - 2 nu t), so the reciprocal of
    // the integral is Gamma(2 nu) rather than 2 Gamma(nu)
    const ModelParams p = ModelParams::from_nu(1, 1.0);
    EmpiricalSample matrix;
    matrix.label = "matrix Dufresne N=1";
    for (int r = 0; r < 2000; ++r) {
      RngStream st = role_stream(18, StreamRole::kMatrixW, r);
      const auto res = dufresne_integral(p, TailPolicy::defaults_for(p), 1.0 / 256, st);
      matrix.add(1.0 / res.value(0, 0).real(), !res.converged);
    }
    const Density1D g2 = Density1D::gamma(2.0);
    CHECK(ks_one_sample(matrix, [&](double x) { return g2.cdf(x); }).p_value > 1e-3);
    CHECK(ks_one_sample(matrix, [&](double x) { return exp1.cdf(0.5 * x); }).p_value < 1e-3);

    RngStream st(19, 0);
    const HermitianMatrix psd = dufresne_integral(ModelParams::from_nu(3, 1.5), PathGrid::uniform(2.0, 256), st);
    CHECK(eigvalsh(psd).front() >= 0.0);
  }

  TEST_CASE("scalar Bougerol functional") {
    ZeroVectorNoise beta, gamma;
    const double nu = 0.7, mu = 0.4;
    const double v = scalar_bougerol_functional(nu, mu, PathGrid::uniform(3.0, 1 << 14), beta, gamma);
    CHECK(v == doctest::Approx(-mu * (1.0 - std::exp(-nu * 3.0)) / nu).epsilon(1e-3));

    EmpiricalSample ito, transform;
    ito.label = "Ito sum";
    transform.label = "sinh(beta_1)";
    for (int r = 0; r < 4000; ++r) {
      RngStream b = role_stream(20, StreamRole::kScalarBeta, r), g = role_stream(20, StreamRole::kScalarGamma, r);
      ito.add(scalar_bougerol_functional(0.0, 0.0, PathGrid::uniform(1.0, 1024), b, g));
      RngStream ref = role_stream(20, StreamRole::kReference, r);
      transform.add(std::sinh(ref.normal()));
    }
    CHECK(ks_two_sample(ito, transform).p_value > 1e-3);

    EmpiricalSample pearson;
    pearson.label = "nu=1 mu=0";
    for (int r = 0; r < 2000; ++r) {
      RngStream b = role_stream(21, StreamRole::kScalarBeta, r), g = role_stream(21, StreamRole::kScalarGamma, r);
      const auto res = scalar_bougerol_functional(1.0, 0.0, TailPolicy{1e-6, 1.0, 40.0}, 1.0 / 256, b, g);
      pearson.add(res.value, !res.converged);
    }
    // c / (1 + x^2)^(3/2) has CDF (1 + x / sqrt(1 + x^2)) / 2
    CHECK(ks_one_sample(pearson, [](double x) { return 0.5 * (1.0 + x / std::sqrt(1.0 + x * x)); }).p_value > 1e-3);
  }

  TEST_CASE("explicit solution: zero-noise path and coupled residual") {
    ZeroMatrixNoise w, b;
    const auto flat = explicit_solution_path({2, 0.4, 0.0}, HermitianMatrix(2), PathGrid::uniform(1.0, 64), w, b);
    for (const auto& x : flat.path.states) CHECK(x.max_abs() == 0.0);

    const ModelParams p{2, 0.2, 0.3};
    const HermitianMatrix x0 = HermitianMatrix::diagonal(std::vector<double>{-0.4, 0.9});
    const std::size_t fine_steps = 2048;
    std::vector<double> hs, gaps(6, 0.0);
    const int reps = 16;
    for (int l = 0; l < 6; ++l) hs.push_back(std::ldexp(1.0, -6 - l));
    for (int r = 0; r < reps; ++r) {
      RngStream sw = role_stream(22, StreamRole::kMatrixW, r), sb = role_stream(22, StreamRole::kMatrixB, r);
      const auto fw = draw_matrix_increments(sw, 2, 1.0 / fine_steps, fine_steps);
      const auto fb = draw_matrix_increments(sb, 2, 1.0 / fine_steps, fine_steps);
      for (int l = 0; l < 6; ++l) {
        const std::size_t steps = std::size_t{64} << l;
        ReplayMatrixNoise rw(fw, fine_steps / steps), rb(fb, fine_steps / steps);
        const auto sol = explicit_solution_path(p, x0, PathGrid::uniform(1.0, steps), rw, rb);
        const auto gamma = reconstruct_gamma_increments(sol);
        ReplayMatrixNoise rg(gamma);
        const auto em = simulate_hp_diffusion(p, x0, PathGrid::uniform(1.0, steps), rg);
        gaps[l] += max_abs_diff(em.terminal().matrix(), sol.path.terminal().matrix()) / reps;
      }
    }
    CHECK(loglog_slope(hs, gaps) >= 0.4);
  }

  TEST_CASE("reconstructed Gamma has complex Brownian covariation") {
    const ModelParams p{2, 0.1, -0.2};
    std::vector<ComplexMatrix> pooled;
    const PathGrid g = PathGrid::uniform(1.0, 256);
    for (int r = 0; r < 16; ++r) {
      RngStream sw = role_stream(23, StreamRole::kMatrixW, r), sb = role_stream(23, StreamRole::kMatrixB, r);
      const auto sol = explicit_solution_path(p, HermitianMatrix(2), g, sw, sb);
      const auto gamma = reconstruct_gamma_increments(sol);
      pooled.insert(pooled.end(), gamma.begin(), gamma.end());
    }
    const auto cov = covariation_matrix(pooled, g.step());
    CHECK(cov.matches_complex_bm(3.0));
  }
}
