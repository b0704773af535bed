#include <doctest.h>

#include <cmath>
#include <functional>

#include "hplab/error.hpp"
#include "hplab/measures.hpp"
#include "hplab/sde.hpp"
#include "hplab/stats.hpp"

using namespace hplab;

namespace {

double normal_cdf(double x, double mean, double var) { return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var)); }

// Mean terminal gap between step sizes h and h/2 driven by one recorded
// fine path, for h = 2^-6 .. 2^-(levels+5); returns the log-log slope.
template <class Run>
double halving_slope(int levels, int reps, Run run) {
  std::vector<double> hs, gaps;
  for (int l = 0; l < levels; ++l) {
    hs.push_back(std::ldexp(1.0, -6 - l));
    gaps.push_back(0.0);
  }
  for (int r = 0; r < reps; ++r) {
    for (int l = 0; l < levels; ++l) gaps[l] += run(r, l) / reps;
  }
  return loglog_slope(hs, gaps);
}

}  // namespace

TEST_SUITE("sde") {
  TEST_CASE("ModelParams derived quantities") {
    const ModelParams p{3, 0.25, -0.5};
    CHECK(p.nu() == doctest::Approx(1.75));
    CHECK(p.mu() == doctest::Approx(-std::sqrt(2.0) * 0.5));
    CHECK(ModelParams::from_nu(2, 1.0).s_re == doctest::Approx(0.0));
    CHECK_THROWS_AS((ModelParams{0, 0.0, 0.0}.validate()), Error);
    CHECK_THROWS_AS((ModelParams{1, -0.5, 0.0}.validate(true)), Error);
    CHECK_NOTHROW((ModelParams{1, -0.5, 0.0}.validate(false)));
  }

  TEST_CASE("PathGrid") {
    const PathGrid g{0.5, 2.5, 8};
    CHECK(g.step() == 0.25);
    CHECK(g.time(8) == 2.5);
    CHECK_THROWS_AS((PathGrid{0.0, 1.0, 0}.validate()), Error);
    CHECK_THROWS_AS((PathGrid{1.0, 1.0, 4}.validate()), Error);
    CHECK(PathGrid::with_step(1.0, 1.0 / 64).steps == 64);
  }

  TEST_CASE("exp BM zero-noise limits") {
    const ModelParams p = ModelParams::from_nu(2, 1.0);
    const PathGrid g = PathGrid::uniform(1.0, 4096);
    ZeroMatrixNoise zero;
    const auto fwd = simulate_exp_bm(p, +1, g, zero);
    CHECK(fwd.states.size() == g.steps + 1);
    CHECK(fwd.initial() == ComplexMatrix::identity(2));
    CHECK(max_abs_diff(fwd.terminal(), std::exp(1.0) * ComplexMatrix::identity(2)) < 1e-3);
    const auto pair = simulate_inverse_pair(p, g, zero);
    CHECK(max_abs_diff(pair.inverse.terminal(), std::exp(-1.0) * ComplexMatrix::identity(2)) < 1e-3);
  }

  TEST_CASE("exp BM at N=1: log|M_T| is Gaussian(nu T, T/2)") {
    const ModelParams p = ModelParams::from_nu(1, 0.7);
    const PathGrid g = PathGrid::uniform(1.0, 256);
    EmpiricalSample s;
    s.label = "log|M_T|";
    for (int r = 0; r < 10000; ++r) {
      RngStream st = role_stream(101, StreamRole::kMatrixW, r);
      s.add(std::log(std::abs(simulate_exp_bm(p, +1, g, st).terminal()(0, 0))));
    }
    const auto rep = ks_one_sample(s, [&](double x) { return normal_cdf(x, 0.7, 0.5); });
    CHECK(rep.p_value > 1e-3);
  }

  TEST_CASE("determinant identity defect shrinks under step halving") {
    const ModelParams p = ModelParams::from_nu(3, 1.0);
    const std::size_t fine_steps = 2048;
    const double slope = halving_slope(6, 24, [&](int r, int l) {
      RngStream st = role_stream(5, StreamRole::kMatrixW, r);
      const auto fine = draw_matrix_increments(st, 3, 1.0 / fine_steps, fine_steps);
      ComplexMatrix w(3);
      for (const auto& d : fine) w += d;
      const Complex target = std::exp(w.trace() / std::sqrt(2.0) + 3.0);
      ReplayMatrixNoise noise(fine, fine_steps / (std::size_t{64} << l));
      const auto path = simulate_exp_bm(p, +1, PathGrid::uniform(1.0, std::size_t{64} << l), noise);
      return std::abs(det_and_trace(path.terminal()).det - target);
    });
    CHECK(slope >= 0.4);
  }

  TEST_CASE("inverse pair product defect") {
    const ModelParams p = ModelParams::from_nu(2, 0.5, 0.3);
    const std::size_t fine_steps = 4096;
    std::vector<double> defect(5, 0.0);
    const int reps = 16;
    for (int r = 0; r < reps; ++r) {
      RngStream st = role_stream(8, StreamRole::kMatrixW, r);
      const auto fine = draw_matrix_increments(st, 2, 1.0 / fine_steps, fine_steps);
      for (int l = 0; l < 5; ++l) {
        const std::size_t steps = std::size_t{256} << l;
        ReplayMatrixNoise noise(fine, fine_steps / steps);
        const auto pair = simulate_inverse_pair(p, PathGrid::uniform(1.0, steps), noise);
        double worst = 0.0;
        for (std::size_t k = 0; k <= steps; ++k)
          worst = std::max(worst, max_abs_diff(pair.forward.states[k] * pair.inverse.states[k],
                                               ComplexMatrix::identity(2)));
        defect[l] += worst / reps;
      }
    }
    for (int l = 1; l < 5; ++l) CHECK(defect[l] < defect[l - 1]);
    // C h^(1/2) with C from the coarsest level bounds every finer level
    const double c = defect[0] / std::sqrt(1.0 / 256);
    for (int l = 1; l < 5; ++l) CHECK(defect[l] <= 1.5 * c * std::sqrt(1.0 / (256 << l)));
  }

  TEST_CASE("HP diffusion zero-noise limits and Hermiticity") {
    ZeroMatrixNoise zero;
    const auto flat = simulate_hp_diffusion({1, 0.3, 0.0}, HermitianMatrix(1), PathGrid::uniform(1.0, 64), zero);
    for (const auto& x : flat.states) CHECK(x.max_abs() == 0.0);

    const auto line = simulate_hp_diffusion({1, 0.0, 1.0}, HermitianMatrix(1), PathGrid::uniform(1.5, 64), zero);
    CHECK(line.terminal()(0, 0).real() == doctest::Approx(3.0).epsilon(1e-12));

    RngStream st(4, 0);
    const auto noisy = simulate_hp_diffusion({3, 0.2, -0.4}, HermitianMatrix(3), PathGrid::uniform(1.0, 512), st);
    double worst = 0.0;
    for (const auto& x : noisy.states) worst = std::max(worst, hermiticity_defect(x.matrix()));
    CHECK(worst == 0.0);
  }

  TEST_CASE("eigenvalue drift coefficient identities") {
    // N = 1: the matrix drift and the eigenvalue drift coincide.
    for (double s_re : {0.0, 0.5, 1.3})
      for (double s_im : {-1.0, 0.0, 0.7})
        for (double x : {-2.0, 0.0, 0.4}) {
          const ModelParams p{1, s_re, s_im};
          const double d[] = {x};
          double eig = 0.0;
          eigen_drift(p, d, std::span<double>(&eig, 1));
          CHECK(hp_drift(p, HermitianMatrix::diagonal(d))(0, 0).real() == doctest::Approx(eig));
          CHECK(eig == doctest::Approx(-2.0 * s_re * x + 2.0 * s_im));
        }
    // N >= 2, diagonal X: the matrix drift plus the Ito term
    // sum_{j != i} |dX_ij|^2 / (x_i - x_j) with |dX_ij|^2 = (2 + x_i^2 + x_j^2) dt
    // reproduces the eigenvalue drift.
    const ModelParams p{3, 0.4, -0.6};
    const double x[] = {-1.5, 0.2, 2.0};
    double eig[3];
    eigen_drift(p, x, eig);
    const HermitianMatrix drift = hp_drift(p, HermitianMatrix::diagonal(x));
    for (int i = 0; i < 3; ++i) {
      double ito = 0.0;
      for (int j = 0; j < 3; ++j)
        if (j != i) ito += (2.0 + x[i] * x[i] + x[j] * x[j]) / (x[i] - x[j]);
      CHECK(drift(i, i).real() + ito == doctest::Approx(eig[i]));
    }
  }

  TEST_CASE("eigen system rarely collides at h = 1e-4") {
    const ModelParams p{2, 0.0, 0.0};
    int aborted = 0;
    for (int r = 0; r < 200; ++r) {
      RngStream st = role_stream(31, StreamRole::kScalarBeta, r);
      try {
        const auto path = simulate_eigen_system(p, {-0.5, 0.5}, PathGrid::uniform(0.1, 1000), st);
        for (const auto& v : path.states) REQUIRE(v[0] < v[1]);
      } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::kCollisionAbort);
        ++aborted;
      }
    }
    CHECK(aborted < 2);
  }

  TEST_CASE("eigen system zero-noise repulsion matches an RK4 oracle") {
    const ModelParams p{2, 0.0, 0.0};
    ZeroVectorNoise zero;
    RngStream bridge(1, 1);
    const auto path = simulate_eigen_system(p, {-1.0, 1.0}, PathGrid::uniform(0.1, 1000), zero, bridge);
    for (const auto& v : path.states) CHECK(v[1] - v[0] >= 2.0 - 1e-12);

    // independent RK4 on the same ODE at a finer step, from an asymmetric start
    auto f = [&](std::array<double, 2> x) {
      const double a = 2 * (1 + x[0] * x[0]) / (x[0] - x[1]) - 2 * x[0];
      const double b = 2 * (1 + x[1] * x[1]) / (x[1] - x[0]) - 2 * x[1];
      return std::array<double, 2>{a, b};
    };
    std::array<double, 2> x{-1.0, 0.5};
    const double h = 1e-5;
    for (int k = 0; k < 10000; ++k) {
      auto k1 = f(x);
      auto k2 = f({x[0] + h / 2 * k1[0], x[1] + h / 2 * k1[1]});
      auto k3 = f({x[0] + h / 2 * k2[0], x[1] + h / 2 * k2[1]});
      auto k4 = f({x[0] + h * k3[0], x[1] + h * k3[1]});
      for (int i = 0; i < 2; ++i) x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    const auto em = simulate_eigen_system(p, {-1.0, 0.5}, PathGrid::uniform(0.1, 1000), zero, bridge);
    CHECK(em.terminal()[0] == doctest::Approx(x[0]).epsilon(1e-3));
    CHECK(em.terminal()[1] == doctest::Approx(x[1]).epsilon(1e-3));
    CHECK(em.terminal()[1] - em.terminal()[0] > 1.5);
  }

  TEST_CASE("eigen system matches the matrix spectrum in law") {
    const ModelParams p{2, 0.3, 0.4};
    const PathGrid g = PathGrid::uniform(0.5, 512);
    EmpiricalSample a, b;
    a.label = "matrix lambda_max";
    b.label = "eigen lambda_max";
    for (int r = 0; r < 3000; ++r) {
      RngStream sa = role_stream(77, StreamRole::kMatrixB, r);
      a.add(eigvalsh(simulate_hp_diffusion(p, HermitianMatrix(2), g, sa).terminal()).back());
      RngStream sb = role_stream(77, StreamRole::kScalarBeta, r);
      b.add(simulate_eigen_system(p, {0.0, 0.0}, g, sb).terminal().back());
    }
    CHECK(ks_two_sample(a, b).p_value > 1e-3);
  }

  TEST_CASE("singular log at N=1 is Gaussian(-2 nu T, 2T)") {
    const ModelParams p = ModelParams::from_nu(1, 0.8);
    EmpiricalSample s;
    s.label = "delta_T";
    for (int r = 0; r < 10000; ++r) {
      RngStream st = role_stream(12, StreamRole::kScalarBeta, r);
      s.add(simulate_singular_log(p, PathGrid::uniform(1.0, 64), st).terminal()[0]);
    }
    CHECK(ks_one_sample(s, [](double x) { return normal_cdf(x, -1.6, 2.0); }).p_value > 1e-3);
  }

  TEST_CASE("singular log matches exp BM singular values at N=2") {
    const ModelParams p = ModelParams::from_nu(2, 1.0);
    const PathGrid g = PathGrid::uniform(1.0, 512);
    EmpiricalSample a, b;
    a.label = "exp_bm";
    b.label = "singular_log";
    for (int r = 0; r < 3000; ++r) {
      RngStream sa = role_stream(40, StreamRole::kMatrixW, r);
      a.add(log_squared_singular_values(simulate_exp_bm(p, -1, g, sa).terminal()).back());
      RngStream sb = role_stream(40, StreamRole::kScalarBeta, r);
      b.add(simulate_singular_log(p, g, sb).terminal().back());
    }
    CHECK(ks_two_sample(a, b).p_value > 1e-3);
  }

  TEST_CASE("singular log growth rate respects the bound at nu=1, N=2") {
    const ModelParams p = ModelParams::from_nu(2, 1.0);
    const int reps = 100;
    double sum = 0.0, sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream st = role_stream(3, StreamRole::kScalarBeta, r);
      const double v = simulate_singular_log(p, PathGrid::uniform(20.0, 1280), st).terminal().back() / 20.0;
      sum += v;
      sq += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sq / reps - mean * mean) / (reps - 1));
    CHECK(mean <= -1.0 + 3.0 * se);
  }

  TEST_CASE("scalar SDEs") {
    ZeroVectorNoise zero;
    const ModelParams p{1, 0.0, 0.0};
    const auto ode = simulate_scalar(ScalarKind::kSinhBougerol, p, std::sinh(1.0), PathGrid::uniform(1.0, 4096), zero);
    CHECK(ode.terminal() == doctest::Approx(std::sinh(1.0) * std::exp(0.5)).epsilon(1e-3));

    EmpiricalSample s;
    s.label = "sinh sde";
    for (int r = 0; r < 20000; ++r) {
      RngStream st = role_stream(9, StreamRole::kScalarBeta, r);
      s.add(simulate_scalar(ScalarKind::kSinhBougerol, p, 0.0, PathGrid::uniform(1.0, 1024), st).terminal());
    }
    CHECK(ks_one_sample(s, [](double x) { return normal_cdf(std::asinh(x), 0.0, 1.0); }).p_value > 1e-3);
  }

  TEST_CASE("pearson_1d diffusion keeps m stationary") {
    const ModelParams p{2, 0.0, 0.0};
    const Density1D m = Density1D::reversible_m(p.s(), p.n);
    EmpiricalSample a, b;
    a.label = "initial";
    b.label = "final";
    for (int r = 0; r < 5000; ++r) {
      RngStream init = role_stream(55, StreamRole::kInitial, r);
      const double w0 = m.sample(init);
      RngStream st = role_stream(55, StreamRole::kScalarBeta, r);
      a.add(w0);
      b.add(simulate_scalar(ScalarKind::kPearson1d, p, w0, PathGrid::uniform(1.0, 1024), st).terminal());
    }
    CHECK(ks_two_sample(a, b).p_value > 1e-3);
    CHECK(ks_one_sample(b, [&](double x) { return m.cdf(x); }).p_value > 1e-3);
  }

  TEST_CASE("strong self-convergence under step halving") {
    const std::size_t fine_steps = 4096;
    SUBCASE("exp BM") {
      const ModelParams p{2, 0.1, 0.2};
      const double slope = halving_slope(6, 16, [&](int r, int l) {
        RngStream st = role_stream(61, StreamRole::kMatrixW, r);
        const auto fine = draw_matrix_increments(st, 2, 1.0 / fine_steps, fine_steps);
        const std::size_t coarse = std::size_t{64} << l;
        ReplayMatrixNoise a(fine, fine_steps / coarse), b(fine, fine_steps / (2 * coarse));
        return max_abs_diff(simulate_exp_bm(p, -1, PathGrid::uniform(1.0, coarse), a).terminal(),
                            simulate_exp_bm(p, -1, PathGrid::uniform(1.0, 2 * coarse), b).terminal());
      });
      CHECK(slope >= 0.4);
    }
    SUBCASE("HP diffusion") {
      const ModelParams p{2, 0.2, 0.3};
      const double slope = halving_slope(6, 16, [&](int r, int l) {
        RngStream st = role_stream(62, StreamRole::kMatrixB, r);
        const auto fine = draw_matrix_increments(st, 2, 1.0 / fine_steps, fine_steps);
        const std::size_t coarse = std::size_t{64} << l;
        ReplayMatrixNoise a(fine, fine_steps / coarse), b(fine, fine_steps / (2 * coarse));
        const HermitianMatrix x0 = HermitianMatrix::diagonal(std::vector<double>{-0.3, 0.6});
        return max_abs_diff(simulate_hp_diffusion(p, x0, PathGrid::uniform(1.0, coarse), a).terminal().matrix(),
                            simulate_hp_diffusion(p, x0, PathGrid::uniform(1.0, 2 * coarse), b).terminal().matrix());
      });
      CHECK(slope >= 0.4);
    }
    SUBCASE("scalar pearson_1d") {
      const ModelParams p{2, 0.0, 0.5};
      const double slope = halving_slope(6, 32, [&](int r, int l) {
        RngStream st = role_stream(63, StreamRole::kScalarBeta, r);
        const auto fine = draw_vector_increments(st, 1, 1.0 / fine_steps, fine_steps);
        const std::size_t coarse = std::size_t{64} << l;
        ReplayVectorNoise a(fine, fine_steps / coarse), b(fine, fine_steps / (2 * coarse));
        return std::abs(simulate_scalar(ScalarKind::kPearson1d, p, 0.2, PathGrid::uniform(1.0, coarse), a).terminal() -
                        simulate_scalar(ScalarKind::kPearson1d, p, 0.2, PathGrid::uniform(1.0, 2 * coarse), b).terminal());
      });
      CHECK(slope >= 0.4);
    }
  }

  TEST_CASE("overflow guard") {
    ZeroMatrixNoise zero;
    const ModelParams p = ModelParams::from_nu(1, 1e20);
    try {
      simulate_exp_bm(p, +1, PathGrid::uniform(1.0, 10), zero);
      FAIL("expected overflow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kOverflow);
    }
    RngStream st(1, 0);
    CHECK_THROWS_AS(simulate_eigen_system({2, 0, 0}, {1.0, -1.0}, PathGrid::uniform(1.0, 4), st), Error);
  }
}
