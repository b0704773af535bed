#include <doctest.h>

#include <cmath>
#include <random>

#include "hplab/error.hpp"
#include "hplab/linalg.hpp"

using namespace hplab;

namespace {

ComplexMatrix random_matrix(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> g;
  ComplexMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = {g(gen), g(gen)};
  return a;
}

// Plain loop transpose-conjugate, kept separate from ComplexMatrix::adjoint.
ComplexMatrix naive_adjoint(const ComplexMatrix& a) {
  const std::size_t n = a.dim();
  ComplexMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = Complex(a(i, j).real(), -a(i, j).imag());
  return out;
}

Complex cofactor_det(const ComplexMatrix& a) {
  const std::size_t n = a.dim();
  if (n == 1) return a(0, 0);
  Complex det = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    ComplexMatrix minor(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
      std::size_t cc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == c) continue;
        minor(i - 1, cc++) = a(i, j);
      }
    }
    det += (c % 2 == 0 ? 1.0 : -1.0) * a(0, c) * cofactor_det(minor);
  }
  return det;
}

double unitarity_defect(const ComplexMatrix& u) {
  return max_abs_diff(u.adjoint() * u, ComplexMatrix::identity(u.dim()));
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("hermitian_part examples") {
    CHECK(hermitian_part(ComplexMatrix::identity(3)).matrix() == ComplexMatrix::identity(3));
    const ComplexMatrix a(2, {0.0, 2.0, 0.0, 0.0});
    const ComplexMatrix expect(2, {0.0, 1.0, 1.0, 0.0});
    CHECK(hermitian_part(a).matrix() == expect);

    std::mt19937_64 gen(11);
    const ComplexMatrix r = random_matrix(gen, 3);
    const HermitianMatrix h = hermitian_part(r);
    CHECK(max_abs_diff(h.matrix(), naive_adjoint(h.matrix())) == 0.0);
    CHECK(max_abs_diff(r.adjoint(), naive_adjoint(r)) == 0.0);
  }

  TEST_CASE("eigh small examples") {
    auto e1 = eigh(HermitianMatrix::identity(2));
    CHECK(e1.values[0] == doctest::Approx(1.0));
    CHECK(e1.values[1] == doctest::Approx(1.0));
    CHECK(unitarity_defect(e1.vectors) <= 2e-12);

    const double d[] = {3.0, 1.0};
    auto e2 = eigh(HermitianMatrix::diagonal(d));
    CHECK(e2.values[0] == doctest::Approx(1.0));
    CHECK(e2.values[1] == doctest::Approx(3.0));

    auto e3 = eigh(hermitian_part(ComplexMatrix(2, {0.0, 1.0, 1.0, 0.0})));
    CHECK(e3.values[0] == doctest::Approx(-1.0));
    CHECK(e3.values[1] == doctest::Approx(1.0));
  }

  TEST_CASE("eigh reconstruction on random Hermitian matrices") {
    std::mt19937_64 gen(2024);
    double worst_rec = 0.0, worst_unit = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      const std::size_t n = 1 + rep % 6;
      const HermitianMatrix h = hermitian_part(random_matrix(gen, n));
      const auto e = eigh(h);
      for (std::size_t i = 1; i < n; ++i) REQUIRE(e.values[i - 1] <= e.values[i]);
      const ComplexMatrix rec = e.vectors * ComplexMatrix::diagonal(std::span<const double>(e.values)) *
                                e.vectors.adjoint();
      worst_rec = std::max(worst_rec, max_abs_diff(rec, h.matrix()) / (1.0 + h.max_abs()));
      worst_unit = std::max(worst_unit, unitarity_defect(e.vectors) / static_cast<double>(n));
      const auto vals = eigvalsh(h);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(vals[i] == doctest::Approx(e.values[i]).epsilon(1e-12));
    }
    CHECK(worst_rec <= 1e-10);
    CHECK(worst_unit <= 1e-12);
  }

  TEST_CASE("psd_sqrt examples and consistency") {
    CHECK(max_abs_diff(psd_sqrt(HermitianMatrix::identity(3)).matrix(), ComplexMatrix::identity(3)) < 1e-14);
    const double d[] = {4.0, 9.0};
    const double r[] = {2.0, 3.0};
    CHECK(max_abs_diff(psd_sqrt(HermitianMatrix::diagonal(d)).matrix(), HermitianMatrix::diagonal(r).matrix()) <
          1e-14);

    // (I + 0^2)/2 has root I / sqrt2
    const HermitianMatrix half = hermitian_part(0.5 * ComplexMatrix::identity(4));
    CHECK(max_abs_diff(psd_sqrt(half).matrix(), (1.0 / std::sqrt(2.0)) * ComplexMatrix::identity(4)) < 1e-15);

    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t n = 1 + rep % 5;
      const ComplexMatrix a = random_matrix(gen, n);
      const HermitianMatrix pd = hermitian_part(a * a.adjoint());
      const HermitianMatrix s = psd_sqrt(pd);
      REQUIRE(max_abs_diff(s.matrix() * s.matrix(), pd.matrix()) <= 1e-10 * (1.0 + pd.max_abs()));
      for (double v : eigvalsh(s)) REQUIRE(v >= 0.0);
      const HermitianMatrix again = psd_sqrt(hermitian_part(s.matrix() * s.matrix()));
      REQUIRE(max_abs_diff(again.matrix(), s.matrix()) <= 1e-8);
      const HermitianMatrix inv = psd_inverse_sqrt(pd);
      REQUIRE(max_abs_diff(inv.matrix() * s.matrix(), ComplexMatrix::identity(n)) <= 1e-8);
    }
  }

  TEST_CASE("psd_sqrt rejects clearly negative input") {
    const double d[] = {1.0, -0.5};
    CHECK_THROWS_AS(psd_sqrt(HermitianMatrix::diagonal(d)), Error);
    try {
      psd_sqrt(HermitianMatrix::diagonal(d));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNegativeEigenvalue);
    }
    // rounding-level negatives are clamped
    const double tiny[] = {1.0, -1e-14};
    CHECK(psd_sqrt(HermitianMatrix::diagonal(tiny))(1, 1).real() == 0.0);
  }

  TEST_CASE("det_and_trace") {
    auto id = det_and_trace(ComplexMatrix::identity(3));
    CHECK(std::abs(id.det - Complex(1.0)) < 1e-15);
    CHECK(std::abs(id.trace - Complex(3.0)) < 1e-15);

    const Complex diag[] = {2.0, Complex(0.0, 3.0)};
    auto dt = det_and_trace(ComplexMatrix::diagonal(diag));
    CHECK(std::abs(dt.det - Complex(0.0, 6.0)) < 1e-14);
    CHECK(std::abs(dt.trace - Complex(2.0, 3.0)) < 1e-14);

    std::mt19937_64 gen(77);
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t n = 1 + rep % 4;
      const ComplexMatrix a = random_matrix(gen, n);
      const Complex oracle = cofactor_det(a);
      REQUIRE(std::abs(det_and_trace(a).det - oracle) <= 1e-10 * std::abs(oracle));
    }
  }

  TEST_CASE("inverse") {
    std::mt19937_64 gen(8);
    const ComplexMatrix a = random_matrix(gen, 4);
    CHECK(max_abs_diff(a * inverse(a), ComplexMatrix::identity(4)) < 1e-12);
    CHECK_THROWS_AS(inverse(ComplexMatrix(2)), Error);
  }

  TEST_CASE("Hermitian invariant is exact after arithmetic") {
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 100; ++rep) {
      const HermitianMatrix h = hermitian_part(random_matrix(gen, 1 + rep % 6));
      CHECK(hermiticity_defect(h.matrix()) == 0.0);
      CHECK(hermiticity_defect(psd_sqrt(hermitian_part(h.matrix() * h.matrix())).matrix()) == 0.0);
    }
  }
}
