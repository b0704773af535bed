#include "hplab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hplab/error.hpp"

namespace hplab {

namespace {

void require_same_dim(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(op) + ": dimension mismatch " +
                                                 std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
}

constexpr double kJacobiTolerance = 1e-13;
constexpr int kJacobiMaxSweeps = 64;

double off_diagonal_sq(const ComplexMatrix& a) {
  double s = 0.0;
  const std::size_t n = a.dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s += std::norm(a(i, j));
  }
  return 2.0 * s;
}

// Diagonalizes `a` in place by cyclic Jacobi rotations. If `vectors` is
// non-null it accumulates the unitary U with a_initial = U a_final U^dagger.
void jacobi_diagonalize(ComplexMatrix& a, ComplexMatrix* vectors) {
  const std::size_t n = a.dim();
  if (vectors) *vectors = ComplexMatrix::identity(n);
  if (n < 2) return;

  const double total = a.frobenius_sq();
  if (total == 0.0) return;
  const double target = kJacobiTolerance * kJacobiTolerance * total;

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    if (off_diagonal_sq(a) <= target) return;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Phase that makes the (p,q) entry real, then a real Jacobi rotation.
        const Complex phase = apq / mag;
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // J = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q).
        const Complex jpp = c;
        const Complex jpq = s;
        const Complex jqp = -s * std::conj(phase);
        const Complex jqq = c * std::conj(phase);

        for (std::size_t r = 0; r < n; ++r) {  // a <- a J
          const Complex arp = a(r, p);
          const Complex arq = a(r, q);
          a(r, p) = arp * jpp + arq * jqp;
          a(r, q) = arp * jpq + arq * jqq;
        }
        for (std::size_t r = 0; r < n; ++r) {  // a <- J^dagger a
          const Complex apr = a(p, r);
          const Complex aqr = a(q, r);
          a(p, r) = std::conj(jpp) * apr + std::conj(jqp) * aqr;
          a(q, r) = std::conj(jpq) * apr + std::conj(jqq) * aqr;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        if (vectors) {
          ComplexMatrix& v = *vectors;
          for (std::size_t r = 0; r < n; ++r) {
            const Complex vrp = v(r, p);
            const Complex vrq = v(r, q);
            v(r, p) = vrp * jpp + vrq * jqp;
            v(r, q) = vrp * jpq + vrq * jqq;
          }
        }
      }
    }
  }
  if (off_diagonal_sq(a) <= target) return;
  throw Error(ErrorCode::kConvergenceFailure,
              "Jacobi eigensolver exceeded " + std::to_string(kJacobiMaxSweeps) + " sweeps at N=" + std::to_string(n));
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t n) : n_(n), data_(n * n, Complex(0.0, 0.0)) {}

ComplexMatrix::ComplexMatrix(std::size_t n, std::initializer_list<Complex> entries) : ComplexMatrix(n) {
  if (entries.size() != n * n) {
    throw Error(ErrorCode::kInvalidArgument, "ComplexMatrix: expected " + std::to_string(n * n) + " entries, got " +
                                                 std::to_string(entries.size()));
  }
  std::copy(entries.begin(), entries.end(), data_.begin());
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const Complex> d) {
  ComplexMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> d) {
  ComplexMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) out(j, i) = std::conj((*this)(i, j));
  }
  return out;
}

Complex ComplexMatrix::trace() const noexcept {
  Complex t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

double ComplexMatrix::frobenius_sq() const noexcept {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return s;
}

bool ComplexMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

void ComplexMatrix::set_zero() noexcept { std::fill(data_.begin(), data_.end(), Complex(0.0, 0.0)); }

void ComplexMatrix::resize(std::size_t n) {
  n_ = n;
  data_.assign(n * n, Complex(0.0, 0.0));
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
  require_same_dim(*this, rhs, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
  require_same_dim(*this, rhs, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex scale) noexcept {
  for (auto& z : data_) z *= scale;
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(double scale) noexcept {
  for (auto& z : data_) z *= scale;
  return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }
ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= s; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.dim());
  multiply_into(a, b, out);
  return out;
}

void multiply_into(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out) {
  require_same_dim(a, b, "multiply");
  const std::size_t n = a.dim();
  if (out.dim() != n) out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Complex s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
}

void multiply_adjoint_into(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out) {
  require_same_dim(a, b, "multiply_adjoint");
  const std::size_t n = a.dim();
  if (out.dim() != n) out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Complex s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(i, k) * std::conj(b(j, k));
      out(i, j) = s;
    }
  }
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_dim(a, b, "max_abs_diff");
  double m = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) m = std::max(m, std::abs(da[k] - db[k]));
  return m;
}

HermitianMatrix HermitianMatrix::from_upper(const ComplexMatrix& a) {
  HermitianMatrix h(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (std::size_t j = i; j < a.dim(); ++j) h.set(i, j, a(i, j));
  }
  return h;
}

HermitianMatrix HermitianMatrix::identity(std::size_t n) {
  HermitianMatrix h(n);
  for (std::size_t i = 0; i < n; ++i) h.m_(i, i) = 1.0;
  return h;
}

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> d) {
  HermitianMatrix h(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) h.m_(i, i) = d[i];
  return h;
}

void HermitianMatrix::set(std::size_t i, std::size_t j, Complex value) noexcept {
  if (i == j) {
    m_(i, i) = value.real();
  } else {
    m_(i, j) = value;
    m_(j, i) = std::conj(value);
  }
}

double HermitianMatrix::trace() const noexcept { return m_.trace().real(); }

HermitianMatrix hermitian_part(const ComplexMatrix& a) {
  const std::size_t n = a.dim();
  HermitianMatrix h(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) h.set(i, j, 0.5 * (a(i, j) + std::conj(a(j, i))));
  }
  return h;
}

double hermiticity_defect(const ComplexMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (std::size_t j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - std::conj(a(j, i))));
  }
  return m;
}

EigenDecomposition eigh(const HermitianMatrix& h) {
  ComplexMatrix work = h.matrix();
  ComplexMatrix vectors;
  jacobi_diagonalize(work, &vectors);

  const std::size_t n = h.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return work(x, x).real() < work(y, y).real(); });

  EigenDecomposition out{RealVector(n), ComplexMatrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = work(order[k], order[k]).real();
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = vectors(r, order[k]);
  }
  return out;
}

RealVector eigvalsh(const HermitianMatrix& h) {
  ComplexMatrix work = h.matrix();
  jacobi_diagonalize(work, nullptr);
  RealVector values(h.dim());
  for (std::size_t k = 0; k < h.dim(); ++k) values[k] = work(k, k).real();
  std::sort(values.begin(), values.end());
  return values;
}

HermitianMatrix spectral_function(const EigenDecomposition& eig, std::span<const double> mapped) {
  const std::size_t n = eig.values.size();
  if (mapped.size() != n) throw Error(ErrorCode::kInvalidArgument, "spectral_function: size mismatch");
  const ComplexMatrix& u = eig.vectors;
  HermitianMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      Complex s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += u(i, k) * mapped[k] * std::conj(u(j, k));
      out.set(i, j, s);
    }
  }
  return out;
}

HermitianMatrix psd_sqrt(const HermitianMatrix& h) {
  EigenDecomposition eig = eigh(h);
  const double scale = h.max_abs();
  if (!eig.values.empty() && eig.values.front() < -1e-10 * scale) {
    throw Error(ErrorCode::kNegativeEigenvalue,
                "psd_sqrt: minimum eigenvalue " + std::to_string(eig.values.front()) + " below tolerance");
  }
  RealVector roots(eig.values.size());
  std::transform(eig.values.begin(), eig.values.end(), roots.begin(),
                 [](double v) { return std::sqrt(std::max(v, 0.0)); });
  return spectral_function(eig, roots);
}

HermitianMatrix psd_inverse_sqrt(const HermitianMatrix& h) {
  EigenDecomposition eig = eigh(h);
  if (!eig.values.empty() && !(eig.values.front() > 0.0)) {
    throw Error(ErrorCode::kNegativeEigenvalue,
                "psd_inverse_sqrt: matrix is not positive definite (min eigenvalue " +
                    std::to_string(eig.values.front()) + ")");
  }
  RealVector roots(eig.values.size());
  std::transform(eig.values.begin(), eig.values.end(), roots.begin(), [](double v) { return 1.0 / std::sqrt(v); });
  return spectral_function(eig, roots);
}

DetTrace det_and_trace(const ComplexMatrix& a) {
  const std::size_t n = a.dim();
  ComplexMatrix lu = a;
  Complex det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(lu(r, col)) > std::abs(lu(pivot, col))) pivot = r;
    }
    if (lu(pivot, col) == Complex(0.0, 0.0)) return {Complex(0.0, 0.0), a.trace()};
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(pivot, c), lu(col, c));
      det = -det;
    }
    det *= lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const Complex f = lu(r, col) / lu(col, col);
      for (std::size_t c = col; c < n; ++c) lu(r, c) -= f * lu(col, c);
    }
  }
  return {det, a.trace()};
}

ComplexMatrix inverse(const ComplexMatrix& a) {
  const std::size_t n = a.dim();
  ComplexMatrix lu = a;
  ComplexMatrix inv = ComplexMatrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(lu(r, col)) > std::abs(lu(pivot, col))) pivot = r;
    }
    if (lu(pivot, col) == Complex(0.0, 0.0)) throw Error(ErrorCode::kSingularMatrix, "inverse: zero pivot");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(lu(pivot, c), lu(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const Complex d = 1.0 / lu(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      lu(col, c) *= d;
      inv(col, c) *= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const Complex f = lu(r, col);
      if (f == Complex(0.0, 0.0)) continue;
      for (std::size_t c = 0; c < n; ++c) {
        lu(r, c) -= f * lu(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

}  // namespace hplab
