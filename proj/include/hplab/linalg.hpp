#pragma once

// Dense complex matrices for small N (the simulations run at N <= 16).
// Storage is row-major with inline capacity for N <= 4, so the hot loops of
// the SDE kernels do not touch the heap.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace hplab {

using Complex = std::complex<double>;
using RealVector = std::vector<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  /// Zero matrix of dimension n.
  explicit ComplexMatrix(std::size_t n);
  /// Row-major entries; throws kInvalidArgument unless entries.size() == n*n.
  ComplexMatrix(std::size_t n, std::initializer_list<Complex> entries);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const Complex> d);
  static ComplexMatrix diagonal(std::span<const double> d);

  std::size_t dim() const noexcept { return n_; }

  Complex& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  std::span<Complex> data() noexcept { return {data_.data(), data_.size()}; }
  std::span<const Complex> data() const noexcept { return {data_.data(), data_.size()}; }

  ComplexMatrix adjoint() const;
  Complex trace() const noexcept;
  /// max_{ij} |a_ij|
  double max_abs() const noexcept;
  double frobenius_sq() const noexcept;
  bool all_finite() const noexcept;

  void set_zero() noexcept;
  void resize(std::size_t n);

  ComplexMatrix& operator+=(const ComplexMatrix& rhs);
  ComplexMatrix& operator-=(const ComplexMatrix& rhs);
  ComplexMatrix& operator*=(Complex scale) noexcept;
  ComplexMatrix& operator*=(double scale) noexcept;

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.n_ == b.n_ && a.data_ == b.data_;
  }

 private:
  std::size_t n_ = 0;
  boost::container::small_vector<Complex, 16> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(Complex s, ComplexMatrix a);
ComplexMatrix operator*(double s, ComplexMatrix a);

/// out = a * b. `out` must not alias either operand.
void multiply_into(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out);
/// out = a * b^dagger. `out` must not alias either operand.
void multiply_adjoint_into(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out);

/// max_{ij} |a_ij - b_ij|
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

/// N x N matrix with exact Hermitian symmetry: every constructor mirrors the
/// upper triangle into the lower one and zeroes the diagonal imaginary parts,
/// so H(i,j) == conj(H(j,i)) holds bit for bit.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(std::size_t n) : m_(n) {}

  /// Keeps the upper triangle and real diagonal of `a`.
  static HermitianMatrix from_upper(const ComplexMatrix& a);
  static HermitianMatrix identity(std::size_t n);
  static HermitianMatrix diagonal(std::span<const double> d);

  std::size_t dim() const noexcept { return m_.dim(); }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
  const ComplexMatrix& matrix() const noexcept { return m_; }

  /// Sets (i,j) and (j,i); for i == j only the real part is kept.
  void set(std::size_t i, std::size_t j, Complex value) noexcept;
  double trace() const noexcept;
  double max_abs() const noexcept { return m_.max_abs(); }

  friend bool operator==(const HermitianMatrix& a, const HermitianMatrix& b) { return a.m_ == b.m_; }

 private:
  ComplexMatrix m_;
};

/// (A + A^dagger) / 2.
HermitianMatrix hermitian_part(const ComplexMatrix& a);

/// max_{ij} |H_ij - conj(H_ji)|; zero for anything built through HermitianMatrix.
double hermiticity_defect(const ComplexMatrix& a);

struct EigenDecomposition {
  RealVector values;      ///< ascending
  ComplexMatrix vectors;  ///< columns are eigenvectors; H = U diag(values) U^dagger
};

/// Cyclic complex Jacobi. Throws kConvergenceFailure after 64 sweeps.
EigenDecomposition eigh(const HermitianMatrix& h);
/// Eigenvalues only (ascending); skips accumulating the rotations.
RealVector eigvalsh(const HermitianMatrix& h);

/// Principal square root of a positive semidefinite matrix through its
/// eigendecomposition. Throws kNegativeEigenvalue when the smallest
/// eigenvalue is below -1e-10 * max|H_ij|.
HermitianMatrix psd_sqrt(const HermitianMatrix& h);
/// Inverse principal square root; requires a positive definite argument.
HermitianMatrix psd_inverse_sqrt(const HermitianMatrix& h);

/// U diag(f(lambda)) U^dagger for a decomposition already computed.
HermitianMatrix spectral_function(const EigenDecomposition& eig, std::span<const double> mapped_values);

struct DetTrace {
  Complex det;
  Complex trace;
};

/// Determinant by LU with partial pivoting, trace by diagonal sum.
DetTrace det_and_trace(const ComplexMatrix& a);

/// Inverse by LU with partial pivoting; throws kSingularMatrix on an exact
/// zero pivot.
ComplexMatrix inverse(const ComplexMatrix& a);

}  // namespace hplab
