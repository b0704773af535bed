#pragma once

// Euler-Maruyama integrators for the matrix and spectral processes.
//
// Each process has a stepper (state + one EM step, no storage) and a
// simulate_* wrapper that records a full Trajectory. The driving noise comes
// through MatrixNoise / VectorNoise so the same kernels run on fresh random
// draws, on a recorded path coarsened by summation (step-halving studies),
// or with the noise switched off (ODE limits).

#include <cstddef>
#include <span>
#include <vector>

#include "hplab/linalg.hpp"
#include "hplab/random.hpp"

namespace hplab {

/// Entries above this magnitude abort a simulation with kOverflow.
inline constexpr double kOverflowThreshold = 1e150;
/// Maximum number of local step halvings in the ordering guard.
inline constexpr int kMaxCollisionHalvings = 20;

/// (N, s) with nu = Re(s) + N/2 and mu = sqrt(2) Im(s) always derived.
struct ModelParams {
  int n = 1;
  double s_re = 0.0;
  double s_im = 0.0;

  double nu() const noexcept { return s_re + 0.5 * n; }
  double mu() const noexcept;
  Complex s() const noexcept { return {s_re, s_im}; }

  /// Parameters whose derived nu equals `nu` (s_re = nu - N/2).
  static ModelParams from_nu(int n, double nu, double s_im = 0.0);

  /// Throws kInvalidArgument for n < 1 or non-finite s, and additionally for
  /// s_re <= -1/2 when `infinite_horizon` is set.
  void validate(bool infinite_horizon = false) const;
};

struct PathGrid {
  double t0 = 0.0;
  double horizon = 1.0;
  std::size_t steps = 4096;

  double step() const noexcept { return (horizon - t0) / static_cast<double>(steps); }
  double time(std::size_t k) const noexcept;
  void validate() const;

  static PathGrid uniform(double horizon, std::size_t steps) { return {0.0, horizon, steps}; }
  /// Grid on [0, horizon] whose step is as close to `h` as an integer count allows.
  static PathGrid with_step(double horizon, double h);
};

template <class State>
struct Trajectory {
  PathGrid grid;
  std::vector<State> states;                      ///< steps + 1 entries
  std::vector<ComplexMatrix> driving_increments;  ///< filled only when retained

  const State& initial() const { return states.front(); }
  const State& terminal() const { return states.back(); }
};

// ---------------------------------------------------------------- noise ---

class MatrixNoise {
 public:
  virtual ~MatrixNoise() = default;
  /// Writes the next increment over a step of length dt into `dW`.
  virtual void next(double dt, ComplexMatrix& dW) = 0;
};

class StreamMatrixNoise final : public MatrixNoise {
 public:
  explicit StreamMatrixNoise(RngStream& stream) : stream_(stream) {}
  void next(double dt, ComplexMatrix& dW) override { fill_complex_bm_increment(stream_, dt, dW); }

 private:
  RngStream& stream_;
};

class ZeroMatrixNoise final : public MatrixNoise {
 public:
  void next(double, ComplexMatrix& dW) override { dW.set_zero(); }
};

/// Replays a recorded fine path, summing `stride` consecutive increments per step.
class ReplayMatrixNoise final : public MatrixNoise {
 public:
  ReplayMatrixNoise(std::span<const ComplexMatrix> fine, std::size_t stride = 1);
  void next(double dt, ComplexMatrix& dW) override;

 private:
  std::span<const ComplexMatrix> fine_;
  std::size_t stride_;
  std::size_t pos_ = 0;
};

class VectorNoise {
 public:
  virtual ~VectorNoise() = default;
  virtual void next(double dt, std::span<double> out) = 0;
};

class StreamVectorNoise final : public VectorNoise {
 public:
  explicit StreamVectorNoise(RngStream& stream) : stream_(stream) {}
  void next(double dt, std::span<double> out) override;

 private:
  RngStream& stream_;
};

class ZeroVectorNoise final : public VectorNoise {
 public:
  void next(double, std::span<double> out) override;
};

class ReplayVectorNoise final : public VectorNoise {
 public:
  ReplayVectorNoise(std::span<const RealVector> fine, std::size_t stride = 1);
  void next(double dt, std::span<double> out) override;

 private:
  std::span<const RealVector> fine_;
  std::size_t stride_;
  std::size_t pos_ = 0;
};

std::vector<ComplexMatrix> draw_matrix_increments(RngStream& stream, std::size_t dim, double dt, std::size_t count);
std::vector<RealVector> draw_vector_increments(RngStream& stream, std::size_t dim, double dt, std::size_t count);

/// Throws kOverflow if any entry is non-finite or exceeds kOverflowThreshold.
void check_overflow(const ComplexMatrix& m, std::size_t step, const char* process);
void check_overflow(std::span<const double> v, std::size_t step, const char* process);

// ------------------------------------------------------------- steppers ---

/// dM = (1/sqrt2) M dW + drift M dt, M_0 = I.
class ExpBmStepper {
 public:
  ExpBmStepper(std::size_t n, double drift);
  void step(const ComplexMatrix& dW, double h);
  const ComplexMatrix& state() const noexcept { return m_; }

 private:
  double drift_;
  ComplexMatrix m_, factor_, next_;
};

/// d(M^-1) = -(1/sqrt2) dW M^-1 - drift M^-1 dt, started at I.
class InverseExpBmStepper {
 public:
  InverseExpBmStepper(std::size_t n, double drift);
  void step(const ComplexMatrix& dW, double h);
  const ComplexMatrix& state() const noexcept { return m_; }

 private:
  double drift_;
  ComplexMatrix m_, factor_, next_;
};

/// [(-N - 2Re s) X + 2Im(s) I + Tr(X) I]
HermitianMatrix hp_drift(const ModelParams& params, const HermitianMatrix& x);
/// (I + X^2) / 2
HermitianMatrix hp_diffusion_square(const HermitianMatrix& x);
/// sqrt((I + X^2) / 2)
HermitianMatrix hp_diffusion_root(const HermitianMatrix& x);

/// dX = dG S + S dG^dagger + hp_drift(X) dt with S = hp_diffusion_root(X).
class HpDiffusionStepper {
 public:
  HpDiffusionStepper(const ModelParams& params, HermitianMatrix x0);
  void step(const ComplexMatrix& dGamma, double h);
  const HermitianMatrix& state() const noexcept { return x_; }

 private:
  ModelParams params_;
  HermitianMatrix x_;
  ComplexMatrix prod_, incr_;
};

/// 2Im(s) + (2 - 2N - 2Re s) x_i + sum_{j != i} 2(1 + x_i^2) / (x_i - x_j)
void eigen_drift(const ModelParams& params, std::span<const double> x, std::span<double> out);

/// Eigenvalue system of the Hermitian diffusion with the ordering guard: a
/// step that breaks strict ordering is split in two by a Brownian-bridge
/// midpoint draw from `bridge`, recursively up to kMaxCollisionHalvings.
class EigenSystemStepper {
 public:
  EigenSystemStepper(const ModelParams& params, RealVector x0);
  void step(std::span<const double> dbeta, double h, RngStream& bridge);
  const RealVector& state() const noexcept { return x_; }

 private:
  void guarded_step(std::span<const double> dbeta, double h, RngStream& bridge, int depth);

  ModelParams params_;
  RealVector x_;
};

/// Log squared singular values delta_i of M^(-nu):
/// d delta_i = sqrt2 d beta_i + [-2nu + sum_{k != i} coth((delta_i - delta_k)/2)] dt.
class SingularLogStepper {
 public:
  SingularLogStepper(double nu, RealVector delta0);
  void step(std::span<const double> dbeta, double h, RngStream& bridge);
  const RealVector& state() const noexcept { return delta_; }

 private:
  void guarded_step(std::span<const double> dbeta, double h, RngStream& bridge, int depth);

  double nu_;
  RealVector delta_;
};

enum class ScalarKind {
  kSinhBougerol,  ///< dx = sqrt(1 + x^2) d beta + x/2 dt
  kPearson1d,     ///< dw = sqrt(2(1 + w^2)) d beta + [(2 - 2N - 2Re s) w + 2Im s] dt
};

double scalar_drift(ScalarKind kind, const ModelParams& params, double x);
double scalar_diffusion(ScalarKind kind, double x);

// ---------------------------------------------------------- simulations ---

Trajectory<ComplexMatrix> simulate_exp_bm(const ModelParams& params, int drift_sign, const PathGrid& grid,
                                          MatrixNoise& noise, bool retain_noise = false);
Trajectory<ComplexMatrix> simulate_exp_bm(const ModelParams& params, int drift_sign, const PathGrid& grid,
                                          RngStream& stream, bool retain_noise = false);

struct InversePair {
  Trajectory<ComplexMatrix> forward;  ///< M^(nu)
  Trajectory<ComplexMatrix> inverse;  ///< (M^(nu))^-1 from its own SDE, same dW
};

InversePair simulate_inverse_pair(const ModelParams& params, const PathGrid& grid, MatrixNoise& noise,
                                  bool retain_noise = false);
InversePair simulate_inverse_pair(const ModelParams& params, const PathGrid& grid, RngStream& stream,
                                  bool retain_noise = false);

Trajectory<HermitianMatrix> simulate_hp_diffusion(const ModelParams& params, const HermitianMatrix& x0,
                                                  const PathGrid& grid, MatrixNoise& noise,
                                                  bool retain_noise = false);
Trajectory<HermitianMatrix> simulate_hp_diffusion(const ModelParams& params, const HermitianMatrix& x0,
                                                  const PathGrid& grid, RngStream& stream,
                                                  bool retain_noise = false);

/// x0 must be strictly ascending or all equal. From a degenerate start the
/// first min(steps, 32) steps run the matrix diffusion from diag(x0) and the
/// system continues from its spectrum.
Trajectory<RealVector> simulate_eigen_system(const ModelParams& params, const RealVector& x0, const PathGrid& grid,
                                             VectorNoise& noise, RngStream& bridge);
Trajectory<RealVector> simulate_eigen_system(const ModelParams& params, const RealVector& x0, const PathGrid& grid,
                                             RngStream& stream);

/// Starts at delta = 0 (M_0 = I). For N >= 2 the first min(steps, 32) steps
/// integrate M^(-nu) itself and the log coordinates start from log eig(M M^dagger).
Trajectory<RealVector> simulate_singular_log(const ModelParams& params, const PathGrid& grid, RngStream& stream);

Trajectory<double> simulate_scalar(ScalarKind kind, const ModelParams& params, double x0, const PathGrid& grid,
                                   VectorNoise& noise);
Trajectory<double> simulate_scalar(ScalarKind kind, const ModelParams& params, double x0, const PathGrid& grid,
                                   RngStream& stream);

/// Number of initial steps handled by the matrix process when a spectral
/// simulation starts from coinciding coordinates.
std::size_t degenerate_warmup_steps(std::size_t steps);

/// log of the eigenvalues of M M^dagger, ascending.
RealVector log_squared_singular_values(const ComplexMatrix& m);

}  // namespace hplab
