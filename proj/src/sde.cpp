#include "hplab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hplab/error.hpp"

namespace hplab {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

bool strictly_ascending(std::span<const double> x) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i - 1] < x[i])) return false;
  }
  return true;
}

bool all_equal(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

void require_drift_sign(int drift_sign) {
  if (drift_sign != 1 && drift_sign != -1) {
    throw Error(ErrorCode::kInvalidArgument, "drift_sign must be +1 or -1, got " + std::to_string(drift_sign));
  }
}

// Midpoint of a Brownian bridge over [0, h] ending at `total`.
void bridge_split(std::span<const double> total, double h, RngStream& bridge, std::span<double> first,
                  std::span<double> second) {
  const double sd = std::sqrt(0.25 * h);
  for (std::size_t i = 0; i < total.size(); ++i) {
    first[i] = 0.5 * total[i] + sd * bridge.normal();
    second[i] = total[i] - first[i];
  }
}

}  // namespace

double ModelParams::mu() const noexcept { return std::sqrt(2.0) * s_im; }

ModelParams ModelParams::from_nu(int n, double nu, double s_im) { return {n, nu - 0.5 * n, s_im}; }

void ModelParams::validate(bool infinite_horizon) const {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "N must be >= 1, got " + std::to_string(n));
  if (!std::isfinite(s_re) || !std::isfinite(s_im)) throw Error(ErrorCode::kInvalidArgument, "s must be finite");
  if (infinite_horizon && !(s_re > -0.5)) {
    throw Error(ErrorCode::kInvalidArgument,
                "infinite-horizon functionals need Re(s) > -1/2, got " + std::to_string(s_re));
  }
}

double PathGrid::time(std::size_t k) const noexcept {
  if (k >= steps) return horizon;
  return t0 + static_cast<double>(k) * step();
}

void PathGrid::validate() const {
  if (steps == 0) throw Error(ErrorCode::kInvalidStep, "grid needs at least one step");
  if (!(horizon > t0) || !std::isfinite(horizon) || !std::isfinite(t0)) {
    throw Error(ErrorCode::kInvalidStep, "grid horizon must exceed its start");
  }
}

PathGrid PathGrid::with_step(double horizon, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::kInvalidStep, "step must be positive");
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(horizon / h)));
  return {0.0, horizon, steps};
}

// ---------------------------------------------------------------- noise ---

ReplayMatrixNoise::ReplayMatrixNoise(std::span<const ComplexMatrix> fine, std::size_t stride)
    : fine_(fine), stride_(stride) {
  if (stride_ == 0) throw Error(ErrorCode::kInvalidArgument, "replay stride must be positive");
}

void ReplayMatrixNoise::next(double, ComplexMatrix& dW) {
  if (pos_ + stride_ > fine_.size()) throw Error(ErrorCode::kInvalidArgument, "recorded noise path exhausted");
  dW = fine_[pos_];
  for (std::size_t k = 1; k < stride_; ++k) dW += fine_[pos_ + k];
  pos_ += stride_;
}

void StreamVectorNoise::next(double dt, std::span<double> out) {
  for (auto& v : out) v = real_bm_increment(stream_, dt);
}

void ZeroVectorNoise::next(double, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); }

ReplayVectorNoise::ReplayVectorNoise(std::span<const RealVector> fine, std::size_t stride)
    : fine_(fine), stride_(stride) {
  if (stride_ == 0) throw Error(ErrorCode::kInvalidArgument, "replay stride must be positive");
}

void ReplayVectorNoise::next(double, std::span<double> out) {
  if (pos_ + stride_ > fine_.size()) throw Error(ErrorCode::kInvalidArgument, "recorded noise path exhausted");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < stride_; ++k) {
    const RealVector& inc = fine_[pos_ + k];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += inc[i];
  }
  pos_ += stride_;
}

std::vector<ComplexMatrix> draw_matrix_increments(RngStream& stream, std::size_t dim, double dt, std::size_t count) {
  std::vector<ComplexMatrix> out(count, ComplexMatrix(dim));
  for (auto& m : out) fill_complex_bm_increment(stream, dt, m);
  return out;
}

std::vector<RealVector> draw_vector_increments(RngStream& stream, std::size_t dim, double dt, std::size_t count) {
  std::vector<RealVector> out(count, RealVector(dim));
  for (auto& v : out) {
    for (auto& x : v) x = real_bm_increment(stream, dt);
  }
  return out;
}

void check_overflow(const ComplexMatrix& m, std::size_t step, const char* process) {
  for (const auto& z : m.data()) {
    const double a = std::abs(z);
    if (!(a <= kOverflowThreshold)) {
      throw Error(ErrorCode::kOverflow, std::string(process) + ": entry magnitude " + std::to_string(a) +
                                            " beyond threshold at step " + std::to_string(step));
    }
  }
}

void check_overflow(std::span<const double> v, std::size_t step, const char* process) {
  for (double x : v) {
    if (!(std::abs(x) <= kOverflowThreshold)) {
      throw Error(ErrorCode::kOverflow, std::string(process) + ": value " + std::to_string(x) +
                                            " beyond threshold at step " + std::to_string(step));
    }
  }
}

// ------------------------------------------------------------- steppers ---

ExpBmStepper::ExpBmStepper(std::size_t n, double drift)
    : drift_(drift), m_(ComplexMatrix::identity(n)), factor_(n), next_(n) {}

void ExpBmStepper::step(const ComplexMatrix& dW, double h) {
  // M_{k+1} = M_k (I + dW/sqrt2 + drift h I)
  factor_ = dW;
  factor_ *= kInvSqrt2;
  for (std::size_t i = 0; i < m_.dim(); ++i) factor_(i, i) += 1.0 + drift_ * h;
  multiply_into(m_, factor_, next_);
  std::swap(m_, next_);
}

InverseExpBmStepper::InverseExpBmStepper(std::size_t n, double drift)
    : drift_(drift), m_(ComplexMatrix::identity(n)), factor_(n), next_(n) {}

void InverseExpBmStepper::step(const ComplexMatrix& dW, double h) {
  // N_{k+1} = (I - dW/sqrt2 - drift h I) N_k
  factor_ = dW;
  factor_ *= -kInvSqrt2;
  for (std::size_t i = 0; i < m_.dim(); ++i) factor_(i, i) += 1.0 - drift_ * h;
  multiply_into(factor_, m_, next_);
  std::swap(m_, next_);
}

HermitianMatrix hp_drift(const ModelParams& params, const HermitianMatrix& x) {
  const std::size_t n = x.dim();
  const double linear = -static_cast<double>(params.n) - 2.0 * params.s_re;
  const double shift = 2.0 * params.s_im + x.trace();
  HermitianMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      Complex v = linear * x(i, j);
      if (i == j) v += shift;
      out.set(i, j, v);
    }
  }
  return out;
}

HermitianMatrix hp_diffusion_square(const HermitianMatrix& x) {
  ComplexMatrix sq(x.dim());
  multiply_into(x.matrix(), x.matrix(), sq);
  for (std::size_t i = 0; i < x.dim(); ++i) sq(i, i) += 1.0;
  sq *= 0.5;
  return HermitianMatrix::from_upper(sq);
}

HermitianMatrix hp_diffusion_root(const HermitianMatrix& x) { return psd_sqrt(hp_diffusion_square(x)); }

HpDiffusionStepper::HpDiffusionStepper(const ModelParams& params, HermitianMatrix x0)
    : params_(params), x_(std::move(x0)), prod_(x_.dim()), incr_(x_.dim()) {
  if (static_cast<std::size_t>(params_.n) != x_.dim()) {
    throw Error(ErrorCode::kInvalidArgument, "initial matrix dimension differs from N");
  }
}

void HpDiffusionStepper::step(const ComplexMatrix& dGamma, double h) {
  const HermitianMatrix root = hp_diffusion_root(x_);
  const HermitianMatrix drift = hp_drift(params_, x_);
  multiply_into(dGamma, root.matrix(), prod_);  // dG S; S dG^dagger is its adjoint
  const std::size_t n = x_.dim();
  HermitianMatrix next(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      next.set(i, j, x_(i, j) + prod_(i, j) + std::conj(prod_(j, i)) + drift(i, j) * h);
    }
  }
  x_ = std::move(next);
}

void eigen_drift(const ModelParams& params, std::span<const double> x, std::span<double> out) {
  const double linear = 2.0 - 2.0 * params.n - 2.0 * params.s_re;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = 2.0 * params.s_im + linear * x[i];
    const double spread = 2.0 * (1.0 + x[i] * x[i]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i) v += spread / (x[i] - x[j]);
    }
    out[i] = v;
  }
}

EigenSystemStepper::EigenSystemStepper(const ModelParams& params, RealVector x0)
    : params_(params), x_(std::move(x0)) {
  if (!strictly_ascending(x_)) {
    throw Error(ErrorCode::kInvalidArgument, "eigenvalue stepper needs a strictly ascending start");
  }
}

void EigenSystemStepper::step(std::span<const double> dbeta, double h, RngStream& bridge) {
  guarded_step(dbeta, h, bridge, 0);
}

void EigenSystemStepper::guarded_step(std::span<const double> dbeta, double h, RngStream& bridge, int depth) {
  const std::size_t n = x_.size();
  RealVector drift(n);
  eigen_drift(params_, x_, drift);
  RealVector proposal(n);
  for (std::size_t i = 0; i < n; ++i) {
    proposal[i] = x_[i] + std::sqrt(2.0 * (1.0 + x_[i] * x_[i])) * dbeta[i] + drift[i] * h;
  }
  if (strictly_ascending(proposal)) {
    x_ = std::move(proposal);
    return;
  }
  if (depth >= kMaxCollisionHalvings) {
    throw Error(ErrorCode::kCollisionAbort, "eigenvalue ordering lost after " +
                                                std::to_string(kMaxCollisionHalvings) + " step halvings");
  }
  RealVector first(n), second(n);
  bridge_split(dbeta, h, bridge, first, second);
  guarded_step(first, 0.5 * h, bridge, depth + 1);
  guarded_step(second, 0.5 * h, bridge, depth + 1);
}

SingularLogStepper::SingularLogStepper(double nu, RealVector delta0) : nu_(nu), delta_(std::move(delta0)) {
  if (delta_.size() > 1 && !strictly_ascending(delta_)) {
    throw Error(ErrorCode::kInvalidArgument, "log singular values must start strictly ascending");
  }
}

void SingularLogStepper::step(std::span<const double> dbeta, double h, RngStream& bridge) {
  guarded_step(dbeta, h, bridge, 0);
}

void SingularLogStepper::guarded_step(std::span<const double> dbeta, double h, RngStream& bridge, int depth) {
  const std::size_t n = delta_.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(delta_[i + 1] - delta_[i]) < 1e-12) {
      throw Error(ErrorCode::kCollisionAbort, "log singular values closer than 1e-12");
    }
  }
  RealVector proposal(n);
  for (std::size_t i = 0; i < n; ++i) {
    double drift = -2.0 * nu_;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) drift += 1.0 / std::tanh(0.5 * (delta_[i] - delta_[k]));
    }
    proposal[i] = delta_[i] + std::sqrt(2.0) * dbeta[i] + drift * h;
  }
  if (n < 2 || strictly_ascending(proposal)) {
    delta_ = std::move(proposal);
    return;
  }
  if (depth >= kMaxCollisionHalvings) {
    throw Error(ErrorCode::kCollisionAbort, "log singular value ordering lost after " +
                                                std::to_string(kMaxCollisionHalvings) + " step halvings");
  }
  RealVector first(n), second(n);
  bridge_split(dbeta, h, bridge, first, second);
  guarded_step(first, 0.5 * h, bridge, depth + 1);
  guarded_step(second, 0.5 * h, bridge, depth + 1);
}

double scalar_drift(ScalarKind kind, const ModelParams& params, double x) {
  switch (kind) {
    case ScalarKind::kSinhBougerol:
      return 0.5 * x;
    case ScalarKind::kPearson1d:
      return (2.0 - 2.0 * params.n - 2.0 * params.s_re) * x + 2.0 * params.s_im;
  }
  return 0.0;
}

double scalar_diffusion(ScalarKind kind, double x) {
  switch (kind) {
    case ScalarKind::kSinhBougerol:
      return std::sqrt(1.0 + x * x);
    case ScalarKind::kPearson1d:
      return std::sqrt(2.0 * (1.0 + x * x));
  }
  return 0.0;
}

// ---------------------------------------------------------- simulations ---

Trajectory<ComplexMatrix> simulate_exp_bm(const ModelParams& params, int drift_sign, const PathGrid& grid,
                                          MatrixNoise& noise, bool retain_noise) {
  params.validate();
  grid.validate();
  require_drift_sign(drift_sign);
  const auto n = static_cast<std::size_t>(params.n);
  const double h = grid.step();
  ExpBmStepper stepper(n, drift_sign * params.nu());
  Trajectory<ComplexMatrix> out{grid, {}, {}};
  out.states.reserve(grid.steps + 1);
  out.states.push_back(stepper.state());
  ComplexMatrix dW(n);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    noise.next(h, dW);
    stepper.step(dW, h);
    check_overflow(stepper.state(), k + 1, "exp_bm");
    out.states.push_back(stepper.state());
    if (retain_noise) out.driving_increments.push_back(dW);
  }
  return out;
}

Trajectory<ComplexMatrix> simulate_exp_bm(const ModelParams& params, int drift_sign, const PathGrid& grid,
                                          RngStream& stream, bool retain_noise) {
  StreamMatrixNoise noise(stream);
  return simulate_exp_bm(params, drift_sign, grid, noise, retain_noise);
}

InversePair simulate_inverse_pair(const ModelParams& params, const PathGrid& grid, MatrixNoise& noise,
                                  bool retain_noise) {
  params.validate();
  grid.validate();
  const auto n = static_cast<std::size_t>(params.n);
  const double h = grid.step();
  ExpBmStepper forward(n, params.nu());
  InverseExpBmStepper inverse(n, params.nu());
  InversePair out{{grid, {}, {}}, {grid, {}, {}}};
  out.forward.states.reserve(grid.steps + 1);
  out.inverse.states.reserve(grid.steps + 1);
  out.forward.states.push_back(forward.state());
  out.inverse.states.push_back(inverse.state());
  ComplexMatrix dW(n);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    noise.next(h, dW);
    forward.step(dW, h);
    inverse.step(dW, h);
    check_overflow(forward.state(), k + 1, "exp_bm");
    check_overflow(inverse.state(), k + 1, "exp_bm_inverse");
    out.forward.states.push_back(forward.state());
    out.inverse.states.push_back(inverse.state());
    if (retain_noise) out.forward.driving_increments.push_back(dW);
  }
  if (retain_noise) out.inverse.driving_increments = out.forward.driving_increments;
  return out;
}

InversePair simulate_inverse_pair(const ModelParams& params, const PathGrid& grid, RngStream& stream,
                                  bool retain_noise) {
  StreamMatrixNoise noise(stream);
  return simulate_inverse_pair(params, grid, noise, retain_noise);
}

Trajectory<HermitianMatrix> simulate_hp_diffusion(const ModelParams& params, const HermitianMatrix& x0,
                                                  const PathGrid& grid, MatrixNoise& noise, bool retain_noise) {
  params.validate();
  grid.validate();
  const double h = grid.step();
  HpDiffusionStepper stepper(params, x0);
  Trajectory<HermitianMatrix> out{grid, {}, {}};
  out.states.reserve(grid.steps + 1);
  out.states.push_back(stepper.state());
  ComplexMatrix dGamma(x0.dim());
  for (std::size_t k = 0; k < grid.steps; ++k) {
    noise.next(h, dGamma);
    stepper.step(dGamma, h);
    check_overflow(stepper.state().matrix(), k + 1, "hp_diffusion");
    out.states.push_back(stepper.state());
    if (retain_noise) out.driving_increments.push_back(dGamma);
  }
  return out;
}

Trajectory<HermitianMatrix> simulate_hp_diffusion(const ModelParams& params, const HermitianMatrix& x0,
                                                  const PathGrid& grid, RngStream& stream, bool retain_noise) {
  StreamMatrixNoise noise(stream);
  return simulate_hp_diffusion(params, x0, grid, noise, retain_noise);
}

std::size_t degenerate_warmup_steps(std::size_t steps) { return std::min<std::size_t>(steps, 32); }

Trajectory<RealVector> simulate_eigen_system(const ModelParams& params, const RealVector& x0, const PathGrid& grid,
                                             VectorNoise& noise, RngStream& bridge) {
  params.validate();
  grid.validate();
  const std::size_t n = x0.size();
  if (n != static_cast<std::size_t>(params.n)) {
    throw Error(ErrorCode::kInvalidArgument, "initial eigenvalue vector length differs from N");
  }
  const bool degenerate = n > 1 && all_equal(x0);
  if (!degenerate && !strictly_ascending(x0)) {
    throw Error(ErrorCode::kInvalidArgument, "initial eigenvalues must be strictly ascending or all equal");
  }
  const double h = grid.step();
  Trajectory<RealVector> out{grid, {}, {}};
  out.states.reserve(grid.steps + 1);
  out.states.push_back(x0);
  RealVector dbeta(n);
  std::size_t k = 0;
  RealVector start = x0;
  if (degenerate) {
    HpDiffusionStepper matrix(params, HermitianMatrix::diagonal(x0));
    ComplexMatrix dGamma(n);
    for (const std::size_t warm = degenerate_warmup_steps(grid.steps); k < warm; ++k) {
      noise.next(h, dbeta);  // keep replayed noise aligned with the grid
      fill_complex_bm_increment(bridge, h, dGamma);
      matrix.step(dGamma, h);
      check_overflow(matrix.state().matrix(), k + 1, "eigen_system warmup");
      out.states.push_back(eigvalsh(matrix.state()));
    }
    start = out.states.back();
  }
  EigenSystemStepper stepper(params, start);
  for (; k < grid.steps; ++k) {
    noise.next(h, dbeta);
    stepper.step(dbeta, h, bridge);
    check_overflow(stepper.state(), k + 1, "eigen_system");
    out.states.push_back(stepper.state());
  }
  return out;
}

Trajectory<RealVector> simulate_eigen_system(const ModelParams& params, const RealVector& x0, const PathGrid& grid,
                                             RngStream& stream) {
  StreamVectorNoise noise(stream);
  return simulate_eigen_system(params, x0, grid, noise, stream);
}

RealVector log_squared_singular_values(const ComplexMatrix& m) {
  ComplexMatrix mm(m.dim());
  multiply_adjoint_into(m, m, mm);
  RealVector eta = eigvalsh(HermitianMatrix::from_upper(mm));
  for (auto& v : eta) v = std::log(v);
  return eta;
}

Trajectory<RealVector> simulate_singular_log(const ModelParams& params, const PathGrid& grid, RngStream& stream) {
  params.validate();
  grid.validate();
  const auto n = static_cast<std::size_t>(params.n);
  const double h = grid.step();
  Trajectory<RealVector> out{grid, {}, {}};
  out.states.reserve(grid.steps + 1);
  out.states.push_back(RealVector(n, 0.0));
  std::size_t k = 0;
  if (n > 1) {
    ExpBmStepper matrix(n, -params.nu());
    ComplexMatrix dW(n);
    for (const std::size_t warm = degenerate_warmup_steps(grid.steps); k < warm; ++k) {
      fill_complex_bm_increment(stream, h, dW);
      matrix.step(dW, h);
      check_overflow(matrix.state(), k + 1, "singular_log warmup");
      out.states.push_back(log_squared_singular_values(matrix.state()));
    }
  }
  SingularLogStepper stepper(params.nu(), out.states.back());
  RealVector dbeta(n);
  for (; k < grid.steps; ++k) {
    for (auto& b : dbeta) b = real_bm_increment(stream, h);
    stepper.step(dbeta, h, stream);
    check_overflow(stepper.state(), k + 1, "singular_log");
    out.states.push_back(stepper.state());
  }
  return out;
}

Trajectory<double> simulate_scalar(ScalarKind kind, const ModelParams& params, double x0, const PathGrid& grid,
                                   VectorNoise& noise) {
  params.validate();
  grid.validate();
  const double h = grid.step();
  Trajectory<double> out{grid, {}, {}};
  out.states.reserve(grid.steps + 1);
  out.states.push_back(x0);
  double x = x0;
  double dbeta = 0.0;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    noise.next(h, std::span<double>(&dbeta, 1));
    x += scalar_diffusion(kind, x) * dbeta + scalar_drift(kind, params, x) * h;
    check_overflow(std::span<const double>(&x, 1), k + 1, "scalar");
    out.states.push_back(x);
  }
  return out;
}

Trajectory<double> simulate_scalar(ScalarKind kind, const ModelParams& params, double x0, const PathGrid& grid,
                                   RngStream& stream) {
  StreamVectorNoise noise(stream);
  return simulate_scalar(kind, params, x0, grid, noise);
}

}  // namespace hplab
