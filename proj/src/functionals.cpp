#include "hplab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hplab/error.hpp"

namespace hplab {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Adds M ((dB + dB^dagger)/sqrt2 + sqrt2 mu h I) M^dagger into `acc` (upper
// triangle only; the caller mirrors).
class ConjugatedIncrement {
 public:
  explicit ConjugatedIncrement(std::size_t n) : g_(n), tmp_(n), out_(n) {}

  const ComplexMatrix& apply(const ComplexMatrix& m, const ComplexMatrix& db, double mu, double h) {
    const std::size_t n = m.dim();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        Complex v = (db(i, j) + std::conj(db(j, i))) * kInvSqrt2;
        if (i == j) v = Complex(v.real() + kSqrt2 * mu * h, 0.0);
        g_(i, j) = v;
        g_(j, i) = std::conj(v);
      }
    }
    multiply_into(m, g_, tmp_);
    multiply_adjoint_into(tmp_, m, out_);
    return out_;
  }

 private:
  ComplexMatrix g_, tmp_, out_;
};

void add_upper(ComplexMatrix& acc, const ComplexMatrix& term) {
  const std::size_t n = acc.dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) acc(i, j) += term(i, j);
  }
}

double upper_max_abs(const ComplexMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (std::size_t j = i; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j)));
  }
  return m;
}

std::size_t steps_per_block(const TailPolicy& policy, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::kInvalidStep, "step must be positive");
  return static_cast<std::size_t>(std::max(1.0, std::round(policy.block / h)));
}

// Generic block loop. `advance(steps, h, block_acc)` integrates one block,
// adds its contribution into block_acc and returns the integrand envelope
// over the block; `norm(block_acc)` measures the block.
template <class Acc, class Advance, class Norm, class Merge>
void run_tail(const TailPolicy& policy, double h, Acc& block_acc, Advance&& advance, Norm&& norm, Merge&& merge,
              double& horizon, bool& converged, std::vector<double>& block_norms) {
  policy.validate();
  const std::size_t per_block = steps_per_block(policy, h);
  const double h_eff = policy.block / static_cast<double>(per_block);
  horizon = 0.0;
  converged = false;
  while (horizon + 0.5 * policy.block <= policy.max_t) {
    const double envelope = advance(per_block, h_eff, block_acc);
    const double block_norm = norm(block_acc);
    merge(block_acc);
    horizon += policy.block;
    block_norms.push_back(block_norm);
    if (block_norm < policy.eps && envelope < policy.eps) {
      converged = true;
      return;
    }
  }
}

}  // namespace

TailPolicy TailPolicy::defaults_for(const ModelParams& params) {
  return defaults_for_rate(2.0 * params.nu() - params.n + 1.0);
}

TailPolicy TailPolicy::defaults_for_rate(double rate) {
  TailPolicy p;
  p.max_t = rate > 0.0 ? std::clamp(40.0 / rate, 10.0, 200.0) : 200.0;
  return p;
}

void TailPolicy::validate() const {
  if (!(eps > 0.0) || !(block > 0.0) || !(max_t >= block)) {
    throw Error(ErrorCode::kInvalidArgument, "tail policy needs eps > 0, block > 0 and max_t >= block");
  }
}

// ----------------------------------------------------------- matrix ---

HermitianMatrix bougerol_integral(const ModelParams& params, const PathGrid& grid, MatrixNoise& w, MatrixNoise& b) {
  params.validate();
  grid.validate();
  const auto n = static_cast<std::size_t>(params.n);
  const double h = grid.step();
  const double mu = params.mu();
  ExpBmStepper m(n, -params.nu());
  ConjugatedIncrement term(n);
  ComplexMatrix acc(n), dW(n), dB(n);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    w.next(h, dW);
    b.next(h, dB);
    add_upper(acc, term.apply(m.state(), dB, mu, h));
    m.step(dW, h);
    check_overflow(m.state(), k + 1, "bougerol_integral");
  }
  return HermitianMatrix::from_upper(acc);
}

HermitianMatrix bougerol_integral(const ModelParams& params, const PathGrid& grid, RngStream& stream_m,
                                  RngStream& stream_b) {
  StreamMatrixNoise w(stream_m);
  StreamMatrixNoise b(stream_b);
  return bougerol_integral(params, grid, w, b);
}

TailResult<HermitianMatrix> bougerol_integral_infinite(const ModelParams& params, const TailPolicy& policy, double h,
                                                       MatrixNoise& w, MatrixNoise& b) {
  params.validate(true);
  const auto n = static_cast<std::size_t>(params.n);
  const double mu = params.mu();
  ExpBmStepper m(n, -params.nu());
  ConjugatedIncrement term(n);
  ComplexMatrix total(n), block(n), dW(n), dB(n);
  std::size_t step_index = 0;
  TailResult<HermitianMatrix> out;
  run_tail(
      policy, h, block,
      [&](std::size_t steps, double dt, ComplexMatrix& acc) {
        acc.set_zero();
        double envelope = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
          envelope = std::max(envelope, m.state().frobenius_sq());
          w.next(dt, dW);
          b.next(dt, dB);
          add_upper(acc, term.apply(m.state(), dB, mu, dt));
          m.step(dW, dt);
          check_overflow(m.state(), ++step_index, "bougerol_integral_infinite");
        }
        return envelope;
      },
      upper_max_abs, [&](const ComplexMatrix& acc) { add_upper(total, acc); }, out.horizon, out.converged,
      out.block_norms);
  out.value = HermitianMatrix::from_upper(total);
  return out;
}

TailResult<HermitianMatrix> bougerol_integral_infinite(const ModelParams& params, const TailPolicy& policy, double h,
                                                       RngStream& stream_m, RngStream& stream_b) {
  StreamMatrixNoise w(stream_m);
  StreamMatrixNoise b(stream_b);
  return bougerol_integral_infinite(params, policy, h, w, b);
}

HermitianMatrix dufresne_integral(const ModelParams& params, const PathGrid& grid, MatrixNoise& w) {
  params.validate();
  grid.validate();
  const auto n = static_cast<std::size_t>(params.n);
  const double h = grid.step();
  ExpBmStepper m(n, -params.nu());
  ComplexMatrix acc(n), mm(n), dW(n);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    multiply_adjoint_into(m.state(), m.state(), mm);
    mm *= h;
    add_upper(acc, mm);
    w.next(h, dW);
    m.step(dW, h);
    check_overflow(m.state(), k + 1, "dufresne_integral");
  }
  return HermitianMatrix::from_upper(acc);
}

HermitianMatrix dufresne_integral(const ModelParams& params, const PathGrid& grid, RngStream& stream_m) {
  StreamMatrixNoise w(stream_m);
  return dufresne_integral(params, grid, w);
}

TailResult<HermitianMatrix> dufresne_integral(const ModelParams& params, const TailPolicy& policy, double h,
                                              MatrixNoise& w) {
  params.validate();
  if (!(params.nu() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Dufresne functional needs nu > 0");
  const auto n = static_cast<std::size_t>(params.n);
  ExpBmStepper m(n, -params.nu());
  ComplexMatrix total(n), block(n), mm(n), dW(n);
  std::size_t step_index = 0;
  TailResult<HermitianMatrix> out;
  run_tail(
      policy, h, block,
      [&](std::size_t steps, double dt, ComplexMatrix& acc) {
        acc.set_zero();
        double envelope = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
          envelope = std::max(envelope, m.state().frobenius_sq());
          multiply_adjoint_into(m.state(), m.state(), mm);
          mm *= dt;
          add_upper(acc, mm);
          w.next(dt, dW);
          m.step(dW, dt);
          check_overflow(m.state(), ++step_index, "dufresne_integral");
        }
        return envelope;
      },
      upper_max_abs, [&](const ComplexMatrix& acc) { add_upper(total, acc); }, out.horizon, out.converged,
      out.block_norms);
  out.value = HermitianMatrix::from_upper(total);
  return out;
}

TailResult<HermitianMatrix> dufresne_integral(const ModelParams& params, const TailPolicy& policy, double h,
                                              RngStream& stream_m) {
  StreamMatrixNoise w(stream_m);
  return dufresne_integral(params, policy, h, w);
}

// ----------------------------------------------------------- scalar ---

double scalar_bougerol_functional(double nu, double mu, const PathGrid& grid, VectorNoise& beta, VectorNoise& gamma) {
  grid.validate();
  const double h = grid.step();
  double b = 0.0;
  double acc = 0.0;
  double db = 0.0;
  double dg = 0.0;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    beta.next(h, std::span<double>(&db, 1));
    gamma.next(h, std::span<double>(&dg, 1));
    acc += std::exp(b) * (dg - mu * h);
    b += db - nu * h;
  }
  return acc;
}

double scalar_bougerol_functional(double nu, double mu, const PathGrid& grid, RngStream& stream_beta,
                                  RngStream& stream_gamma) {
  StreamVectorNoise beta(stream_beta);
  StreamVectorNoise gamma(stream_gamma);
  return scalar_bougerol_functional(nu, mu, grid, beta, gamma);
}

TailResult<double> scalar_bougerol_functional(double nu, double mu, const TailPolicy& policy, double h,
                                              VectorNoise& beta, VectorNoise& gamma) {
  if (!(nu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "infinite-horizon functional needs nu > 0");
  double b = 0.0;
  double total = 0.0;
  double block = 0.0;
  double db = 0.0;
  double dg = 0.0;
  TailResult<double> out;
  run_tail(
      policy, h, block,
      [&](std::size_t steps, double dt, double& acc) {
        acc = 0.0;
        double envelope = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
          const double weight = std::exp(b);
          envelope = std::max(envelope, weight);
          beta.next(dt, std::span<double>(&db, 1));
          gamma.next(dt, std::span<double>(&dg, 1));
          acc += weight * (dg - mu * dt);
          b += db - nu * dt;
        }
        return envelope;
      },
      [](double acc) { return std::abs(acc); }, [&](double acc) { total += acc; }, out.horizon, out.converged,
      out.block_norms);
  out.value = total;
  return out;
}

TailResult<double> scalar_bougerol_functional(double nu, double mu, const TailPolicy& policy, double h,
                                              RngStream& stream_beta, RngStream& stream_gamma) {
  StreamVectorNoise beta(stream_beta);
  StreamVectorNoise gamma(stream_gamma);
  return scalar_bougerol_functional(nu, mu, policy, h, beta, gamma);
}

double scalar_dufresne_functional(double nu, const PathGrid& grid, VectorNoise& beta) {
  grid.validate();
  const double h = grid.step();
  double b = 0.0;
  double acc = 0.0;
  double db = 0.0;
  for (std::size_t k = 0; k < grid.steps; ++k) {
    acc += std::exp(2.0 * b) * h;
    beta.next(h, std::span<double>(&db, 1));
    b += db - nu * h;
  }
  return acc;
}

TailResult<double> scalar_dufresne_functional(double nu, const TailPolicy& policy, double h, VectorNoise& beta) {
  if (!(nu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Dufresne functional needs nu > 0");
  double b = 0.0;
  double total = 0.0;
  double block = 0.0;
  double db = 0.0;
  TailResult<double> out;
  run_tail(
      policy, h, block,
      [&](std::size_t steps, double dt, double& acc) {
        acc = 0.0;
        double envelope = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
          const double weight = std::exp(2.0 * b);
          envelope = std::max(envelope, weight);
          acc += weight * dt;
          beta.next(dt, std::span<double>(&db, 1));
          b += db - nu * dt;
        }
        return envelope;
      },
      [](double acc) { return std::abs(acc); }, [&](double acc) { total += acc; }, out.horizon, out.converged,
      out.block_norms);
  out.value = total;
  return out;
}

TailResult<double> scalar_dufresne_functional(double nu, const TailPolicy& policy, double h, RngStream& stream_beta) {
  StreamVectorNoise beta(stream_beta);
  return scalar_dufresne_functional(nu, policy, h, beta);
}

// ---------------------------------------------------- explicit solution ---

ExplicitSolution explicit_solution_path(const ModelParams& params, const HermitianMatrix& x0, const PathGrid& grid,
                                        MatrixNoise& w, MatrixNoise& b) {
  params.validate();
  grid.validate();
  const auto n = static_cast<std::size_t>(params.n);
  if (x0.dim() != n) throw Error(ErrorCode::kInvalidArgument, "initial matrix dimension differs from N");
  const double h = grid.step();
  const double mu = params.mu();

  ExpBmStepper forward(n, params.nu());
  InverseExpBmStepper inverse(n, params.nu());
  ConjugatedIncrement term(n);
  ComplexMatrix running = x0.matrix();
  ComplexMatrix tmp(n), conj(n), dW(n), dB(n);

  ExplicitSolution out{{grid, {}, {}}, {}, {}};
  out.path.states.reserve(grid.steps + 1);
  out.dW.reserve(grid.steps);
  out.dB.reserve(grid.steps);
  out.path.states.push_back(x0);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    w.next(h, dW);
    b.next(h, dB);
    add_upper(running, term.apply(forward.state(), dB, mu, h));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) running(i, j) = std::conj(running(j, i));
    }
    forward.step(dW, h);
    inverse.step(dW, h);
    check_overflow(forward.state(), k + 1, "explicit_solution");
    check_overflow(inverse.state(), k + 1, "explicit_solution");
    multiply_into(inverse.state(), running, tmp);
    multiply_adjoint_into(tmp, inverse.state(), conj);
    out.path.states.push_back(HermitianMatrix::from_upper(conj));
    out.dW.push_back(dW);
    out.dB.push_back(dB);
  }
  return out;
}

ExplicitSolution explicit_solution_path(const ModelParams& params, const HermitianMatrix& x0, const PathGrid& grid,
                                        RngStream& stream_m, RngStream& stream_b) {
  StreamMatrixNoise w(stream_m);
  StreamMatrixNoise b(stream_b);
  return explicit_solution_path(params, x0, grid, w, b);
}

std::vector<ComplexMatrix> reconstruct_gamma_increments(const ExplicitSolution& solution) {
  const std::size_t steps = solution.dW.size();
  std::vector<ComplexMatrix> out;
  out.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const HermitianMatrix& x = solution.path.states[k];
    const std::size_t n = x.dim();
    ComplexMatrix lhs(n);
    multiply_into(solution.dW[k], x.matrix(), lhs);
    lhs *= -kInvSqrt2;
    ComplexMatrix scaled_b = solution.dB[k];
    scaled_b *= kInvSqrt2;
    lhs += scaled_b;
    const HermitianMatrix inv_root = psd_inverse_sqrt(hp_diffusion_square(x));
    ComplexMatrix gamma(n);
    multiply_into(lhs, inv_root.matrix(), gamma);
    out.push_back(std::move(gamma));
  }
  return out;
}

}  // namespace hplab
