#pragma once

// Left-point Ito sums for the matrix and scalar exponential functionals.
//
// Infinite-horizon versions integrate block by block and stop once a block
// is negligible; a run that reaches TailPolicy::max_t first comes back with
// converged == false so callers can flag and exclude it.

#include <vector>

#include "hplab/linalg.hpp"
#include "hplab/random.hpp"
#include "hplab/sde.hpp"

namespace hplab {

struct TailPolicy {
  double eps = 1e-6;    ///< block max-norm (and integrand envelope) below this stops the sum
  double block = 1.0;   ///< block length in time units
  double max_t = 40.0;  ///< hard cap on the horizon

  /// eps = 1e-6, block = 1, max_t = 40 / (2nu - N + 1) clamped to [10, 200].
  static TailPolicy defaults_for(const ModelParams& params);
  /// Same clamp for an arbitrary exponential decay rate of the integrand.
  static TailPolicy defaults_for_rate(double rate);
  void validate() const;
};

template <class T>
struct TailResult {
  T value{};
  double horizon = 0.0;             ///< time actually integrated
  bool converged = false;
  std::vector<double> block_norms;  ///< max-norm of each block's contribution
};

/// sum_k M_k ((dB_k + dB_k^dagger + 2 mu h I) / sqrt2) M_k^dagger over the
/// grid, with M = M^(-nu) driven by `w` and B undrifted, driven by `b`.
HermitianMatrix bougerol_integral(const ModelParams& params, const PathGrid& grid, MatrixNoise& w, MatrixNoise& b);
HermitianMatrix bougerol_integral(const ModelParams& params, const PathGrid& grid, RngStream& stream_m,
                                  RngStream& stream_b);

TailResult<HermitianMatrix> bougerol_integral_infinite(const ModelParams& params, const TailPolicy& policy, double h,
                                                       MatrixNoise& w, MatrixNoise& b);
TailResult<HermitianMatrix> bougerol_integral_infinite(const ModelParams& params, const TailPolicy& policy, double h,
                                                       RngStream& stream_m, RngStream& stream_b);

/// sum_k M_k M_k^dagger h with M = M^(-nu); positive semidefinite.
HermitianMatrix dufresne_integral(const ModelParams& params, const PathGrid& grid, MatrixNoise& w);
HermitianMatrix dufresne_integral(const ModelParams& params, const PathGrid& grid, RngStream& stream_m);
TailResult<HermitianMatrix> dufresne_integral(const ModelParams& params, const TailPolicy& policy, double h,
                                              MatrixNoise& w);
TailResult<HermitianMatrix> dufresne_integral(const ModelParams& params, const TailPolicy& policy, double h,
                                              RngStream& stream_m);

/// sum_k exp(beta_k - nu t_k) (d gamma_k - mu h) with standard real Brownian
/// motions beta and gamma (the drifted exponent is exact, only the integral
/// is discretized).
double scalar_bougerol_functional(double nu, double mu, const PathGrid& grid, VectorNoise& beta, VectorNoise& gamma);
double scalar_bougerol_functional(double nu, double mu, const PathGrid& grid, RngStream& stream_beta,
                                  RngStream& stream_gamma);
TailResult<double> scalar_bougerol_functional(double nu, double mu, const TailPolicy& policy, double h,
                                              VectorNoise& beta, VectorNoise& gamma);
TailResult<double> scalar_bougerol_functional(double nu, double mu, const TailPolicy& policy, double h,
                                              RngStream& stream_beta, RngStream& stream_gamma);

/// sum_k exp(2 (beta_k - nu t_k)) h.
double scalar_dufresne_functional(double nu, const PathGrid& grid, VectorNoise& beta);
TailResult<double> scalar_dufresne_functional(double nu, const TailPolicy& policy, double h, VectorNoise& beta);
TailResult<double> scalar_dufresne_functional(double nu, const TailPolicy& policy, double h, RngStream& stream_beta);

struct ExplicitSolution {
  Trajectory<HermitianMatrix> path;  ///< M_t^-1 [X0 + int M (dB^(mu) + dB^(mu)dagger)/sqrt2 M^dagger] M_t^-dagger
  std::vector<ComplexMatrix> dW;     ///< increments driving M^(+nu)
  std::vector<ComplexMatrix> dB;     ///< undrifted increments of B
};

/// Builds the closed-form solution of the Hermitian diffusion from a coupled
/// forward/inverse pair of M^(+nu) and the running stochastic integral.
ExplicitSolution explicit_solution_path(const ModelParams& params, const HermitianMatrix& x0, const PathGrid& grid,
                                        MatrixNoise& w, MatrixNoise& b);
ExplicitSolution explicit_solution_path(const ModelParams& params, const HermitianMatrix& x0, const PathGrid& grid,
                                        RngStream& stream_m, RngStream& stream_b);

/// dGamma_k = [-(1/sqrt2) dW_k X_k + dB_k / sqrt2] ((I + X_k^2)/2)^(-1/2),
/// evaluated on the explicit path at left endpoints.
std::vector<ComplexMatrix> reconstruct_gamma_increments(const ExplicitSolution& solution);

}  // namespace hplab
