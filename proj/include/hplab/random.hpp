#pragma once

// Reproducible randomness. Every stream is a Philox4x32-10 counter-based
// generator keyed by the 64-bit seed; the 64-bit stream id occupies the high
// half of the 128-bit counter, so a stream's output is a pure function of
// (seed, stream_id, draw index) and replicates can run in any order on any
// number of threads.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "hplab/linalg.hpp"

namespace hplab {

/// One Philox4x32-10 block: 10 rounds applied to `counter` under `key`.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Standard normal quantile (Wichura's AS 241, ~1e-16 relative accuracy).
double normal_quantile(double p);

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal by inversion of one uniform.
  double normal();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

RngStream substream(std::uint64_t seed, std::uint64_t replicate_id);

/// Stream ids are laid out as (role << 48) | replicate so that every
/// independent driver of a replicate gets its own stream.
enum class StreamRole : std::uint64_t {
  kMatrixW = 0,    ///< W driving M^(+-nu)
  kMatrixB = 1,    ///< B driving the Hermitian integrator
  kScalarBeta = 2,
  kScalarGamma = 3,
  kReference = 4,  ///< independent reference batch
  kInitial = 5,    ///< initial conditions
  kAuxiliary = 6,  ///< bridge refinements and other extra draws
  kSecondW = 7,
  kSecondB = 8,
};

std::uint64_t stream_id(StreamRole role, std::uint64_t replicate);
RngStream role_stream(std::uint64_t seed, StreamRole role, std::uint64_t replicate);

struct BrownianIncrement {
  double dt = 0.0;
  ComplexMatrix dW;
};

/// N x N complex Brownian increment: 2N^2 independent N(0, dt) draws, real
/// part then imaginary part in row-major order, so E[dW_ij conj(dW_ij)] = 2dt
/// and E[dW_ij dW_ij] = 0. Throws kInvalidStep if dt <= 0.
BrownianIncrement complex_bm_increment(RngStream& stream, std::size_t dim, double dt);
/// Same draws written into `out` (resized to dim if needed).
void fill_complex_bm_increment(RngStream& stream, double dt, ComplexMatrix& out);

/// N(0, dt). Throws kInvalidStep if dt <= 0.
double real_bm_increment(RngStream& stream, double dt);

}  // namespace hplab
