// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "beamalign/linalg.hpp"

namespace beamalign {

/// Problem dimensions and power budget for a K-user interference channel
/// with M antennas per node and d streams per user. Noise variance is fixed
/// to 1 per receive antenna and all rates are base-2 logarithms (bits).
/// Reported SNR is per-stream: SNR = P_t / (K d), so that under equal
/// allocation each stream sees the nominal SNR against unit noise.
struct SystemConfig {
  int num_users = 0;     // K
  int num_antennas = 0;  // M
  int num_streams = 0;   // d
  double total_power = 1.0;

  /// Validates dimensions (throws InfeasibleConfigError) and warns on stderr
  /// when M != 2d, which is the operating point the experiments assume.
  static SystemConfig create(int users, int antennas, int streams,
                             double total_power);

  int total_streams() const { return num_users * num_streams; }
  double per_stream_power() const { return total_power / total_streams(); }
  double snr_db() const;
  static double total_power_for_snr_db(int users, int streams, double snr_db);
};

/// K x K grid of M x M complex channel matrices. Entry (k, l) maps
/// transmitter l to receiver k. Immutable in practice after generation.
class ChannelSet {
 public:
  ChannelSet() = default;
  ChannelSet(int users, int antennas);

  const MatC& at(int rx, int tx) const {
    return entries_[static_cast<std::size_t>(rx) * users_ + tx];
  }
  MatC& at(int rx, int tx) {
    return entries_[static_cast<std::size_t>(rx) * users_ + tx];
  }

  int users() const { return users_; }
  int antennas() const { return antennas_; }

  /// Generation seed; empty for externally supplied matrices.
  std::optional<std::uint64_t> seed;

 private:
  int users_ = 0;
  int antennas_ = 0;
  std::vector<MatC> entries_;
};

/// Draws every channel entry i.i.d. CN(0,1). The stream is consumed
/// row-major over (rx, tx) pairs, then row-major over matrix entries, real
/// part before imaginary, so identical (cfg, seed) reproduce identical bits.
/// Draws are rejected and redone (continuing the stream) in the measure-zero
/// event that some matrix is numerically rank deficient.
ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t seed);

/// Channel with the transmitter/receiver roles swapped: output entry (l, k)
/// is the conjugate transpose of input entry (k, l). Involution.
ChannelSet reciprocal(const ChannelSet& ch);

/// Per-user transmit precoders V and receive decoders U, each M x d with
/// unit-norm columns (orthonormal blocks where an algorithm requires it).
struct Beamformers {
  std::vector<MatC> V;
  std::vector<MatC> U;
};

/// Random beamformers: per user, V then U, each an M x d complex Gaussian
/// block, orthonormalized or column-normalized.
Beamformers random_beamformers(const SystemConfig& cfg, std::uint64_t seed,
                               bool orthonormal);

bool columns_unit_norm(const Beamformers& b, double tol = 1e-10);
bool blocks_orthonormal(const Beamformers& b, double tol = 1e-8);

/// Per-stream transmit powers, K x d, nonnegative, summing to P_t.
struct PowerAllocation {
  MatR stream_power;

  static PowerAllocation equal(const SystemConfig& cfg);
  static PowerAllocation zero(int users, int streams);
  double total() const { return stream_power.sum(); }
};

}  // namespace beamalign
