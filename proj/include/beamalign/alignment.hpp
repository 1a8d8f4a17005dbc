// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "beamalign/metrics.hpp"

namespace beamalign {

struct IiaOptions {
  int max_iter = 5000;
  /// Stop when total leakage (at unit per-stream power) falls below this.
  double leak_tol = 1e-14;
  bool record_trace = false;
};

/// Outcome of the iterative alignment run. Non-convergence is reported here,
/// never thrown: `beams` then holds the best iterate with its leakage.
struct IiaResult {
  Beamformers beams;  // orthonormal blocks
  int iterations = 0;
  double leakage = 0.0;  // at exit, unit per-stream power
  bool converged = false;
  std::vector<double> leakage_trace;  // one entry per half-step if recorded
};

/// Alternating leakage minimization. The forward half-step points each
/// user's receive block at the d smallest-eigenvalue eigenvectors of its
/// interference covariance; the reverse half-step does the same on the
/// reciprocal channel. Eigenvectors are scale-invariant, so the iteration is
/// independent of the power level; leakage is tracked at unit per-stream
/// power to keep the stopping rule SNR-free. Throws InfeasibleConfigError
/// when d > M.
IiaResult iia(const ChannelSet& ch, const SystemConfig& cfg,
              const Beamformers& init, const IiaOptions& opts = {});

/// The d x d channel seen by user k after inner coding: U_k^H H_kk V_k.
MatC equivalent_channel(const ChannelSet& ch, const Beamformers& inner, int k);

/// SVD factors of an equivalent channel with a deterministic phase
/// convention (largest-magnitude entry of each receive column made real
/// positive). `transmit` and `receive` are the d x d unitaries applied on
/// the corresponding sides; `singular_values` descend.
struct OuterCoders {
  MatC transmit;  // right singular vectors
  MatC receive;   // left singular vectors
  VecR singular_values;
};

OuterCoders outer_coders(const MatC& equivalent);

/// Water-filling allocation over parallel Gaussian channels with unit noise:
/// P_i = max(0, mu - 1/g_i) with mu set so the powers sum to total_power.
/// Throws AllZeroGainsError when no gain is positive.
struct WaterfillResult {
  VecR powers;
  double water_level = 0.0;
};

WaterfillResult waterfill(const VecR& gains, double total_power);

enum class OuterKind { Svd, ZeroForcing };

/// Inner alignment plus outer per-user coders and the power allocation that
/// goes with them. `composed` carries V_k = inner.V_k * outer_tx_k and
/// likewise for the receive side.
struct TwoLayerSolution {
  Beamformers inner;
  std::vector<MatC> outer_tx;
  std::vector<MatC> outer_rx;
  MatR singular_values;  // K x d, descending per user
  PowerAllocation powers;
  Beamformers composed;
  double rate_bits = 0.0;
  double water_level = 0.0;
  OuterKind outer_kind = OuterKind::Svd;
  bool alignment_warning = false;
};

/// Optimal two-layer design on a given interference-aligning inner solution:
/// SVD outer coders per user and water-filling across all K*d streams.
/// Warns (flag, stderr) when the inner residual is above the scale-free
/// alignment threshold.
TwoLayerSolution two_layer_design(const ChannelSet& ch,
                                  const Beamformers& inner,
                                  double total_power);

/// Baseline with identity transmit outer coder and a zero-forcing receive
/// filter built from the pseudo-inverse of the equivalent channel (columns
/// renormalized to unit norm), at equal power. Throws
/// SingularEquivalentChannelError when sigma_d < 1e-10 * sigma_1.
TwoLayerSolution zero_forcing_outer(const ChannelSet& ch,
                                    const Beamformers& inner,
                                    double total_power);

/// sum_{k,m} log2(1 + P_km * lambda_km^2) for parallel channels against
/// unit noise.
double parallel_channel_rate(const MatR& singular_values,
                             const PowerAllocation& powers);

}  // namespace beamalign
