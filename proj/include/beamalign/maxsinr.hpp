// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "beamalign/metrics.hpp"

namespace beamalign {

struct MaxSinrOptions {
  int max_iter = 2000;
  /// Fixed-point displacement threshold (phase-invariant metric below).
  double fp_tol = 1e-6;
  /// Re-orthonormalize each user's block after every half-step.
  bool orthogonalize = true;
  bool record_trace = false;
};

struct TracePoint {
  int iteration = 0;
  double displacement = 0.0;
  double sum_rate_bits = 0.0;
  double leakage = 0.0;
};

/// A converged (or stopped) run of an iterative design algorithm, with the
/// diagnostics needed to classify it as a fixed point. `final_displacement`
/// holds the algorithm's own convergence residual -- the displacement metric
/// for max-SINR and gradient runs -- and `converged` is equivalent to
/// `final_displacement < fp_tol`.
struct Solution {
  Beamformers beams;
  PowerAllocation powers;
  std::string algorithm;
  int iterations = 0;
  bool converged = false;
  double final_displacement = 0.0;
  double fp_tol = 0.0;
  RateReport rate;
  AlignmentDiagnostics alignment;
  std::vector<TracePoint> trace;
};

/// Whitened matched filter R^-1 H v, normalized to unit norm. The linear
/// system is solved, never inverted. Throws ZeroDirectionError when the
/// unnormalized filter is numerically zero.
VecC wmf(const MatC& noise_cov, const MatC& channel, const VecC& beam);

/// VU step: SINR-optimal receive filter for every stream of every user,
/// given transmit blocks V and powers. With `orthogonalize`, each user's
/// M x d result is re-orthonormalized by QR (positive-diagonal convention).
std::vector<MatC> vu_step(const ChannelSet& ch, const std::vector<MatC>& V,
                          const PowerAllocation& powers, bool orthogonalize);

/// UV step: the same update run on the reciprocal channel with the receive
/// blocks acting as transmitters.
std::vector<MatC> uv_step(const ChannelSet& reciprocal_ch,
                          const std::vector<MatC>& U,
                          const PowerAllocation& reverse_powers,
                          bool orthogonalize);

/// Phase-invariant displacement between two beamformer sets: per user, the
/// chordal distance between successive subspaces plus the per-column
/// phase-aligned vector distance, for both V and U; the maximum over users
/// is returned. Quotienting out per-column phases is what makes fixed
/// points detectable at all -- they are only defined up to such phases.
double beamformer_displacement(const Beamformers& a, const Beamformers& b);

/// Alternates VU and UV steps at equal per-stream power (both directions)
/// until the displacement between successive iterates drops below fp_tol or
/// max_iter composite iterations have run. Non-convergence is encoded in
/// the returned Solution, never thrown.
Solution run_max_sinr(const ChannelSet& ch, const SystemConfig& cfg,
                      const Beamformers& init, const MaxSinrOptions& opts);

/// Local convergence probe around a converged solution: perturb every beam
/// column by epsilon along a random direction, renormalize, then track the
/// distance back to the fixed point over composite iterations.
struct DecayReport {
  /// distance_to_fixed_point[trial][i] = distance after i iterations
  /// (entry 0 is the post-perturbation distance).
  std::vector<std::vector<double>> distance_to_fixed_point;
  std::vector<double> contraction_ratios;  // pooled per-iteration ratios
  double median_contraction = 0.0;
  /// Median over trials of the distance after one composite iteration.
  double median_first_step_distance = 0.0;
};

DecayReport perturb_and_measure(const ChannelSet& ch, const SystemConfig& cfg,
                                const Solution& fixed_point, double epsilon,
                                int trials, int iterations,
                                std::uint64_t seed);

}  // namespace beamalign
