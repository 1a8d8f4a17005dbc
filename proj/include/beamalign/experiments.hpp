// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "beamalign/alignment.hpp"
#include "beamalign/gradient.hpp"
#include "beamalign/maxsinr.hpp"

namespace beamalign {

enum class Algorithm { Iia, MaxSinr, Gradient, TwoLayer, ZfOuter };

std::string to_string(Algorithm algo);
std::optional<Algorithm> parse_algorithm(const std::string& name);

/// Options shared by every multi-start experiment. Each initialization gets
/// an independent RNG stream derived from `seed` and its index, so results
/// do not depend on the worker count.
struct RunOptions {
  Algorithm algo = Algorithm::Iia;
  int num_inits = 1;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  IiaOptions iia;
  MaxSinrOptions maxsinr;
  GradientOptions gradient;
};

/// Seed of the init stream for a given initialization index.
std::uint64_t init_seed(std::uint64_t master_seed, int init_index);

/// Runs the chosen algorithm once from the deterministic initialization
/// with the given index. Two-layer and ZF-outer runs first obtain inner
/// alignment from the same initialization.
Solution run_single(const ChannelSet& ch, const SystemConfig& cfg,
                    const RunOptions& opts, int init_index);

/// All initializations, in init order regardless of scheduling.
std::vector<Solution> multi_start(const ChannelSet& ch,
                                  const SystemConfig& cfg,
                                  const RunOptions& opts);

/// One mode of the algorithm: solutions whose per-user transmit subspaces
/// and sum rates coincide within tolerances.
struct FixedPointCluster {
  Solution representative;
  int count = 0;
  double mean_rate = 0.0;
  std::vector<MatC> subspace_signature;  // per-user orthonormal V bases
  std::string label;                     // F1, F2, ... by descending rate
};

/// Greedy clustering of converged solutions: a solution joins the first
/// cluster whose representative is within `cluster_tol` chordal distance on
/// every user's transmit subspace and within `rate_tol` bits in sum rate.
/// Clusters are sorted by descending mean rate and labelled F1, F2, ...
/// Non-converged solutions are skipped (callers report them separately).
std::vector<FixedPointCluster> cluster_fixed_points(
    const std::vector<Solution>& solutions, double cluster_tol = 1e-2,
    double rate_tol = 0.1);

/// One row of a sweep: a single initialization at a single SNR point, with
/// the cluster it landed in and that cluster's occupancy share.
struct SweepRecord {
  double snr_db = 0.0;
  std::string algorithm;
  std::string cluster_id;  // "NC" for non-converged runs
  double rate_bits = 0.0;
  double occupancy_percent = 0.0;
  std::int64_t channel_seed = -1;  // -1 for externally supplied channels
  std::uint64_t init_seed = 0;
};

/// Reuses the same initialization set at every SNR point (which is what
/// makes cross-over of an initialization between modes observable) and
/// emits one record per (initialization, SNR) pair, ordered by
/// initialization then SNR.
std::vector<SweepRecord> snr_sweep(const ChannelSet& ch,
                                   const SystemConfig& cfg_template,
                                   const RunOptions& opts,
                                   const std::vector<double>& snr_points_db);

/// Zero-forcing outer-coder penalty, averaged over random channels: the
/// two-layer rate with equal power minus the ZF-outer rate on the same
/// inner alignment. `theoretical_bits` carries the chi-squared reference
/// value for the configured dimensions.
struct GapStudy {
  double mean_gap_bits = 0.0;
  double std_error_bits = 0.0;
  double theoretical_bits = 0.0;
  int channels_used = 0;
  int channels_skipped = 0;  // alignment failed; excluded from the mean
};

GapStudy zf_gap_study(const SystemConfig& cfg, int num_channels,
                      std::uint64_t seed, const RunOptions& opts);

/// Expected ZF-vs-optimal outer-coder gap in bits for K users with d
/// streams over i.i.d. complex Gaussian equivalent channels.
double theoretical_zf_gap_bits(int users, int streams);

/// Index-parallel map with a bounded worker pool; results must be written
/// by index so the outcome is independent of scheduling.
void parallel_for(int count, int workers,
                  const std::function<void(int)>& body);

}  // namespace beamalign
