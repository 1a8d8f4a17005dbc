// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "beamalign/experiments.hpp"

namespace beamalign {

/// Mode-vs-SNR summary for one (algorithm, channel) group of sweep records:
/// rows are per-SNR rate-ranked cluster labels, one column per SNR point,
/// cell = mean rate with occupancy share.
struct ModeTable {
  std::string algorithm;
  std::int64_t channel_seed = -1;
  std::vector<double> snr_points_db;
  std::vector<std::string> labels;  // F1..Fk, union over SNR points
  // cell (label, snr): mean rate and occupancy; occupancy < 0 marks an
  // empty cell (mode absent at that SNR).
  std::vector<std::vector<double>> rate;
  std::vector<std::vector<double>> occupancy;
  std::vector<double> average_rate;  // over converged inits, per SNR
  int inits = 0;
  /// Initializations whose cluster label is not constant across SNR.
  int label_transitions = 0;
};

/// Groups records by (algorithm, channel_seed) and pivots each group.
std::vector<ModeTable> build_mode_tables(
    const std::vector<SweepRecord>& records);

/// Markdown rendering with fixed numeric formatting (rates to 2 decimals,
/// occupancy to 1).
std::string render_markdown(const ModeTable& table);

/// Long-format CSV for plotting: algorithm,cluster_id,snr_db,rate_bits.
std::string render_plot_csv(const std::vector<ModeTable>& tables);

/// Minimal self-contained SVG line plot of per-mode rate vs SNR.
std::string render_svg(const ModeTable& table);

}  // namespace beamalign
