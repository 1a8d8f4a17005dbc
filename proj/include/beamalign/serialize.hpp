// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "beamalign/experiments.hpp"

namespace beamalign {

/// Version stamped into solution/cluster documents; loading a document with
/// a larger version throws SchemaVersionError.
inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::json;

// Channel sets: {"K":…, "M":…, "seed":…, "H":[[[[[re,im],…]…]…]…]} with
// (rx, tx, row, col) nesting. Doubles round-trip bit-exactly.
Json channel_to_json(const ChannelSet& ch);
ChannelSet channel_from_json(const Json& j);
void save_channels(const ChannelSet& ch, const std::filesystem::path& path);
ChannelSet load_channels(const std::filesystem::path& path);

Json beamformers_to_json(const Beamformers& b);
Beamformers beamformers_from_json(const Json& j);

Json solution_to_json(const Solution& sol);
Solution solution_from_json(const Json& j);

Json clusters_to_json(const std::vector<FixedPointCluster>& clusters);
std::vector<FixedPointCluster> clusters_from_json(const Json& j);

Json two_layer_to_json(const TwoLayerSolution& sol);

void save_json(const Json& j, const std::filesystem::path& path);
Json load_json(const std::filesystem::path& path);

/// Fixed-header CSV (snr_db,algorithm,cluster_id,rate_bits,
/// occupancy_percent,channel_seed,init_seed). Doubles are printed with
/// shortest round-trip formatting, so write/read is lossless.
void write_sweep_csv(const std::vector<SweepRecord>& records,
                     const std::filesystem::path& path);
std::vector<SweepRecord> read_sweep_csv(const std::filesystem::path& path);

/// Per-stream rate rows: "k,m,rate_bits\n" (header included).
std::string rate_report_csv(const RateReport& report);
Json rate_report_summary(const RateReport& report);

/// Per-iteration trace rows: "iter,displacement,sum_rate_bits,leakage\n".
std::string trace_csv(const std::vector<TracePoint>& trace);

/// Shortest decimal form of a double that parses back to the same bits.
std::string format_double(double value);

}  // namespace beamalign
