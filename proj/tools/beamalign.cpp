// SPDX-License-Identifier: Apache-2.0
//
// Command-line front door: channel generation, multi-start runs, SNR
// sweeps, the zero-forcing gap study, and report rendering.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "beamalign/errors.hpp"
#include "beamalign/report.hpp"
#include "beamalign/serialize.hpp"

namespace fs = std::filesystem;
using namespace beamalign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitConvergence = 4;

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

/// BEAMALIGN_SEED, when set, overrides any --seed value.
void apply_seed_env(std::uint64_t& seed) {
  if (const char* env = std::getenv("BEAMALIGN_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') seed = v;
  }
}

/// Inclusive start:step:stop range; a bare number is a single point.
std::vector<double> parse_snr_range(const std::string& text) {
  const auto first = text.find(':');
  if (first == std::string::npos) return {std::stod(text)};
  const auto second = text.find(':', first + 1);
  if (second == std::string::npos)
    throw InfeasibleConfigError("SNR range must be start:step:stop");
  const double start = std::stod(text.substr(0, first));
  const double step = std::stod(text.substr(first + 1, second - first - 1));
  const double stop = std::stod(text.substr(second + 1));
  if (step <= 0.0) throw InfeasibleConfigError("SNR range step must be > 0");
  std::vector<double> points;
  for (double snr = start; snr <= stop + 1e-9; snr += step)
    points.push_back(snr);
  return points;
}

struct AlgoFlags {
  std::string algo = "iia";
  int inits = 1;
  std::uint64_t seed = 0;
  int workers = 0;
  int d = 0;  // 0 = M/2
  int max_iter = 0;
  double fp_tol = 1e-6;
  double leak_tol = 1e-14;
  bool no_orthogonalize = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--algo", algo, "iia|max-sinr|grad|two-layer|zf-outer");
    cmd->add_option("--inits", inits, "number of random initializations")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "master seed for initializations");
    cmd->add_option("--workers", workers,
                    "worker threads (0 = all cores, 1 = serial)");
    cmd->add_option("--d", d, "streams per user (default M/2)");
    cmd->add_option("--max-iter", max_iter, "iteration cap override");
    cmd->add_option("--fp-tol", fp_tol, "fixed-point displacement tolerance");
    cmd->add_option("--leak-tol", leak_tol, "alignment leakage tolerance");
    cmd->add_flag("--no-orthogonalize", no_orthogonalize,
                  "disable per-user re-orthonormalization in max-SINR");
  }

  RunOptions to_run_options() const {
    const auto parsed = parse_algorithm(algo);
    if (!parsed) throw InfeasibleConfigError("unknown algorithm: " + algo);
    RunOptions opts;
    opts.algo = *parsed;
    opts.num_inits = inits;
    opts.seed = seed;
    opts.workers = workers;
    opts.maxsinr.fp_tol = fp_tol;
    opts.maxsinr.orthogonalize = !no_orthogonalize;
    opts.iia.leak_tol = leak_tol;
    opts.gradient.grad_tol = fp_tol;
    if (max_iter > 0) {
      opts.maxsinr.max_iter = max_iter;
      opts.iia.max_iter = max_iter;
      opts.gradient.max_iter = max_iter;
    }
    return opts;
  }
};

void print_cluster_table(const std::vector<FixedPointCluster>& clusters,
                         int n_total, int n_converged) {
  std::printf("%-6s %10s %12s %6s\n", "mode", "rate", "occupancy", "count");
  for (const FixedPointCluster& c : clusters) {
    const double occ = 100.0 * c.count / std::max(1, n_converged);
    std::printf("%-6s %10s %11s%% %6d\n", c.label.c_str(),
                fixed(c.mean_rate, 2).c_str(), fixed(occ, 1).c_str(),
                c.count);
  }
  if (n_total > n_converged)
    std::printf("non-converged: %d of %d runs (excluded)\n",
                n_total - n_converged, n_total);
}

int cmd_gen_channels(int users, int antennas, int streams, std::uint64_t seed,
                     const std::string& out) {
  const SystemConfig cfg = SystemConfig::create(users, antennas, streams, 1.0);
  const ChannelSet ch = generate_channels(cfg, seed);
  save_channels(ch, out);
  std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));
  std::printf("condition numbers (rx k, tx l):\n");
  for (int k = 0; k < users; ++k) {
    for (int l = 0; l < users; ++l) {
      Eigen::JacobiSVD<MatC> svd(ch.at(k, l));
      const VecR& s = svd.singularValues();
      std::printf(" %s", fixed(s(0) / s(s.size() - 1), 2).c_str());
    }
    std::printf("\n");
  }
  std::printf("wrote %s\n", out.c_str());
  return kExitOk;
}

int cmd_run(const AlgoFlags& flags, const std::string& channels_path,
            double snr_db, const std::string& out) {
  const ChannelSet ch = load_channels(channels_path);
  const int streams = flags.d > 0 ? flags.d : ch.antennas() / 2;
  const SystemConfig cfg = SystemConfig::create(
      ch.users(), ch.antennas(), streams,
      SystemConfig::total_power_for_snr_db(ch.users(), streams, snr_db));
  const RunOptions opts = flags.to_run_options();

  const std::vector<Solution> solutions = multi_start(ch, cfg, opts);
  const std::vector<FixedPointCluster> clusters =
      cluster_fixed_points(solutions);
  int n_converged = 0;
  for (const Solution& s : solutions)
    if (s.converged) ++n_converged;

  if (!out.empty()) {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["algorithm"] = to_string(opts.algo);
    doc["snr_db"] = snr_db;
    doc["channel"] = channel_to_json(ch);
    Json sols = Json::array();
    for (const Solution& s : solutions) sols.push_back(solution_to_json(s));
    doc["solutions"] = std::move(sols);
    doc["clusters"] = clusters_to_json(clusters);
    save_json(doc, out);
  }

  std::printf("algorithm %s, %s dB, %d initializations\n",
              to_string(opts.algo).c_str(), fixed(snr_db, 1).c_str(),
              opts.num_inits);
  print_cluster_table(clusters, opts.num_inits, n_converged);
  if (opts.algo == Algorithm::TwoLayer && !solutions.empty() &&
      solutions.front().converged) {
    // Echo the water-filling diagnostics for the first run.
    const Beamformers inner_init = random_beamformers(
        cfg, init_seed(opts.seed, 0), true);
    const IiaResult inner = iia(ch, cfg, inner_init, opts.iia);
    const TwoLayerSolution design =
        two_layer_design(ch, inner.beams, cfg.total_power);
    std::printf("first run: rate %s bits, water level %s\n",
                fixed(design.rate_bits, 2).c_str(),
                fixed(design.water_level, 6).c_str());
  }

  if (2 * (opts.num_inits - n_converged) > opts.num_inits) {
    std::fprintf(stderr,
                 "error: more than half of the runs failed to converge\n");
    return kExitConvergence;
  }
  return kExitOk;
}

int cmd_sweep(const AlgoFlags& flags, const std::string& channels_path,
              const std::string& snr_range, const std::string& out) {
  const ChannelSet ch = load_channels(channels_path);
  const int streams = flags.d > 0 ? flags.d : ch.antennas() / 2;
  SystemConfig cfg =
      SystemConfig::create(ch.users(), ch.antennas(), streams, 1.0);
  const RunOptions opts = flags.to_run_options();
  const std::vector<double> points = parse_snr_range(snr_range);

  // Resume: SNR points already holding a full record set are kept.
  std::vector<SweepRecord> existing;
  if (fs::exists(out)) existing = read_sweep_csv(out);
  std::set<double> done;
  {
    std::map<double, int> counts;
    for (const SweepRecord& r : existing)
      if (r.algorithm == to_string(opts.algo)) counts[r.snr_db] += 1;
    for (const auto& entry : counts)
      if (entry.second >= opts.num_inits) done.insert(entry.first);
  }
  std::vector<double> todo;
  for (double snr : points)
    if (!done.count(snr)) todo.push_back(snr);

  std::vector<SweepRecord> fresh = snr_sweep(ch, cfg, opts, todo);
  // Merge, keeping (init, snr) order over the requested range.
  std::vector<SweepRecord> merged;
  for (int i = 0; i < opts.num_inits; ++i) {
    const std::uint64_t want = init_seed(opts.seed, i);
    for (double snr : points) {
      bool found = false;
      for (const auto& pool : {&fresh, &existing}) {
        for (const SweepRecord& r : *pool)
          if (r.init_seed == want && r.snr_db == snr &&
              r.algorithm == to_string(opts.algo)) {
            merged.push_back(r);
            found = true;
            break;
          }
        if (found) break;
      }
    }
  }
  write_sweep_csv(merged, out);
  std::printf("wrote %zu records (%zu SNR points, %d inits) to %s\n",
              merged.size(), points.size(), opts.num_inits, out.c_str());
  if (!todo.empty() && todo.size() < points.size())
    std::printf("resumed: %zu of %zu SNR points reused\n",
                points.size() - todo.size(), points.size());
  return kExitOk;
}

int cmd_zf_gap(int users, int antennas, int streams, int channels,
               double snr_db, std::uint64_t seed, int workers) {
  const SystemConfig cfg = SystemConfig::create(
      users, antennas, streams,
      SystemConfig::total_power_for_snr_db(users, streams, snr_db));
  RunOptions opts;
  opts.workers = workers;
  opts.iia.max_iter = 10000;
  const GapStudy study = zf_gap_study(cfg, channels, seed, opts);
  std::printf("mean gap: %s bits (std error %s) over %d channels",
              fixed(study.mean_gap_bits, 2).c_str(),
              fixed(study.std_error_bits, 2).c_str(), study.channels_used);
  if (study.channels_skipped > 0)
    std::printf(", %d skipped (alignment failed)", study.channels_skipped);
  std::printf("\ntheoretical reference: %s bits\n",
              fixed(study.theoretical_bits, 3).c_str());
  return kExitOk;
}

int cmd_report(const std::string& in, const std::string& format,
               const std::string& out) {
  std::vector<SweepRecord> records;
  if (fs::is_directory(in)) {
    for (const auto& entry : fs::directory_iterator(in))
      if (entry.path().extension() == ".csv") {
        try {
          const auto part = read_sweep_csv(entry.path());
          records.insert(records.end(), part.begin(), part.end());
        } catch (const IoError&) {
          // not a sweep file; skip
        }
      }
  } else {
    records = read_sweep_csv(in);
  }
  if (format != "md")
    throw InfeasibleConfigError("unsupported report format: " + format);

  const std::vector<ModeTable> tables = build_mode_tables(records);
  std::string markdown;
  for (const ModeTable& table : tables) markdown += render_markdown(table) + "\n";
  std::fputs(markdown.c_str(), stdout);

  if (!out.empty()) {
    fs::create_directories(out);
    {
      std::ofstream md(fs::path(out) / "report.md");
      if (!md) throw IoError("cannot write report.md under " + out);
      md << markdown;
    }
    {
      std::ofstream plot(fs::path(out) / "rates_plot.csv");
      if (!plot) throw IoError("cannot write rates_plot.csv under " + out);
      plot << render_plot_csv(tables);
    }
    for (const ModeTable& table : tables) {
      const std::string name = "rates_" + table.algorithm + "_" +
                               std::to_string(table.channel_seed) + ".svg";
      std::ofstream svg(fs::path(out) / name);
      if (!svg) throw IoError("cannot write " + name + " under " + out);
      svg << render_svg(table);
    }
    std::printf("report written under %s\n", out.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamalign: beamformer design for MIMO interference channels"};
  // config keys live under a [subcommand] section; flags take precedence
  app.set_config("--config", "", "key=value config file; flags win");
  app.fallthrough();
  app.require_subcommand(1);

  // gen-channels
  auto* gen = app.add_subcommand("gen-channels", "generate a random channel set");
  int gen_K = 3, gen_M = 2, gen_d = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "channels.json";
  gen->add_option("--K", gen_K, "number of users")->check(CLI::PositiveNumber);
  gen->add_option("--M", gen_M, "antennas per node")->check(CLI::PositiveNumber);
  gen->add_option("--d", gen_d, "streams per user")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output JSON path");

  // run
  auto* run = app.add_subcommand("run", "multi-start run + fixed-point table");
  AlgoFlags run_flags;
  run_flags.attach(run);
  std::string run_channels, run_out;
  double run_snr = 40.0;
  run->add_option("--channels", run_channels, "channel JSON path")->required();
  run->add_option("--snr-db", run_snr, "per-stream SNR in dB");
  run->add_option("--out", run_out, "output JSON path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "same inits across an SNR range");
  AlgoFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::string sweep_channels, sweep_out = "sweep.csv", sweep_range = "0:10:80";
  sweep->add_option("--channels", sweep_channels, "channel JSON path")
      ->required();
  sweep->add_option("--snr-db", sweep_range, "start:step:stop inclusive");
  sweep->add_option("--out", sweep_out, "output CSV path");

  // zf-gap
  auto* gap = app.add_subcommand("zf-gap", "zero-forcing outer-coder penalty");
  int gap_K = 3, gap_M = 4, gap_d = 2, gap_channels = 100, gap_workers = 0;
  double gap_snr = 60.0;
  std::uint64_t gap_seed = 0;
  gap->add_option("--K", gap_K)->check(CLI::PositiveNumber);
  gap->add_option("--M", gap_M)->check(CLI::PositiveNumber);
  gap->add_option("--d", gap_d)->check(CLI::PositiveNumber);
  gap->add_option("--channels", gap_channels, "number of random channels");
  gap->add_option("--snr-db", gap_snr);
  gap->add_option("--seed", gap_seed);
  gap->add_option("--workers", gap_workers);

  // report
  auto* report = app.add_subcommand("report", "render sweep CSVs as tables");
  std::string report_in, report_format = "md", report_out;
  report->add_option("--in", report_in, "sweep CSV file or directory")
      ->required();
  report->add_option("--format", report_format, "output format (md)");
  report->add_option("--out", report_out, "directory for md/plot/svg files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      apply_seed_env(gen_seed);
      return cmd_gen_channels(gen_K, gen_M, gen_d, gen_seed, gen_out);
    }
    if (run->parsed()) {
      apply_seed_env(run_flags.seed);
      return cmd_run(run_flags, run_channels, run_snr, run_out);
    }
    if (sweep->parsed()) {
      apply_seed_env(sweep_flags.seed);
      return cmd_sweep(sweep_flags, sweep_channels, sweep_range, sweep_out);
    }
    if (gap->parsed()) {
      apply_seed_env(gap_seed);
      return cmd_zf_gap(gap_K, gap_M, gap_d, gap_channels, gap_snr, gap_seed,
                        gap_workers);
    }
    if (report->parsed())
      return cmd_report(report_in, report_format, report_out);
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const SchemaVersionError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
