// SPDX-License-Identifier: Apache-2.0
#include "beamalign/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

namespace beamalign {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Iia: return "iia";
    case Algorithm::MaxSinr: return "max-sinr";
    case Algorithm::Gradient: return "grad";
    case Algorithm::TwoLayer: return "two-layer";
    case Algorithm::ZfOuter: return "zf-outer";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "iia") return Algorithm::Iia;
  if (name == "max-sinr") return Algorithm::MaxSinr;
  if (name == "grad") return Algorithm::Gradient;
  if (name == "two-layer") return Algorithm::TwoLayer;
  if (name == "zf-outer") return Algorithm::ZfOuter;
  return std::nullopt;
}

std::uint64_t init_seed(std::uint64_t master_seed, int init_index) {
  return split_seed(master_seed, static_cast<std::uint64_t>(init_index));
}

void parallel_for(int count, int workers,
                  const std::function<void(int)>& body) {
  if (workers <= 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

Solution solution_from_iia(const ChannelSet& ch, const SystemConfig& cfg,
                           const IiaResult& inner) {
  Solution sol;
  sol.algorithm = "iia";
  sol.beams = inner.beams;
  sol.powers = PowerAllocation::equal(cfg);
  sol.iterations = inner.iterations;
  sol.converged = inner.converged;
  sol.final_displacement = inner.leakage;
  sol.fp_tol = 0.0;
  // Rate of the aligned subspaces as interference-free parallel channels at
  // equal power (per-user equivalent-channel singular values). Invariant to
  // the orthonormal basis the run converged to, so solutions in the same
  // mode report the same rate.
  const int streams = cfg.num_streams;
  sol.rate.per_stream = MatR::Zero(cfg.num_users, streams);
  sol.rate.per_user = VecR::Zero(cfg.num_users);
  const double rho = cfg.per_stream_power();
  for (int k = 0; k < cfg.num_users; ++k) {
    Eigen::JacobiSVD<MatC> svd(equivalent_channel(ch, sol.beams, k));
    for (int m = 0; m < streams; ++m) {
      const double gain = svd.singularValues()(m);
      const double rate = std::log2(1.0 + rho * gain * gain);
      sol.rate.per_stream(k, m) = rate;
      sol.rate.per_user(k) += rate;
      sol.rate.total += rate;
    }
  }
  sol.alignment = alignment_residual(ch, sol.beams);
  return sol;
}

Solution solution_from_two_layer(const ChannelSet& ch,
                                 const TwoLayerSolution& design,
                                 const IiaResult& inner,
                                 const std::string& tag) {
  Solution sol;
  sol.algorithm = tag;
  sol.beams = design.composed;
  sol.powers = design.powers;
  sol.iterations = inner.iterations;
  sol.converged = inner.converged;
  sol.final_displacement = inner.leakage;
  sol.fp_tol = 0.0;
  if (design.outer_kind == OuterKind::Svd) {
    sol.rate.per_stream = MatR::Zero(design.singular_values.rows(),
                                     design.singular_values.cols());
    sol.rate.per_user = VecR::Zero(design.singular_values.rows());
    for (int k = 0; k < design.singular_values.rows(); ++k)
      for (int m = 0; m < design.singular_values.cols(); ++m) {
        const double sv = design.singular_values(k, m);
        const double r =
            std::log2(1.0 + design.powers.stream_power(k, m) * sv * sv);
        sol.rate.per_stream(k, m) = r;
        sol.rate.per_user(k) += r;
        sol.rate.total += r;
      }
  } else {
    sol.rate = sum_rate_fixed_filters(ch, design.composed, design.powers);
  }
  sol.alignment = alignment_residual(ch, sol.beams);
  return sol;
}

// Clustering that also reports, per solution, the cluster it joined
// (-1 for non-converged solutions).
std::vector<FixedPointCluster> cluster_with_assignments(
    const std::vector<Solution>& solutions, double cluster_tol,
    double rate_tol, std::vector<int>* assignment_out) {
  std::vector<FixedPointCluster> clusters;
  std::vector<int> assignment(solutions.size(), -1);
  for (std::size_t s = 0; s < solutions.size(); ++s) {
    const Solution& sol = solutions[s];
    if (!sol.converged) continue;
    std::vector<MatC> signature;
    signature.reserve(sol.beams.V.size());
    for (const MatC& v : sol.beams.V) signature.push_back(qr_orthonormal(v));

    int home = -1;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      bool close = std::abs(sol.rate.total -
                            clusters[c].representative.rate.total) < rate_tol;
      for (std::size_t k = 0; close && k < signature.size(); ++k)
        close = chordal_distance(signature[k],
                                 clusters[c].subspace_signature[k]) <
                cluster_tol;
      if (close) {
        home = static_cast<int>(c);
        break;
      }
    }
    if (home >= 0) {
      FixedPointCluster& cluster = clusters[home];
      cluster.count += 1;
      cluster.mean_rate += (sol.rate.total - cluster.mean_rate) / cluster.count;
    } else {
      FixedPointCluster fresh;
      fresh.representative = sol;
      fresh.count = 1;
      fresh.mean_rate = sol.rate.total;
      fresh.subspace_signature = std::move(signature);
      home = static_cast<int>(clusters.size());
      clusters.push_back(std::move(fresh));
    }
    assignment[s] = home;
  }

  // Sort by descending mean rate, remapping assignments to the new order.
  std::vector<int> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return clusters[a].mean_rate > clusters[b].mean_rate;
  });
  std::vector<int> rank(clusters.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  std::vector<FixedPointCluster> sorted;
  sorted.reserve(clusters.size());
  for (int idx : order) sorted.push_back(std::move(clusters[idx]));
  for (std::size_t i = 0; i < sorted.size(); ++i)
    sorted[i].label = "F" + std::to_string(i + 1);
  if (assignment_out) {
    for (int& a : assignment)
      if (a >= 0) a = rank[a];
    *assignment_out = std::move(assignment);
  }
  return sorted;
}

}  // namespace

Solution run_single(const ChannelSet& ch, const SystemConfig& cfg,
                    const RunOptions& opts, int init_index) {
  const std::uint64_t seed = init_seed(opts.seed, init_index);
  const bool orthonormal_init =
      opts.algo != Algorithm::Gradient &&
      (opts.algo != Algorithm::MaxSinr || opts.maxsinr.orthogonalize);
  const Beamformers init = random_beamformers(cfg, seed, orthonormal_init);

  switch (opts.algo) {
    case Algorithm::MaxSinr:
      return run_max_sinr(ch, cfg, init, opts.maxsinr);
    case Algorithm::Gradient:
      return run_gradient_ascent(ch, cfg, init, opts.gradient);
    case Algorithm::Iia:
      return solution_from_iia(ch, cfg, iia(ch, cfg, init, opts.iia));
    case Algorithm::TwoLayer: {
      const IiaResult inner = iia(ch, cfg, init, opts.iia);
      return solution_from_two_layer(
          ch, two_layer_design(ch, inner.beams, cfg.total_power), inner,
          "two-layer");
    }
    case Algorithm::ZfOuter: {
      const IiaResult inner = iia(ch, cfg, init, opts.iia);
      return solution_from_two_layer(
          ch, zero_forcing_outer(ch, inner.beams, cfg.total_power), inner,
          "zf-outer");
    }
  }
  throw std::logic_error("unreachable algorithm tag");
}

std::vector<Solution> multi_start(const ChannelSet& ch,
                                  const SystemConfig& cfg,
                                  const RunOptions& opts) {
  std::vector<Solution> solutions(opts.num_inits);
  parallel_for(opts.num_inits, opts.workers, [&](int i) {
    solutions[i] = run_single(ch, cfg, opts, i);
  });
  return solutions;
}

std::vector<FixedPointCluster> cluster_fixed_points(
    const std::vector<Solution>& solutions, double cluster_tol,
    double rate_tol) {
  return cluster_with_assignments(solutions, cluster_tol, rate_tol, nullptr);
}

std::vector<SweepRecord> snr_sweep(const ChannelSet& ch,
                                   const SystemConfig& cfg_template,
                                   const RunOptions& opts,
                                   const std::vector<double>& snr_points_db) {
  const std::int64_t channel_seed =
      ch.seed ? static_cast<std::int64_t>(*ch.seed) : -1;
  const int n_snr = static_cast<int>(snr_points_db.size());
  // records[init][snr_index]; flattened afterwards in (init, snr) order.
  std::vector<std::vector<SweepRecord>> table(
      opts.num_inits, std::vector<SweepRecord>(n_snr));

  for (int s = 0; s < n_snr; ++s) {
    SystemConfig cfg = cfg_template;
    cfg.total_power = SystemConfig::total_power_for_snr_db(
        cfg.num_users, cfg.num_streams, snr_points_db[s]);
    const std::vector<Solution> solutions = multi_start(ch, cfg, opts);
    std::vector<int> assignment;
    const std::vector<FixedPointCluster> clusters =
        cluster_with_assignments(solutions, 1e-2, 0.1, &assignment);
    int n_converged = 0;
    for (const FixedPointCluster& c : clusters) n_converged += c.count;

    for (int i = 0; i < opts.num_inits; ++i) {
      SweepRecord rec;
      rec.snr_db = snr_points_db[s];
      rec.algorithm = to_string(opts.algo);
      rec.channel_seed = channel_seed;
      rec.init_seed = init_seed(opts.seed, i);
      rec.rate_bits = solutions[i].rate.total;
      if (assignment[i] >= 0) {
        const FixedPointCluster& cluster = clusters[assignment[i]];
        rec.cluster_id = cluster.label;
        rec.occupancy_percent =
            100.0 * cluster.count / std::max(1, n_converged);
      } else {
        rec.cluster_id = "NC";
        rec.occupancy_percent = 0.0;
      }
      table[i][s] = std::move(rec);
    }
  }

  std::vector<SweepRecord> records;
  records.reserve(static_cast<std::size_t>(opts.num_inits) * n_snr);
  for (int i = 0; i < opts.num_inits; ++i)
    for (int s = 0; s < n_snr; ++s) records.push_back(std::move(table[i][s]));
  return records;
}

double theoretical_zf_gap_bits(int users, int streams) {
  // K * (sum_{i=2}^{d} E log chi^2_{2i} - (d-1) E log chi^2_2) in bits;
  // the digamma differences reduce to harmonic numbers.
  constexpr double kLn2 = 0.6931471805599453;
  double harmonic_sum = 0.0;
  double harmonic = 0.0;
  for (int i = 2; i <= streams; ++i) {
    harmonic += 1.0 / (i - 1);
    harmonic_sum += harmonic;
  }
  return users * harmonic_sum / kLn2;
}

GapStudy zf_gap_study(const SystemConfig& cfg, int num_channels,
                      std::uint64_t seed, const RunOptions& opts) {
  struct PerChannel {
    double gap = 0.0;
    bool used = false;
  };
  std::vector<PerChannel> rows(num_channels);

  parallel_for(num_channels, opts.workers, [&](int c) {
    const std::uint64_t channel_seed = split_seed(seed, 2 * c);
    const std::uint64_t start_seed = split_seed(seed, 2 * c + 1);
    const ChannelSet ch = generate_channels(cfg, channel_seed);
    const Beamformers init = random_beamformers(cfg, start_seed, true);
    const IiaResult inner = iia(ch, cfg, init, opts.iia);
    if (!inner.converged) return;

    // Equal power on both sides isolates the outer-coder effect.
    const TwoLayerSolution optimal =
        two_layer_design(ch, inner.beams, cfg.total_power);
    const double rate_optimal = parallel_channel_rate(
        optimal.singular_values, PowerAllocation::equal(cfg));
    const TwoLayerSolution zf =
        zero_forcing_outer(ch, inner.beams, cfg.total_power);
    rows[c].gap = rate_optimal - zf.rate_bits;
    rows[c].used = true;
  });

  GapStudy study;
  study.theoretical_bits =
      theoretical_zf_gap_bits(cfg.num_users, cfg.num_streams);
  double sum = 0.0;
  for (const PerChannel& row : rows) {
    if (!row.used) {
      ++study.channels_skipped;
      continue;
    }
    ++study.channels_used;
    sum += row.gap;
  }
  if (study.channels_used > 0) {
    study.mean_gap_bits = sum / study.channels_used;
    double var = 0.0;
    for (const PerChannel& row : rows)
      if (row.used) {
        const double dev = row.gap - study.mean_gap_bits;
        var += dev * dev;
      }
    if (study.channels_used > 1) {
      var /= (study.channels_used - 1);
      study.std_error_bits = std::sqrt(var / study.channels_used);
    }
  }
  return study;
}

}  // namespace beamalign
