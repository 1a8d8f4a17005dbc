// SPDX-License-Identifier: Apache-2.0
#include "beamalign/maxsinr.hpp"

#include <algorithm>
#include <cmath>

#include "beamalign/errors.hpp"

namespace beamalign {

VecC wmf(const MatC& noise_cov, const MatC& channel, const VecC& beam) {
  const VecC x = noise_cov.ldlt().solve(channel * beam);
  const double n = x.norm();
  if (!(n >= 1e-300))
    throw ZeroDirectionError("whitened matched filter direction vanished");
  return x / n;
}

namespace {

std::vector<MatC> half_step(const ChannelSet& ch, const std::vector<MatC>& tx,
                            const PowerAllocation& powers, bool orthogonalize) {
  const int users = ch.users();
  const int m_dim = ch.antennas();
  const int streams = static_cast<int>(tx[0].cols());
  std::vector<MatC> rx(users);
  for (int k = 0; k < users; ++k) {
    // Full covariance once, then a rank-one downdate per stream.
    MatC r_full = MatC::Identity(m_dim, m_dim);
    for (int l = 0; l < users; ++l) {
      const MatC t = ch.at(k, l) * tx[l];
      for (int j = 0; j < streams; ++j)
        r_full.noalias() +=
            powers.stream_power(l, j) * t.col(j) * t.col(j).adjoint();
    }
    const MatC own = ch.at(k, k) * tx[k];
    MatC block(m_dim, streams);
    for (int m = 0; m < streams; ++m) {
      MatC r = r_full -
               powers.stream_power(k, m) * own.col(m) * own.col(m).adjoint();
      r = (r + r.adjoint()) / 2.0;
      const VecC x = r.ldlt().solve(own.col(m));
      const double n = x.norm();
      if (!(n >= 1e-300))
        throw ZeroDirectionError("whitened matched filter direction vanished");
      block.col(m) = x / n;
    }
    rx[k] = orthogonalize ? qr_orthonormal(block) : std::move(block);
  }
  return rx;
}

}  // namespace

std::vector<MatC> vu_step(const ChannelSet& ch, const std::vector<MatC>& V,
                          const PowerAllocation& powers, bool orthogonalize) {
  return half_step(ch, V, powers, orthogonalize);
}

std::vector<MatC> uv_step(const ChannelSet& reciprocal_ch,
                          const std::vector<MatC>& U,
                          const PowerAllocation& reverse_powers,
                          bool orthogonalize) {
  return half_step(reciprocal_ch, U, reverse_powers, orthogonalize);
}

namespace {

double block_displacement(const MatC& current, const MatC& previous) {
  return subspace_distance(current, previous) +
         phase_aligned_column_distance(current, previous);
}

}  // namespace

double beamformer_displacement(const Beamformers& a, const Beamformers& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.V.size(); ++k) {
    const double dk = block_displacement(a.V[k], b.V[k]) +
                      block_displacement(a.U[k], b.U[k]);
    worst = std::max(worst, dk);
  }
  return worst;
}

Solution run_max_sinr(const ChannelSet& ch, const SystemConfig& cfg,
                      const Beamformers& init, const MaxSinrOptions& opts) {
  const PowerAllocation powers = PowerAllocation::equal(cfg);
  const PowerAllocation reverse_powers = powers;  // same uniform convention
  const ChannelSet rch = reciprocal(ch);

  Solution sol;
  sol.algorithm = "max-sinr";
  sol.powers = powers;
  sol.fp_tol = opts.fp_tol;

  std::vector<MatC> v = init.V;
  for (MatC& block : v) normalize_columns(block);
  std::vector<MatC> u_prev = init.U;
  for (MatC& block : u_prev) normalize_columns(block);

  double displacement = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    std::vector<MatC> u = vu_step(ch, v, powers, opts.orthogonalize);
    std::vector<MatC> v_next = uv_step(rch, u, reverse_powers,
                                       opts.orthogonalize);
    displacement = beamformer_displacement(Beamformers{v_next, u},
                                           Beamformers{v, u_prev});
    v = std::move(v_next);
    u_prev = std::move(u);
    sol.iterations = it + 1;
    if (opts.record_trace) {
      const Beamformers snapshot{v, u_prev};
      sol.trace.push_back(
          {it + 1, displacement,
           sum_rate_streams(ch, snapshot.V, powers).total,
           total_leakage(ch, snapshot)});
    }
    if (displacement < opts.fp_tol) {
      sol.converged = true;
      break;
    }
  }

  sol.final_displacement = displacement;
  sol.beams.V = std::move(v);
  sol.beams.U = std::move(u_prev);
  sol.rate = sum_rate_streams(ch, sol.beams.V, powers);
  sol.alignment = alignment_residual(ch, sol.beams);
  return sol;
}

namespace {

double distance_to(const Beamformers& a, const Beamformers& b) {
  return beamformer_displacement(a, b);
}

}  // namespace

DecayReport perturb_and_measure(const ChannelSet& ch, const SystemConfig& cfg,
                                const Solution& fixed_point, double epsilon,
                                int trials, int iterations,
                                std::uint64_t seed) {
  const PowerAllocation powers = PowerAllocation::equal(cfg);
  const ChannelSet rch = reciprocal(ch);

  DecayReport report;
  for (int trial = 0; trial < trials; ++trial) {
    ComplexGaussian rng(split_seed(seed, trial));
    Beamformers b = fixed_point.beams;
    for (MatC& block : b.V)
      for (int j = 0; j < block.cols(); ++j) {
        VecC dir = random_complex_gaussian(rng, block.rows(), 1).col(0);
        dir /= dir.norm();
        block.col(j) += epsilon * dir;
        block.col(j) /= block.col(j).norm();
      }
    for (MatC& block : b.U)
      for (int j = 0; j < block.cols(); ++j) {
        VecC dir = random_complex_gaussian(rng, block.rows(), 1).col(0);
        dir /= dir.norm();
        block.col(j) += epsilon * dir;
        block.col(j) /= block.col(j).norm();
      }

    std::vector<double> distances;
    distances.push_back(distance_to(b, fixed_point.beams));
    for (int it = 0; it < iterations; ++it) {
      b.U = vu_step(ch, b.V, powers, true);
      b.V = uv_step(rch, b.U, powers, true);
      distances.push_back(distance_to(b, fixed_point.beams));
    }
    for (std::size_t i = 0; i + 1 < distances.size(); ++i)
      if (distances[i] > 1e-14)
        report.contraction_ratios.push_back(distances[i + 1] / distances[i]);
    report.distance_to_fixed_point.push_back(std::move(distances));
  }

  const auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  report.median_contraction = median(report.contraction_ratios);
  std::vector<double> first_steps;
  for (const auto& trace : report.distance_to_fixed_point)
    if (trace.size() > 1) first_steps.push_back(trace[1]);
  report.median_first_step_distance = median(first_steps);
  return report;
}

}  // namespace beamalign
