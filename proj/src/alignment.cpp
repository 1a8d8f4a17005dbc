// SPDX-License-Identifier: Apache-2.0
#include "beamalign/alignment.hpp"

#include <cmath>
#include <iostream>

#include "beamalign/errors.hpp"

namespace beamalign {

namespace {

// Unit-power interference covariance at receiver k for the given transmit
// blocks (forward or reciprocal direction depending on `ch`).
MatC unit_power_interference(const ChannelSet& ch,
                             const std::vector<MatC>& tx_blocks, int k) {
  const int m_dim = ch.antennas();
  MatC z = MatC::Zero(m_dim, m_dim);
  for (int l = 0; l < ch.users(); ++l) {
    if (l == k) continue;
    const MatC t = ch.at(k, l) * tx_blocks[l];
    z.noalias() += t * t.adjoint();
  }
  return (z + z.adjoint()) / 2.0;
}

// One half-step: each user's block becomes the d least-interfered
// directions. Returns the post-update leakage, which equals the sum of the
// d smallest eigenvalues over users.
double leakage_half_step(const ChannelSet& ch,
                         const std::vector<MatC>& tx_blocks,
                         std::vector<MatC>& rx_blocks, int streams) {
  double leak = 0.0;
  for (int k = 0; k < ch.users(); ++k) {
    VecR eigenvalues;
    rx_blocks[k] = smallest_eigenvectors(unit_power_interference(ch, tx_blocks, k),
                                         streams, &eigenvalues);
    leak += eigenvalues.head(streams).sum();
  }
  return std::max(0.0, leak);  // eigenvalue noise can dip below zero
}

// Canonical orthonormal basis of the subspace spanned by `block`: column-
// pivoted QR of the projector, a deterministic function of the subspace
// alone. Runs of the same mode then agree on the basis, not just on the
// span, which pins down basis-dependent quantities such as the
// zero-forcing outer rate.
MatC canonical_basis(const MatC& block) {
  const MatC projector = block * block.adjoint();
  Eigen::ColPivHouseholderQR<MatC> qr(projector);
  MatC q = qr.householderQ() * MatC::Identity(block.rows(), block.cols());
  const MatC r = qr.matrixQR()
                     .topLeftCorner(block.cols(), block.cols())
                     .template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    const cxd diag = r(j, j);
    const double mag = std::abs(diag);
    if (mag > 0.0) q.col(j) *= diag / mag;
  }
  fix_column_phases(q);
  return q;
}

}  // namespace

IiaResult iia(const ChannelSet& ch, const SystemConfig& cfg,
              const Beamformers& init, const IiaOptions& opts) {
  if (cfg.num_streams > cfg.num_antennas)
    throw InfeasibleConfigError("alignment needs d <= M");
  const int users = cfg.num_users;
  const int streams = cfg.num_streams;
  const ChannelSet rch = reciprocal(ch);

  IiaResult result;
  std::vector<MatC> v(users), u(users);
  for (int k = 0; k < users; ++k) v[k] = qr_orthonormal(init.V[k]);
  u.assign(users, MatC::Zero(cfg.num_antennas, streams));

  double leak = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    const double forward = leakage_half_step(ch, v, u, streams);
    leak = leakage_half_step(rch, u, v, streams);
    if (opts.record_trace) {
      result.leakage_trace.push_back(forward);
      result.leakage_trace.push_back(leak);
    }
    result.iterations = it + 1;
    if (leak < opts.leak_tol) {
      result.converged = true;
      break;
    }
  }
  result.leakage = leak;
  for (int k = 0; k < users; ++k) {
    v[k] = canonical_basis(v[k]);
    u[k] = canonical_basis(u[k]);
  }
  result.beams.V = std::move(v);
  result.beams.U = std::move(u);
  return result;
}

MatC equivalent_channel(const ChannelSet& ch, const Beamformers& inner,
                        int k) {
  return inner.U[k].adjoint() * ch.at(k, k) * inner.V[k];
}

OuterCoders outer_coders(const MatC& equivalent) {
  const int dim = static_cast<int>(equivalent.rows());
  OuterCoders out;
  if (equivalent.norm() == 0.0) {
    out.transmit = MatC::Identity(dim, dim);
    out.receive = MatC::Identity(dim, dim);
    out.singular_values = VecR::Zero(dim);
    return out;
  }
  Eigen::JacobiSVD<MatC> svd(equivalent,
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.receive = svd.matrixU();
  out.transmit = svd.matrixV();
  out.singular_values = svd.singularValues();  // descending
  // Co-rotating both sides keeps receive^H * equivalent * transmit diagonal.
  for (int j = 0; j < dim; ++j) {
    Eigen::Index imax = 0;
    out.receive.col(j).cwiseAbs().maxCoeff(&imax);
    const cxd pivot = out.receive(imax, j);
    const double mag = std::abs(pivot);
    if (mag > 0.0) {
      const cxd phase = std::conj(pivot) / mag;
      out.receive.col(j) *= phase;
      out.transmit.col(j) *= phase;
    }
  }
  return out;
}

WaterfillResult waterfill(const VecR& gains, double total_power) {
  if (!(gains.array() >= 0.0).all())
    throw InfeasibleConfigError("water-filling gains must be nonnegative");
  if (!(total_power >= 0.0))
    throw InfeasibleConfigError("total power must be nonnegative");
  const int n = static_cast<int>(gains.size());
  double min_inv = std::numeric_limits<double>::infinity();
  double max_inv = 0.0;
  int positive = 0;
  for (int i = 0; i < n; ++i) {
    if (gains(i) <= 0.0) continue;
    ++positive;
    min_inv = std::min(min_inv, 1.0 / gains(i));
    max_inv = std::max(max_inv, 1.0 / gains(i));
  }
  if (positive == 0) throw AllZeroGainsError("all channel gains are zero");

  const auto allocated = [&](double mu) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (gains(i) > 0.0) sum += std::max(0.0, mu - 1.0 / gains(i));
    return sum;
  };

  double lo = min_inv;
  double hi = max_inv + total_power;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (allocated(mid) < total_power)
      lo = mid;
    else
      hi = mid;
    if (std::abs(allocated(mid) - total_power) <=
        1e-12 * std::max(total_power, 1.0))
      break;
  }
  double mu = 0.5 * (lo + hi);

  // The bisection pins the active set; recomputing mu in closed form over
  // that set makes the budget and the shared water level exact.
  double inv_sum = 0.0;
  int active = 0;
  for (int i = 0; i < n; ++i) {
    if (gains(i) > 0.0 && mu - 1.0 / gains(i) > 0.0) {
      inv_sum += 1.0 / gains(i);
      ++active;
    }
  }
  if (active > 0) {
    const double exact = (total_power + inv_sum) / active;
    bool consistent = true;
    for (int i = 0; i < n; ++i) {
      if (gains(i) <= 0.0) continue;
      const bool was_active = mu - 1.0 / gains(i) > 0.0;
      const bool is_active = exact - 1.0 / gains(i) > 0.0;
      if (was_active != is_active) consistent = false;
    }
    if (consistent) mu = exact;
  }

  WaterfillResult result;
  result.water_level = mu;
  result.powers = VecR::Zero(n);
  for (int i = 0; i < n; ++i)
    if (gains(i) > 0.0) result.powers(i) = std::max(0.0, mu - 1.0 / gains(i));
  return result;
}

double parallel_channel_rate(const MatR& singular_values,
                             const PowerAllocation& powers) {
  double rate = 0.0;
  for (int k = 0; k < singular_values.rows(); ++k)
    for (int m = 0; m < singular_values.cols(); ++m)
      rate += std::log2(1.0 + powers.stream_power(k, m) *
                                  singular_values(k, m) *
                                  singular_values(k, m));
  return rate;
}

TwoLayerSolution two_layer_design(const ChannelSet& ch,
                                  const Beamformers& inner,
                                  double total_power) {
  const int users = ch.users();
  const int streams = static_cast<int>(inner.V[0].cols());

  TwoLayerSolution sol;
  sol.inner = inner;
  const AlignmentDiagnostics diag = alignment_residual(ch, inner);
  sol.alignment_warning = !alignment_achieved(diag, total_power);
  if (sol.alignment_warning)
    std::cerr << "warning: inner beamformers are not interference-aligning"
                 " (cross terms "
              << diag.cross_terms << ")\n";

  sol.singular_values = MatR::Zero(users, streams);
  VecR gains(users * streams);
  for (int k = 0; k < users; ++k) {
    const OuterCoders coders = outer_coders(equivalent_channel(ch, inner, k));
    sol.outer_tx.push_back(coders.transmit);
    sol.outer_rx.push_back(coders.receive);
    for (int m = 0; m < streams; ++m) {
      sol.singular_values(k, m) = coders.singular_values(m);
      gains(k * streams + m) =
          coders.singular_values(m) * coders.singular_values(m);
    }
  }

  const WaterfillResult wf = waterfill(gains, total_power);
  sol.water_level = wf.water_level;
  sol.powers.stream_power = MatR::Zero(users, streams);
  for (int k = 0; k < users; ++k)
    for (int m = 0; m < streams; ++m)
      sol.powers.stream_power(k, m) = wf.powers(k * streams + m);

  sol.composed.V.reserve(users);
  sol.composed.U.reserve(users);
  for (int k = 0; k < users; ++k) {
    sol.composed.V.push_back(inner.V[k] * sol.outer_tx[k]);
    sol.composed.U.push_back(inner.U[k] * sol.outer_rx[k]);
  }
  sol.rate_bits = parallel_channel_rate(sol.singular_values, sol.powers);
  return sol;
}

TwoLayerSolution zero_forcing_outer(const ChannelSet& ch,
                                    const Beamformers& inner,
                                    double total_power) {
  const int users = ch.users();
  const int streams = static_cast<int>(inner.V[0].cols());

  TwoLayerSolution sol;
  sol.outer_kind = OuterKind::ZeroForcing;
  sol.inner = inner;
  const AlignmentDiagnostics diag = alignment_residual(ch, inner);
  sol.alignment_warning = !alignment_achieved(diag, total_power);

  sol.singular_values = MatR::Zero(users, streams);
  for (int k = 0; k < users; ++k) {
    const MatC equivalent = equivalent_channel(ch, inner, k);
    Eigen::JacobiSVD<MatC> svd(equivalent,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VecR& sv = svd.singularValues();
    sol.singular_values.row(k) = sv.transpose();
    if (sv(streams - 1) < 1e-10 * sv(0))
      throw SingularEquivalentChannelError(
          "equivalent channel numerically singular for user " +
          std::to_string(k));
    // Columns of (pinv(equivalent))^H are the zero-forcing combiners.
    const MatC pinv_h = svd.matrixU() *
                        sv.cwiseInverse().asDiagonal().toDenseMatrix().cast<cxd>() *
                        svd.matrixV().adjoint();
    MatC theta = pinv_h;
    normalize_columns(theta);
    sol.outer_tx.push_back(MatC::Identity(streams, streams));
    sol.outer_rx.push_back(theta);
  }

  sol.powers.stream_power =
      MatR::Constant(users, streams, total_power / (users * streams));
  sol.composed.V.reserve(users);
  sol.composed.U.reserve(users);
  for (int k = 0; k < users; ++k) {
    sol.composed.V.push_back(inner.V[k] * sol.outer_tx[k]);
    sol.composed.U.push_back(inner.U[k] * sol.outer_rx[k]);
  }
  sol.rate_bits =
      sum_rate_fixed_filters(ch, sol.composed, sol.powers).total;
  return sol;
}

}  // namespace beamalign
