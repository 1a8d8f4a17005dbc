// SPDX-License-Identifier: Apache-2.0
#include "beamalign/gradient.hpp"

#include <cmath>

namespace beamalign {

std::vector<MatC> sum_rate_gradient(const ChannelSet& ch,
                                    const std::vector<MatC>& V,
                                    double total_power) {
  const int users = ch.users();
  const int m_dim = ch.antennas();
  const int streams = static_cast<int>(V[0].cols());
  const double rho = total_power / (users * streams);
  constexpr double kLn2 = 0.6931471805599453;

  // Per receiver l: M_l = I + Z_l and R_l = M_l + rho (H_ll V_l)(.)^H.
  std::vector<Eigen::LDLT<MatC>> m_fact(users), r_fact(users);
  for (int l = 0; l < users; ++l) {
    MatC m = MatC::Identity(m_dim, m_dim);
    for (int j = 0; j < users; ++j) {
      if (j == l) continue;
      const MatC t = ch.at(l, j) * V[j];
      m.noalias() += rho * t * t.adjoint();
    }
    const MatC own = ch.at(l, l) * V[l];
    MatC r = m + rho * own * own.adjoint();
    m = (m + m.adjoint()) / 2.0;
    r = (r + r.adjoint()) / 2.0;
    m_fact[l].compute(m);
    r_fact[l].compute(r);
  }

  std::vector<MatC> grad(users);
  for (int k = 0; k < users; ++k) {
    MatC g = MatC::Zero(m_dim, streams);
    for (int l = 0; l < users; ++l) {
      const MatC hv = ch.at(l, k) * V[k];
      g.noalias() += ch.at(l, k).adjoint() * r_fact[l].solve(hv);
      if (l != k)
        g.noalias() -= ch.at(l, k).adjoint() * m_fact[l].solve(hv);
    }
    grad[k] = (rho / kLn2) * g;  // bits, not nats
  }
  return grad;
}

std::vector<MatC> project_to_tangent(const std::vector<MatC>& V,
                                     const std::vector<MatC>& grad) {
  std::vector<MatC> out(grad.size());
  for (std::size_t k = 0; k < grad.size(); ++k) {
    out[k] = grad[k];
    for (int j = 0; j < out[k].cols(); ++j) {
      const double radial = V[k].col(j).dot(out[k].col(j)).real();
      out[k].col(j) -= radial * V[k].col(j);
    }
  }
  return out;
}

namespace {

double tangent_norm_sq(const std::vector<MatC>& g) {
  double acc = 0.0;
  for (const MatC& block : g) acc += block.squaredNorm();
  return 2.0 * acc;  // matches the 2 Re tr(G^H D) inner product
}

std::vector<MatC> retract(const std::vector<MatC>& V,
                          const std::vector<MatC>& grad, double step) {
  std::vector<MatC> out(V.size());
  for (std::size_t k = 0; k < V.size(); ++k) {
    out[k] = V[k] + step * grad[k];
    normalize_columns(out[k]);
  }
  return out;
}

}  // namespace

Solution run_gradient_ascent(const ChannelSet& ch, const SystemConfig& cfg,
                             const Beamformers& init,
                             const GradientOptions& opts) {
  Solution sol;
  sol.algorithm = "grad";
  sol.powers = PowerAllocation::equal(cfg);
  sol.fp_tol = opts.grad_tol;

  std::vector<MatC> v = init.V;
  for (MatC& block : v) normalize_columns(block);
  double objective = sum_rate_users(ch, v, cfg.total_power).total;

  double step = opts.step_init;
  double pgrad_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    const std::vector<MatC> grad = sum_rate_gradient(ch, v, cfg.total_power);
    const std::vector<MatC> tangent = project_to_tangent(v, grad);
    const double slope = tangent_norm_sq(tangent);
    pgrad_norm = std::sqrt(slope);
    sol.iterations = it;
    if (opts.record_trace)
      sol.trace.push_back({it, pgrad_norm, objective, 0.0});
    if (pgrad_norm < opts.grad_tol) {
      sol.converged = true;
      break;
    }

    // Armijo backtracking on the retracted objective.
    bool accepted = false;
    while (step >= 1e-18 * opts.step_init) {
      const std::vector<MatC> trial = retract(v, grad, step);
      const double trial_objective =
          sum_rate_users(ch, trial, cfg.total_power).total;
      if (trial_objective >= objective + opts.armijo_c * step * slope) {
        v = trial;
        objective = trial_objective;
        accepted = true;
        break;
      }
      step *= opts.backtrack_factor;
    }
    if (!accepted) break;  // no admissible step left at this point
    step = std::min(step * 2.0, 1e12 * opts.step_init);
    sol.iterations = it + 1;
  }

  sol.final_displacement = pgrad_norm;
  sol.converged = pgrad_norm < opts.grad_tol;
  sol.beams.V = v;
  sol.beams.U.clear();
  for (int k = 0; k < cfg.num_users; ++k) {
    // Receive side implied by the model; expose the per-stream optimal
    // filters for diagnostics.
    MatC u(cfg.num_antennas, cfg.num_streams);
    for (int m = 0; m < cfg.num_streams; ++m) {
      const MatC r =
          interference_plus_noise_cov_stream(ch, v, sol.powers, k, m);
      u.col(m) = wmf(r, ch.at(k, k), v[k].col(m));
    }
    sol.beams.U.push_back(std::move(u));
  }
  sol.rate = sum_rate_users(ch, v, cfg.total_power);
  sol.alignment = alignment_residual(ch, sol.beams);
  return sol;
}

}  // namespace beamalign
