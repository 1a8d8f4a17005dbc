// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "beamalign/maxsinr.hpp"

namespace beamalign {

struct GradientOptions {
  int max_iter = 500;
  double step_init = 1.0;
  double backtrack_factor = 0.5;  // in (0, 1)
  double armijo_c = 1e-4;         // in (0, 1)
  double grad_tol = 1e-6;
  bool record_trace = false;
};

/// Conjugate gradient of the user-by-user sum rate (in bits) with respect to
/// each transmit block, under equal power P_t/(Kd). The directional
/// derivative along a perturbation D is 2 Re tr(G^H D). Linear solves, no
/// explicit inverses.
std::vector<MatC> sum_rate_gradient(const ChannelSet& ch,
                                    const std::vector<MatC>& V,
                                    double total_power);

/// Projection of a gradient onto the tangent space of the unit-norm-column
/// constraint set at V (per column: remove the radial real component).
std::vector<MatC> project_to_tangent(const std::vector<MatC>& V,
                                     const std::vector<MatC>& grad);

/// Projected gradient ascent on the user-by-user sum rate: step along the
/// gradient, renormalize columns, Armijo backtracking on the retracted
/// objective. The sum rate never decreases across accepted steps. Stops
/// when the projected-gradient norm falls below grad_tol or at max_iter;
/// non-convergence is encoded in the Solution.
Solution run_gradient_ascent(const ChannelSet& ch, const SystemConfig& cfg,
                             const Beamformers& init,
                             const GradientOptions& opts);

}  // namespace beamalign
