// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "beamalign/channel.hpp"

namespace beamalign {

/// Scalar diagnostics of how well a beamformer set aligns interference.
/// Leakage terms are computed at unit per-stream power, so they are
/// comparable across SNR points.
struct AlignmentDiagnostics {
  VecR per_user_leakage;       // tr(U_k^H Z_k U_k), unit powers
  double cross_terms = 0.0;    // max_{k, l != k} ||U_k^H H_kl V_l||_F
  VecR rank_margins;           // sigma_d(U_k^H H_kk V_k)
  Eigen::VectorXi interference_rank;  // numerical rank of Z_k
};

/// Per-stream / per-user / total rates in bits. `per_stream` is empty for
/// user-based reports, where streams are not resolved individually.
struct RateReport {
  MatR per_stream;
  VecR per_user;
  double total = 0.0;
};

/// Z_k = sum_{l != k} H_kl V_l diag(P_l) V_l^H H_kl^H (Hermitian PSD).
MatC interference_cov_user(const ChannelSet& ch, const std::vector<MatC>& V,
                           const PowerAllocation& powers, int k);

/// R_k^(m): covariance of everything receiver k sees on stream m except the
/// stream itself -- all interference, inter-stream terms, and unit noise.
/// Hermitian positive definite.
MatC interference_plus_noise_cov_stream(const ChannelSet& ch,
                                        const std::vector<MatC>& V,
                                        const PowerAllocation& powers, int k,
                                        int m);

/// log2(1 + P_k^(m) v^H H^H (R_k^(m))^-1 H v): the rate of stream (k, m)
/// under its SINR-optimal receive filter. Solved, never inverted.
double stream_rate(const ChannelSet& ch, const std::vector<MatC>& V,
                   const PowerAllocation& powers, int k, int m);

/// Rate of stream (k, m) under an arbitrary fixed receive filter u:
/// log2(1 + P |u^H H v|^2 / u^H R_k^(m) u). Equals stream_rate when u is the
/// whitened matched filter.
double fixed_filter_stream_rate(const ChannelSet& ch, const Beamformers& b,
                                const PowerAllocation& powers, int k, int m);

/// User-k rate of the equal-power user-by-user model:
/// log2 det(I + (P_t/Kd) (I+Z_k)^-1 H_kk V_k V_k^H H_kk^H).
double user_rate(const ChannelSet& ch, const std::vector<MatC>& V, int k,
                 double total_power);

/// Same quantity through the alternative route
/// log2 det(R_k) - log2 det(I + Z_k); kept separate so the two derivations
/// can be checked against each other.
double user_rate_logdet_form(const ChannelSet& ch, const std::vector<MatC>& V,
                             int k, double total_power);

/// Stream-resolved sum rate with SINR-optimal (implied) receive filters.
RateReport sum_rate_streams(const ChannelSet& ch, const std::vector<MatC>& V,
                            const PowerAllocation& powers);

/// Stream-resolved sum rate with the given fixed receive filters.
RateReport sum_rate_fixed_filters(const ChannelSet& ch, const Beamformers& b,
                                  const PowerAllocation& powers);

/// User-by-user sum rate under equal power P_t/(Kd).
RateReport sum_rate_users(const ChannelSet& ch, const std::vector<MatC>& V,
                          double total_power);

/// Residuals of the alignment conditions for a beamformer set.
AlignmentDiagnostics alignment_residual(const ChannelSet& ch,
                                        const Beamformers& b);

/// Total leakage sum_k tr(U_k^H Z_k U_k) at unit per-stream power.
double total_leakage(const ChannelSet& ch, const Beamformers& b);

/// Scale-free alignment test: cross terms below 1e-6 * sqrt(P_t).
bool alignment_achieved(const AlignmentDiagnostics& diag, double total_power);

/// Chordal distance sqrt(d - ||A^H B||_F^2) between the column spaces of two
/// orthonormal M x d blocks; invariant to right-multiplication by unitaries.
/// Throws NonOrthonormalError if either input fails A^H A = I within 1e-6.
double chordal_distance(const MatC& a, const MatC& b);

/// Chordal distance after orthonormalizing both blocks; accepts any
/// full-column-rank inputs.
double subspace_distance(const MatC& a, const MatC& b);

}  // namespace beamalign
