// SPDX-License-Identifier: Apache-2.0
#include "beamalign/metrics.hpp"

#include <cassert>
#include <cmath>

#include "beamalign/errors.hpp"

namespace beamalign {

MatC interference_cov_user(const ChannelSet& ch, const std::vector<MatC>& V,
                           const PowerAllocation& powers, int k) {
  const int m_dim = ch.antennas();
  MatC z = MatC::Zero(m_dim, m_dim);
  for (int l = 0; l < ch.users(); ++l) {
    if (l == k) continue;
    const MatC t = ch.at(k, l) * V[l];
    for (int j = 0; j < static_cast<int>(t.cols()); ++j)
      z.noalias() += powers.stream_power(l, j) * t.col(j) * t.col(j).adjoint();
  }
  return (z + z.adjoint()) / 2.0;  // keep exactly Hermitian
}

MatC interference_plus_noise_cov_stream(const ChannelSet& ch,
                                        const std::vector<MatC>& V,
                                        const PowerAllocation& powers, int k,
                                        int m) {
  const int m_dim = ch.antennas();
  MatC r = MatC::Identity(m_dim, m_dim);
  for (int l = 0; l < ch.users(); ++l) {
    const MatC t = ch.at(k, l) * V[l];
    for (int j = 0; j < static_cast<int>(t.cols()); ++j) {
      if (l == k && j == m) continue;  // own stream excluded
      r.noalias() += powers.stream_power(l, j) * t.col(j) * t.col(j).adjoint();
    }
  }
  return (r + r.adjoint()) / 2.0;
}

double stream_rate(const ChannelSet& ch, const std::vector<MatC>& V,
                   const PowerAllocation& powers, int k, int m) {
  const MatC r = interference_plus_noise_cov_stream(ch, V, powers, k, m);
  const VecC hv = ch.at(k, k) * V[k].col(m);
  const VecC x = r.ldlt().solve(hv);
  const double sinr = powers.stream_power(k, m) * hv.dot(x).real();
  return std::log2(1.0 + std::max(0.0, sinr));
}

double fixed_filter_stream_rate(const ChannelSet& ch, const Beamformers& b,
                                const PowerAllocation& powers, int k, int m) {
  const MatC r = interference_plus_noise_cov_stream(ch, b.V, powers, k, m);
  const VecC u = b.U[k].col(m);
  const cxd gain = u.dot(ch.at(k, k) * b.V[k].col(m));
  const double denom = u.dot(r * u).real();
  const double sinr =
      powers.stream_power(k, m) * std::norm(gain) / std::max(denom, 1e-300);
  return std::log2(1.0 + std::max(0.0, sinr));
}

namespace {

// Z_k of the equal-power user-by-user model, rho = P_t / (K d).
MatC user_model_interference(const ChannelSet& ch, const std::vector<MatC>& V,
                             int k, double rho) {
  const int m_dim = ch.antennas();
  MatC z = MatC::Zero(m_dim, m_dim);
  for (int l = 0; l < ch.users(); ++l) {
    if (l == k) continue;
    const MatC t = ch.at(k, l) * V[l];
    z.noalias() += rho * t * t.adjoint();
  }
  return (z + z.adjoint()) / 2.0;
}

}  // namespace

double user_rate(const ChannelSet& ch, const std::vector<MatC>& V, int k,
                 double total_power) {
  const int streams = static_cast<int>(V[k].cols());
  const double rho = total_power / (ch.users() * streams);
  const int m_dim = ch.antennas();
  const MatC noise_plus_z =
      MatC::Identity(m_dim, m_dim) + user_model_interference(ch, V, k, rho);
  const MatC hv = ch.at(k, k) * V[k];
  const MatC x = noise_plus_z.ldlt().solve(hv);
  const MatC inner = MatC::Identity(streams, streams) + rho * hv.adjoint() * x;
  const double rate = logdet2_hermitian_pd((inner + inner.adjoint()) / 2.0);
#ifndef NDEBUG
  const double alt = user_rate_logdet_form(ch, V, k, total_power);
  assert(std::abs(rate - alt) <= 1e-9 * std::max(1.0, std::abs(rate)));
#endif
  return rate;
}

double user_rate_logdet_form(const ChannelSet& ch, const std::vector<MatC>& V,
                             int k, double total_power) {
  const int streams = static_cast<int>(V[k].cols());
  const double rho = total_power / (ch.users() * streams);
  const int m_dim = ch.antennas();
  const MatC noise_plus_z =
      MatC::Identity(m_dim, m_dim) + user_model_interference(ch, V, k, rho);
  const MatC hv = ch.at(k, k) * V[k];
  MatC r_full = noise_plus_z + rho * hv * hv.adjoint();
  r_full = (r_full + r_full.adjoint()) / 2.0;
  return logdet2_hermitian_pd(r_full) - logdet2_hermitian_pd(noise_plus_z);
}

RateReport sum_rate_streams(const ChannelSet& ch, const std::vector<MatC>& V,
                            const PowerAllocation& powers) {
  const int users = ch.users();
  const int streams = static_cast<int>(powers.stream_power.cols());
  RateReport report;
  report.per_stream = MatR::Zero(users, streams);
  report.per_user = VecR::Zero(users);
  for (int k = 0; k < users; ++k) {
    for (int m = 0; m < streams; ++m) {
      const double rate = stream_rate(ch, V, powers, k, m);
      report.per_stream(k, m) = rate;
      report.per_user(k) += rate;
    }
    report.total += report.per_user(k);
  }
  return report;
}

RateReport sum_rate_fixed_filters(const ChannelSet& ch, const Beamformers& b,
                                  const PowerAllocation& powers) {
  const int users = ch.users();
  const int streams = static_cast<int>(powers.stream_power.cols());
  RateReport report;
  report.per_stream = MatR::Zero(users, streams);
  report.per_user = VecR::Zero(users);
  for (int k = 0; k < users; ++k) {
    for (int m = 0; m < streams; ++m) {
      const double rate = fixed_filter_stream_rate(ch, b, powers, k, m);
      report.per_stream(k, m) = rate;
      report.per_user(k) += rate;
    }
    report.total += report.per_user(k);
  }
  return report;
}

RateReport sum_rate_users(const ChannelSet& ch, const std::vector<MatC>& V,
                          double total_power) {
  RateReport report;
  report.per_user = VecR::Zero(ch.users());
  for (int k = 0; k < ch.users(); ++k) {
    report.per_user(k) = user_rate(ch, V, k, total_power);
    report.total += report.per_user(k);
  }
  return report;
}

AlignmentDiagnostics alignment_residual(const ChannelSet& ch,
                                        const Beamformers& b) {
  const int users = ch.users();
  AlignmentDiagnostics diag;
  diag.per_user_leakage = VecR::Zero(users);
  diag.rank_margins = VecR::Zero(users);
  diag.interference_rank = Eigen::VectorXi::Zero(users);
  for (int k = 0; k < users; ++k) {
    const int m_dim = ch.antennas();
    MatC z = MatC::Zero(m_dim, m_dim);
    for (int l = 0; l < users; ++l) {
      if (l == k) continue;
      const MatC cross = b.U[k].adjoint() * ch.at(k, l) * b.V[l];
      diag.cross_terms = std::max(diag.cross_terms, cross.norm());
      const MatC t = ch.at(k, l) * b.V[l];
      z.noalias() += t * t.adjoint();
      diag.per_user_leakage(k) += cross.squaredNorm();
    }
    Eigen::JacobiSVD<MatC> z_svd((z + z.adjoint()) / 2.0);
    diag.interference_rank(k) = numerical_rank(z_svd.singularValues(), m_dim);
    Eigen::JacobiSVD<MatC> direct(b.U[k].adjoint() * ch.at(k, k) * b.V[k]);
    diag.rank_margins(k) =
        direct.singularValues()(direct.singularValues().size() - 1);
  }
  return diag;
}

double total_leakage(const ChannelSet& ch, const Beamformers& b) {
  double acc = 0.0;
  for (int k = 0; k < ch.users(); ++k)
    for (int l = 0; l < ch.users(); ++l) {
      if (l == k) continue;
      acc += (b.U[k].adjoint() * ch.at(k, l) * b.V[l]).squaredNorm();
    }
  return acc;
}

bool alignment_achieved(const AlignmentDiagnostics& diag, double total_power) {
  return diag.cross_terms < 1e-6 * std::sqrt(total_power);
}

double chordal_distance(const MatC& a, const MatC& b) {
  const auto check = [](const MatC& x) {
    const MatC gram = x.adjoint() * x;
    const double err =
        (gram - MatC::Identity(x.cols(), x.cols())).cwiseAbs().maxCoeff();
    if (err > 1e-6)
      throw NonOrthonormalError("chordal_distance: columns not orthonormal");
  };
  check(a);
  check(b);
  const double d = static_cast<double>(a.cols());
  const double overlap = (a.adjoint() * b).squaredNorm();
  return std::sqrt(std::max(0.0, d - overlap));
}

double subspace_distance(const MatC& a, const MatC& b) {
  return chordal_distance(qr_orthonormal(a), qr_orthonormal(b));
}

}  // namespace beamalign
