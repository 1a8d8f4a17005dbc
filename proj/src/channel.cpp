// SPDX-License-Identifier: Apache-2.0
#include "beamalign/channel.hpp"

#include <cmath>
#include <iostream>

#include "beamalign/errors.hpp"

namespace beamalign {

SystemConfig SystemConfig::create(int users, int antennas, int streams,
                                  double total_power) {
  if (users < 1) throw InfeasibleConfigError("user count K must be positive");
  if (antennas < 1)
    throw InfeasibleConfigError("antenna count M must be positive");
  if (streams < 1)
    throw InfeasibleConfigError("stream count d must be positive");
  if (streams > antennas)
    throw InfeasibleConfigError("stream count d must satisfy d <= M");
  if (!(total_power >= 0.0) || !std::isfinite(total_power))
    throw InfeasibleConfigError("total power must be finite and nonnegative");
  if (antennas != 2 * streams)
    std::cerr << "warning: M = " << antennas << ", d = " << streams
              << " is off the M = 2d operating point\n";
  return SystemConfig{users, antennas, streams, total_power};
}

double SystemConfig::snr_db() const {
  return 10.0 * std::log10(per_stream_power());
}

double SystemConfig::total_power_for_snr_db(int users, int streams,
                                            double snr_db) {
  return static_cast<double>(users) * streams * std::pow(10.0, snr_db / 10.0);
}

ChannelSet::ChannelSet(int users, int antennas)
    : users_(users), antennas_(antennas) {
  entries_.assign(static_cast<std::size_t>(users) * users,
                  MatC::Zero(antennas, antennas));
}

namespace {

bool full_rank(const MatC& h) {
  Eigen::JacobiSVD<MatC> svd(h);
  const VecR& s = svd.singularValues();
  return numerical_rank(s, static_cast<int>(h.rows())) == h.rows();
}

}  // namespace

ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t seed) {
  ComplexGaussian rng(seed);
  ChannelSet ch(cfg.num_users, cfg.num_antennas);
  ch.seed = seed;
  for (;;) {
    bool ok = true;
    for (int k = 0; k < cfg.num_users; ++k)
      for (int l = 0; l < cfg.num_users; ++l) {
        ch.at(k, l) = random_complex_gaussian(rng, cfg.num_antennas,
                                              cfg.num_antennas);
        ok = ok && full_rank(ch.at(k, l));
      }
    if (ok) return ch;
  }
}

ChannelSet reciprocal(const ChannelSet& ch) {
  ChannelSet out(ch.users(), ch.antennas());
  out.seed = ch.seed;
  for (int k = 0; k < ch.users(); ++k)
    for (int l = 0; l < ch.users(); ++l) out.at(l, k) = ch.at(k, l).adjoint();
  return out;
}

Beamformers random_beamformers(const SystemConfig& cfg, std::uint64_t seed,
                               bool orthonormal) {
  ComplexGaussian rng(seed);
  Beamformers b;
  b.V.reserve(cfg.num_users);
  b.U.reserve(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    MatC v = random_complex_gaussian(rng, cfg.num_antennas, cfg.num_streams);
    MatC u = random_complex_gaussian(rng, cfg.num_antennas, cfg.num_streams);
    if (orthonormal) {
      v = qr_orthonormal(v);
      u = qr_orthonormal(u);
    } else {
      normalize_columns(v);
      normalize_columns(u);
    }
    b.V.push_back(std::move(v));
    b.U.push_back(std::move(u));
  }
  return b;
}

bool columns_unit_norm(const Beamformers& b, double tol) {
  const auto block_ok = [tol](const MatC& a) {
    for (int j = 0; j < a.cols(); ++j)
      if (std::abs(a.col(j).norm() - 1.0) > tol) return false;
    return true;
  };
  for (const MatC& v : b.V)
    if (!block_ok(v)) return false;
  for (const MatC& u : b.U)
    if (!block_ok(u)) return false;
  return true;
}

bool blocks_orthonormal(const Beamformers& b, double tol) {
  const auto block_ok = [tol](const MatC& a) {
    const MatC gram = a.adjoint() * a;
    return (gram - MatC::Identity(a.cols(), a.cols())).cwiseAbs().maxCoeff() <=
           tol;
  };
  for (const MatC& v : b.V)
    if (!block_ok(v)) return false;
  for (const MatC& u : b.U)
    if (!block_ok(u)) return false;
  return true;
}

PowerAllocation PowerAllocation::equal(const SystemConfig& cfg) {
  PowerAllocation p;
  p.stream_power = MatR::Constant(cfg.num_users, cfg.num_streams,
                                  cfg.per_stream_power());
  return p;
}

PowerAllocation PowerAllocation::zero(int users, int streams) {
  PowerAllocation p;
  p.stream_power = MatR::Zero(users, streams);
  return p;
}

}  // namespace beamalign
