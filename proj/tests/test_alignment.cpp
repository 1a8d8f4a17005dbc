// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "beamalign/alignment.hpp"
#include "beamalign/errors.hpp"

using namespace beamalign;

namespace {

IiaResult aligned_solution(const ChannelSet& ch, const SystemConfig& cfg,
                           std::uint64_t init_seed_value = 3) {
  IiaOptions opts;
  opts.max_iter = 20000;
  opts.leak_tol = 1e-22;
  IiaResult r = iia(ch, cfg, random_beamformers(cfg, init_seed_value, true),
                    opts);
  // run to the numerical floor; treat as aligned regardless of the flag
  return r;
}

}  // namespace

TEST_CASE("iia basics") {
  SUBCASE("infeasible dimensions are rejected") {
    ChannelSet ch(3, 2);
    SystemConfig bad{3, 2, 3, 3.0};
    CHECK_THROWS_AS(iia(ch, bad, Beamformers{}, {}), InfeasibleConfigError);
  }

  SUBCASE("single user aligns in one iteration") {
    const SystemConfig cfg = SystemConfig::create(1, 2, 1, 1.0);
    const ChannelSet ch = generate_channels(cfg, 1);
    const IiaResult r = iia(ch, cfg, random_beamformers(cfg, 2, true), {});
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.leakage == 0.0);
    CHECK(blocks_orthonormal(r.beams));
  }

  SUBCASE("(2,1): aligns well inside 5000 iterations") {
    const SystemConfig cfg = SystemConfig::create(3, 2, 1, 3.0);
    const ChannelSet ch = generate_channels(cfg, 7);
    IiaOptions opts;
    opts.max_iter = 5000;
    opts.leak_tol = 1e-14;
    const IiaResult r = iia(ch, cfg, random_beamformers(cfg, 3, true), opts);
    CHECK(r.converged);
    CHECK(r.iterations <= 5000);
    const AlignmentDiagnostics diag = alignment_residual(ch, r.beams);
    CHECK(diag.cross_terms < 1e-6);
    CHECK(diag.rank_margins.minCoeff() > 0.0);
    CHECK(blocks_orthonormal(r.beams));
    for (int k = 0; k < 3; ++k) CHECK(diag.interference_rank(k) == 1);
  }

  SUBCASE("leakage trace is monotone nonincreasing") {
    const SystemConfig cfg = SystemConfig::create(3, 4, 2, 6.0);
    const ChannelSet ch = generate_channels(cfg, 9);
    IiaOptions opts;
    opts.max_iter = 300;
    opts.leak_tol = 0.0;  // run all iterations
    opts.record_trace = true;
    const IiaResult r = iia(ch, cfg, random_beamformers(cfg, 4, true), opts);
    REQUIRE(r.leakage_trace.size() >= 2);
    for (std::size_t i = 1; i < r.leakage_trace.size(); ++i)
      CHECK(r.leakage_trace[i] <= r.leakage_trace[i - 1] + 1e-12);
  }

  SUBCASE("non-convergence is reported, not thrown") {
    const SystemConfig cfg = SystemConfig::create(3, 4, 2, 6.0);
    const ChannelSet ch = generate_channels(cfg, 10);
    IiaOptions opts;
    opts.max_iter = 3;
    opts.leak_tol = 1e-14;
    const IiaResult r = iia(ch, cfg, random_beamformers(cfg, 5, true), opts);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK(r.leakage > 0.0);
  }
}

TEST_CASE("equivalent channel") {
  SUBCASE("degenerate M = d reduces to the direct channel") {
    const SystemConfig cfg = SystemConfig::create(2, 2, 2, 2.0);
    const ChannelSet ch = generate_channels(cfg, 11);
    Beamformers b;
    b.V.assign(2, MatC::Identity(2, 2));
    b.U.assign(2, MatC::Identity(2, 2));
    CHECK((equivalent_channel(ch, b, 0) - ch.at(0, 0)).norm() < 1e-15);
  }

  SUBCASE("right-multiplication acts on the equivalent channel") {
    const SystemConfig cfg = SystemConfig::create(3, 4, 2, 6.0);
    const ChannelSet ch = generate_channels(cfg, 12);
    Beamformers b = random_beamformers(cfg, 13, true);
    const MatC base = equivalent_channel(ch, b, 1);
    ComplexGaussian rng(14);
    const MatC q = random_unitary(rng, 2);
    Beamformers rotated = b;
    rotated.V[1] = b.V[1] * q;
    CHECK((equivalent_channel(ch, rotated, 1) - base * q).norm() < 1e-12);
  }

  SUBCASE("triple product oracle") {
    const SystemConfig cfg = SystemConfig::create(3, 4, 2, 6.0);
    const ChannelSet ch = generate_channels(cfg, 15);
    const Beamformers b = random_beamformers(cfg, 16, true);
    for (int k = 0; k < 3; ++k) {
      MatC want = MatC::Zero(2, 2);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
              want(i, j) += std::conj(b.U[k](r, i)) * ch.at(k, k)(r, c) *
                            b.V[k](c, j);
      CHECK((equivalent_channel(ch, b, k) - want).norm() < 1e-12);
    }
  }
}

TEST_CASE("outer coders") {
  SUBCASE("identity channel") {
    const OuterCoders oc = outer_coders(MatC::Identity(2, 2));
    CHECK((oc.transmit - MatC::Identity(2, 2)).norm() < 1e-12);
    CHECK((oc.receive - MatC::Identity(2, 2)).norm() < 1e-12);
    CHECK(oc.singular_values(0) == doctest::Approx(1.0));
    CHECK(oc.singular_values(1) == doctest::Approx(1.0));
  }

  SUBCASE("diagonal channel keeps order") {
    MatC h = MatC::Zero(2, 2);
    h(0, 0) = 2.0;
    h(1, 1) = 1.0;
    const OuterCoders oc = outer_coders(h);
    CHECK(oc.singular_values(0) == doctest::Approx(2.0));
    CHECK(oc.singular_values(1) == doctest::Approx(1.0));
    CHECK((oc.transmit - MatC::Identity(2, 2)).norm() < 1e-12);
    CHECK((oc.receive - MatC::Identity(2, 2)).norm() < 1e-12);
  }

  SUBCASE("zero channel returns identity factors") {
    const OuterCoders oc = outer_coders(MatC::Zero(2, 2));
    CHECK((oc.transmit - MatC::Identity(2, 2)).norm() == 0.0);
    CHECK(oc.singular_values.maxCoeff() == 0.0);
  }

  SUBCASE("random channels: diagonalization, reconstruction, determinism") {
    ComplexGaussian rng(17);
    for (int rep = 0; rep < 10; ++rep) {
      const MatC h = random_complex_gaussian(rng, 2, 2);
      const OuterCoders oc = outer_coders(h);
      // descending singular values
      CHECK(oc.singular_values(0) >= oc.singular_values(1));
      // receive^H * H * transmit is the nonnegative diagonal
      const MatC d = oc.receive.adjoint() * h * oc.transmit;
      CHECK(std::abs(d(0, 1)) < 1e-12);
      CHECK(std::abs(d(1, 0)) < 1e-12);
      CHECK(d(0, 0).real() == doctest::Approx(oc.singular_values(0)));
      CHECK(std::abs(d(0, 0).imag()) < 1e-12);
      // reconstruction
      const MatC rebuilt = oc.receive *
                           oc.singular_values.asDiagonal().toDenseMatrix().cast<cxd>() *
                           oc.transmit.adjoint();
      CHECK((rebuilt - h).norm() < 1e-10 * h.norm());
      // phase convention: largest entry of each receive column real positive
      for (int j = 0; j < 2; ++j) {
        Eigen::Index imax = 0;
        oc.receive.col(j).cwiseAbs().maxCoeff(&imax);
        CHECK(oc.receive(imax, j).real() > 0.0);
        CHECK(std::abs(oc.receive(imax, j).imag()) < 1e-12);
      }
    }
  }
}

TEST_CASE("water-filling") {
  SUBCASE("one channel takes everything") {
    VecR gains(1);
    gains << 0.3;
    const WaterfillResult wf = waterfill(gains, 5.0);
    CHECK(wf.powers(0) == doctest::Approx(5.0).epsilon(1e-12));
  }

  SUBCASE("symmetric gains split evenly") {
    VecR gains(2);
    gains << 1.0, 1.0;
    const WaterfillResult wf = waterfill(gains, 2.0);
    CHECK(wf.powers(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(wf.powers(1) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("grid-search oracle on an asymmetric pair") {
    VecR gains(2);
    gains << 1.0, 0.1;
    const WaterfillResult wf = waterfill(gains, 1.0);
    // dense scan over the simplex
    double best = -1.0, best_p0 = 0.0;
    for (int i = 0; i <= 200000; ++i) {
      const double p0 = i / 200000.0;
      const double value =
          std::log2(1.0 + gains(0) * p0) + std::log2(1.0 + gains(1) * (1.0 - p0));
      if (value > best) {
        best = value;
        best_p0 = p0;
      }
    }
    CHECK(wf.powers(0) == doctest::Approx(best_p0).epsilon(1e-4));
    CHECK(wf.powers.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const double got =
        std::log2(1.0 + gains(0) * wf.powers(0)) +
        std::log2(1.0 + gains(1) * wf.powers(1));
    CHECK(got >= best - 1e-8);
  }

  SUBCASE("huge budgets equalize") {
    VecR gains(3);
    gains << 2.0, 0.5, 0.05;
    const WaterfillResult wf = waterfill(gains, 1e8);
    CHECK(wf.powers.maxCoeff() / wf.powers.minCoeff() < 1.01);
  }

  SUBCASE("zero gains are rejected; zero-gain entries get nothing") {
    VecR zeros = VecR::Zero(3);
    CHECK_THROWS_AS(waterfill(zeros, 1.0), AllZeroGainsError);
    VecR gains(3);
    gains << 1.0, 0.0, 2.0;
    const WaterfillResult wf = waterfill(gains, 3.0);
    CHECK(wf.powers(1) == 0.0);
    CHECK(wf.powers.sum() == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("KKT: active streams share the water level") {
    VecR gains(4);
    gains << 3.0, 1.0, 0.2, 0.01;
    const WaterfillResult wf = waterfill(gains, 2.0);
    for (int i = 0; i < 4; ++i) {
      if (wf.powers(i) > 0.0)
        CHECK(wf.powers(i) + 1.0 / gains(i) ==
              doctest::Approx(wf.water_level).epsilon(1e-9));
      else
        CHECK(1.0 / gains(i) >= wf.water_level - 1e-12);
    }
  }
}

TEST_CASE("two-layer design on an aligned inner solution") {
  const SystemConfig cfg = SystemConfig::create(
      3, 4, 2, SystemConfig::total_power_for_snr_db(3, 2, 60.0));
  const ChannelSet ch = generate_channels(cfg, 7);
  const IiaResult inner = aligned_solution(ch, cfg);
  REQUIRE(alignment_residual(ch, inner.beams).cross_terms < 1e-7);
  const TwoLayerSolution sol = two_layer_design(ch, inner.beams, cfg.total_power);

  SUBCASE("composed blocks span the inner subspaces") {
    // the chordal formula d - ||A^H B||_F^2 bottoms out near sqrt(eps)
    for (int k = 0; k < 3; ++k) {
      CHECK(chordal_distance(sol.composed.V[k], inner.beams.V[k]) < 1e-7);
      CHECK(chordal_distance(sol.composed.U[k], inner.beams.U[k]) < 1e-7);
      CHECK((sol.composed.V[k] - inner.beams.V[k] * sol.outer_tx[k]).norm() <
            1e-10);
    }
  }

  SUBCASE("outer coders are unitary and singular values sorted") {
    for (int k = 0; k < 3; ++k) {
      CHECK((sol.outer_tx[k].adjoint() * sol.outer_tx[k] -
             MatC::Identity(2, 2))
                .norm() < 1e-8);
      CHECK(sol.singular_values(k, 0) >= sol.singular_values(k, 1));
    }
    CHECK(sol.powers.total() ==
          doctest::Approx(cfg.total_power).epsilon(1e-9));
  }

  SUBCASE("beats the identity outer coder at equal power") {
    const PowerAllocation equal = PowerAllocation::equal(cfg);
    const double base = sum_rate_fixed_filters(ch, inner.beams, equal).total;
    CHECK(sol.rate_bits >= base - 1e-8);
  }

  SUBCASE("per-stream SINRs after composition are interference-free") {
    const RateReport streams =
        sum_rate_fixed_filters(ch, sol.composed, sol.powers);
    const double expect = sol.rate_bits;
    CHECK(streams.total == doctest::Approx(expect).epsilon(1e-6));
  }

  SUBCASE("rate is invariant to the inner basis choice") {
    ComplexGaussian rng(19);
    Beamformers rotated = inner.beams;
    for (int k = 0; k < 3; ++k) {
      rotated.V[k] = rotated.V[k] * random_unitary(rng, 2);
      rotated.U[k] = rotated.U[k] * random_unitary(rng, 2);
    }
    const TwoLayerSolution other = two_layer_design(ch, rotated, cfg.total_power);
    CHECK(other.rate_bits == doctest::Approx(sol.rate_bits).epsilon(1e-8));
  }

  SUBCASE("condition-1 residual is preserved under invertible factors") {
    ComplexGaussian rng(23);
    Beamformers scaled = inner.beams;
    for (int k = 0; k < 3; ++k) {
      const MatC f = random_complex_gaussian(rng, 2, 2);
      REQUIRE(std::abs(f.determinant()) > 1e-3);
      scaled.V[k] = scaled.V[k] * f;
    }
    CHECK(alignment_residual(ch, scaled).cross_terms < 1e-5);
  }
}

TEST_CASE("metric ties at an aligned point") {
  SUBCASE("the scale-free alignment test separates aligned from random") {
    const SystemConfig cfg = SystemConfig::create(
        3, 2, 1, SystemConfig::total_power_for_snr_db(3, 1, 40.0));
    const ChannelSet ch = generate_channels(cfg, 7);
    const IiaResult inner = aligned_solution(ch, cfg, 5);
    CHECK(alignment_achieved(alignment_residual(ch, inner.beams),
                             cfg.total_power));
    const Beamformers random = random_beamformers(cfg, 9, true);
    CHECK_FALSE(alignment_achieved(alignment_residual(ch, random),
                                   cfg.total_power));
  }

  SUBCASE("(2,1): stream-based and user-based totals coincide at 60 dB") {
    const SystemConfig cfg = SystemConfig::create(
        3, 2, 1, SystemConfig::total_power_for_snr_db(3, 1, 60.0));
    const ChannelSet ch = generate_channels(cfg, 7);
    const IiaResult inner = aligned_solution(ch, cfg, 5);
    const double streams =
        sum_rate_streams(ch, inner.beams.V, PowerAllocation::equal(cfg)).total;
    const double users = sum_rate_users(ch, inner.beams.V, cfg.total_power).total;
    CHECK(streams == doctest::Approx(users).epsilon(1e-6));
  }

  SUBCASE("user rate approaches the projected-channel log-det at 80 dB") {
    const SystemConfig cfg = SystemConfig::create(
        3, 4, 2, SystemConfig::total_power_for_snr_db(3, 2, 80.0));
    const ChannelSet ch = generate_channels(cfg, 7);
    const IiaResult inner = aligned_solution(ch, cfg);
    const double rho = cfg.per_stream_power();
    for (int k = 0; k < 3; ++k) {
      const MatC hbar = equivalent_channel(ch, inner.beams, k);
      MatC inner_mat = MatC::Identity(2, 2) + rho * hbar * hbar.adjoint();
      const double projected =
          logdet2_hermitian_pd((inner_mat + inner_mat.adjoint()) / 2.0);
      const double full = user_rate(ch, inner.beams.V, k, cfg.total_power);
      CHECK(std::abs(full - projected) < 2e-6);
    }
  }
}

TEST_CASE("zero-forcing outer baseline") {
  SUBCASE("identity equivalent channel matches the optimal design") {
    // A single user with M = d makes the inner layer trivial.
    ChannelSet ch(1, 2);
    ch.at(0, 0) = MatC::Identity(2, 2);
    ch.seed = 0;
    Beamformers inner;
    inner.V.assign(1, MatC::Identity(2, 2));
    inner.U.assign(1, MatC::Identity(2, 2));
    const TwoLayerSolution zf = zero_forcing_outer(ch, inner, 8.0);
    const TwoLayerSolution opt = two_layer_design(ch, inner, 8.0);
    CHECK(zf.rate_bits == doctest::Approx(opt.rate_bits).epsilon(1e-9));
  }

  SUBCASE("d = 1: scalar outer channel makes ZF optimal") {
    const SystemConfig cfg = SystemConfig::create(
        3, 2, 1, SystemConfig::total_power_for_snr_db(3, 1, 40.0));
    const ChannelSet ch = generate_channels(cfg, 7);
    const IiaResult inner = aligned_solution(ch, cfg, 5);
    const TwoLayerSolution zf = zero_forcing_outer(ch, inner.beams, cfg.total_power);
    // compare against the optimal outer coders at the same (equal) power
    const double opt_equal = parallel_channel_rate(
        zf.singular_values, PowerAllocation::equal(cfg));
    CHECK(zf.rate_bits == doctest::Approx(opt_equal).epsilon(1e-6));
  }

  SUBCASE("(4,2) at 60 dB: strictly below the optimal outer design") {
    const SystemConfig cfg = SystemConfig::create(
        3, 4, 2, SystemConfig::total_power_for_snr_db(3, 2, 60.0));
    const ChannelSet ch = generate_channels(cfg, 7);
    const IiaResult inner = aligned_solution(ch, cfg);
    const TwoLayerSolution zf = zero_forcing_outer(ch, inner.beams, cfg.total_power);
    const double opt_equal = parallel_channel_rate(
        zf.singular_values, PowerAllocation::equal(cfg));
    CHECK(zf.rate_bits < opt_equal - 0.5);
    CHECK(zf.outer_kind == OuterKind::ZeroForcing);
    // ZF receive columns are unit norm but not unitary blocks in general
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 2; ++j)
        CHECK(zf.outer_rx[k].col(j).norm() == doctest::Approx(1.0));
  }

  SUBCASE("singular equivalent channel is rejected") {
    ChannelSet ch(1, 2);
    ch.at(0, 0) = MatC::Zero(2, 2);
    ch.at(0, 0)(0, 0) = 1.0;  // rank 1
    Beamformers inner;
    inner.V.assign(1, MatC::Identity(2, 2));
    inner.U.assign(1, MatC::Identity(2, 2));
    CHECK_THROWS_AS(zero_forcing_outer(ch, inner, 2.0),
                    SingularEquivalentChannelError);
  }
}
