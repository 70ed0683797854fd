#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "madprops/chain.hpp"
#include "madprops/diagnostics.hpp"
#include "madprops/kernels.hpp"

using namespace madprops;

namespace {

KernelSpec mtm_spec(Family family, BetaKind beta, ProposalKernel proposal, int p) {
  KernelSpec s;
  s.family = family;
  s.beta = beta;
  s.proposal = std::move(proposal);
  s.p = p;
  return s;
}

double se_from_series(const Vec& series) {
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(series.size());
  double var = 0.0;
  for (double x : series) var += (x - mean) * (x - mean);
  var /= static_cast<double>(series.size());
  return std::sqrt(var / ess(series).ess);
}

}  // namespace

TEST_CASE("mtm with zero potential accepts always") {
  auto prior = gaussian_reference_target({1.0, 0.5});
  auto spec = mtm_spec(Family::MTpCN, BetaKind::BubblePotential,
                       ProposalKernel::pcn(2, 0.4, {1.0, 0.5}), 6);
  for (int iter = 0; iter < 20; ++iter) {
    auto res = step_mtpcn(spec, prior, {0.5, -0.2}, StepKey{3, 0, static_cast<std::uint64_t>(iter)});
    CHECK(res.record.alpha_bar == doctest::Approx(1.0));
    CHECK(res.record.accepted);
  }
}

TEST_CASE("single-try mtm reduces to classical MH") {
  auto target = gaussian_target(1, 1.0);
  auto spec = mtm_spec(Family::MTM, BetaKind::BubbleBath,
                       ProposalKernel::gaussian_rw(1, 2.0), 1);
  for (int iter = 0; iter < 50; ++iter) {
    StepKey key{5, 0, static_cast<std::uint64_t>(iter)};
    auto res = step_mtm(spec, target, {1.2}, key);
    const Vec& q1 = *res.record.q_bar;
    const double expected = std::min(1.0, std::exp(-0.5 * q1[0] * q1[0] + 0.5 * 1.44));
    CHECK(res.record.alpha_bar == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("full and reduced acceptances agree under balance") {
  // MTpCN on a Gaussian posterior.
  auto posterior = gaussian_posterior_target({1.0, 0.5}, {1.0, -0.5}, 0.8);
  auto spec = mtm_spec(Family::MTpCN, BetaKind::BubblePotential,
                       ProposalKernel::pcn(2, 0.6, {1.0, 0.5}), 8);
  Vec q{0.2, 0.1};
  double worst = 0.0;
  for (int iter = 0; iter < 1000; ++iter) {
    auto res = step_mtpcn(spec, posterior, q, StepKey{7, 0, static_cast<std::uint64_t>(iter)});
    worst = std::max(worst, std::fabs(res.record.alpha_bar - res.record.alpha_bar_full));
    q = res.q_next;
  }
  CHECK(worst < 1e-12);

  // Slingshot-weighted MTM with a symmetric random walk.
  auto target = gaussian_target(2, 1.0);
  auto sspec = mtm_spec(Family::MTM, BetaKind::Slingshot,
                        ProposalKernel::gaussian_rw(2, 1.5), 8);
  q = {0.0, 0.0};
  worst = 0.0;
  for (int iter = 0; iter < 1000; ++iter) {
    auto res = step_mtm(sspec, target, q, StepKey{9, 0, static_cast<std::uint64_t>(iter)});
    worst = std::max(worst, std::fabs(res.record.alpha_bar - res.record.alpha_bar_full));
    q = res.q_next;
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("lmtpcn acceptance matches an independent transcription") {
  const Vec spectrum{1.0, 0.5};
  auto posterior = gaussian_posterior_target(spectrum, {1.5, -1.0}, 1.0);
  const double rho = 0.7;
  auto spec = mtm_spec(Family::LMTpCN, BetaKind::LocalPCN,
                       ProposalKernel::pcn(2, rho, spectrum), 5);
  Vec q{0.1, 0.0};
  for (int iter = 0; iter < 300; ++iter) {
    StepKey key{11, 0, static_cast<std::uint64_t>(iter)};
    auto res = step_lmtpcn(spec, posterior, q, key);

    // Re-derive alpha-bar from the displayed two-stage form, replaying the
    // same substreams.
    auto lw = [&](const Vec& x) {
      Vec scaled(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = x[i] / rho;
      return -(rho / (1.0 + rho)) * posterior.phi(scaled);
    };
    const Vec& q_bar = *res.record.q_bar;
    Vec cloud_terms;
    for (const auto& qj : res.record.proposals) cloud_terms.push_back(lw(qj));
    Vec denom_terms{lw(q)};
    const ProposalKernel& Q = spec.proposal;
    for (int l = 1; l <= spec.p - 1; ++l) {
      RngStream rng = key.stream(Purpose::Aux, static_cast<std::uint64_t>(l));
      denom_terms.push_back(lw(Q.draw(q_bar, rng)));
    }
    const double log_pref = (-posterior.phi(q_bar) + lw(q)) - (-posterior.phi(q) + lw(q_bar));
    const double expected =
        std::min(1.0, std::exp(log_pref + log_sum_exp(cloud_terms) - log_sum_exp(denom_terms)));
    CHECK(std::fabs(res.record.alpha_bar - expected) < 1e-12);
    q = res.q_next;
  }
}

TEST_CASE("lmtpcn parameter edge cases") {
  auto prior = gaussian_reference_target({1.0});
  auto spec = mtm_spec(Family::LMTpCN, BetaKind::LocalPCN, ProposalKernel::pcn(1, 0.0), 4);
  CHECK_THROWS_AS(step_lmtpcn(spec, prior, {0.3}, StepKey{1, 0, 0}), ParameterError);

  auto spec1 = mtm_spec(Family::LMTpCN, BetaKind::LocalPCN, ProposalKernel::pcn(1, 1.0), 4);
  auto res = step_lmtpcn(spec1, prior, {0.3}, StepKey{1, 0, 0});
  CHECK(res.q_next[0] == 0.3);
  CHECK_FALSE(res.record.accepted);

  // Zero potential: always accepts, preserves the reference.
  auto spec2 = mtm_spec(Family::LMTpCN, BetaKind::LocalPCN, ProposalKernel::pcn(1, 0.5), 4);
  auto res2 = step_lmtpcn(spec2, prior, {0.3}, StepKey{2, 0, 0});
  CHECK(res2.record.alpha_bar == doctest::Approx(1.0));
}

TEST_CASE("mtpcn single try reduces to pcn Metropolis") {
  auto posterior = gaussian_posterior_target({1.0}, {2.0}, 1.0);
  auto spec = mtm_spec(Family::MTpCN, BetaKind::BubblePotential,
                       ProposalKernel::pcn(1, 0.5, {1.0}), 1);
  for (int iter = 0; iter < 50; ++iter) {
    auto res =
        step_mtpcn(spec, posterior, {0.4}, StepKey{13, 0, static_cast<std::uint64_t>(iter)});
    const Vec& q1 = *res.record.q_bar;
    const double expected =
        std::min(1.0, std::exp(-posterior.phi(q1) + posterior.phi({0.4})));
    CHECK(res.record.alpha_bar == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("mtpcn with zero rho approaches independence sampling") {
  // A posterior far from the prior makes small-p chains sticky, so the
  // first-moment error decays visibly in p at fixed length.
  const Vec spectrum{1.0, 1.0};
  auto posterior = gaussian_posterior_target(spectrum, {3.0, -2.5}, 0.6);
  Vec mean, var;
  gaussian_posterior_moments(spectrum, {3.0, -2.5}, 0.6, mean, var);
  Observable m1{"q1", [](const Vec& q) { return q[0]; }};
  auto gap = [&](int p) {
    auto spec = mtm_spec(Family::MTpCN, BetaKind::BubblePotential,
                         ProposalKernel::pcn(2, 0.0, spectrum), p);
    auto trace = run_chain(spec, posterior, {0.0, 0.0}, 30000, 2000, {}, 17, 0);
    return std::fabs(estimate_standard(trace, m1) - mean[0]);
  };
  const double g8 = gap(8), g64 = gap(64), g512 = gap(512);
  CHECK(g64 < g8);
  CHECK(g512 < g64);
}

TEST_CASE("lmtpcn targets the conjugate posterior") {
  const Vec spectrum{1.0, 1.0};
  const Vec y{1.0, -1.0};
  auto posterior = gaussian_posterior_target(spectrum, y, 1.0);
  Vec mean, var;
  gaussian_posterior_moments(spectrum, y, 1.0, mean, var);
  auto spec = mtm_spec(Family::LMTpCN, BetaKind::LocalPCN,
                       ProposalKernel::pcn(2, 0.7, spectrum), 16);
  auto trace = run_chain(spec, posterior, {0.0, 0.0}, 30000, 3000, {}, 19, 0);
  for (int k = 0; k < 2; ++k) {
    Observable ob{"q", [k](const Vec& q) { return q[static_cast<std::size_t>(k)]; }};
    const double est = estimate_standard(trace, ob);
    const double se = se_from_series(observable_series(trace, ob));
    CHECK(std::fabs(est - mean[static_cast<std::size_t>(k)]) < 3.0 * se);
  }
}

TEST_CASE("mtm rejects p = 0") {
  auto target = gaussian_target(1, 1.0);
  auto spec = mtm_spec(Family::MTM, BetaKind::BubbleBath, ProposalKernel::gaussian_rw(1, 1.0), 0);
  CHECK_THROWS_AS(step_mtm(spec, target, {0.0}, StepKey{1, 0, 0}), ParameterError);
}
