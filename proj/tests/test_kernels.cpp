#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "madprops/chain.hpp"
#include "madprops/diagnostics.hpp"
#include "madprops/kernels.hpp"

using namespace madprops;

namespace {

TargetModel flat_lebesgue_target(int d) {
  TargetModel t = gaussian_target(d, 1.0);
  t.id = "flat";
  t.potential = [](const Vec&) { return 0.0; };
  t.grad_potential = [](const Vec& q) { return Vec(q.size(), 0.0); };
  t.exact_sampler = nullptr;
  t.log_norm_const.reset();
  return t;
}

KernelSpec barker_spec(BetaKind beta, ProposalKernel proposal, int p) {
  KernelSpec s;
  s.family = Family::Barker;
  s.beta = beta;
  s.proposal = std::move(proposal);
  s.p = p;
  return s;
}

}  // namespace

TEST_CASE("selection interval draw honors cumulative intervals and ties") {
  const Vec alphas{0.25, 0.5, 0.25};
  CHECK(select_from_alphas(alphas, 0.0) == 0);
  CHECK(select_from_alphas(alphas, 0.2499) == 0);
  CHECK(select_from_alphas(alphas, 0.25) == 1);  // boundary goes to the lower interval
  CHECK(select_from_alphas(alphas, 0.7499) == 1);
  CHECK(select_from_alphas(alphas, 0.75) == 2);
  CHECK(select_from_alphas(alphas, 0.999999) == 2);
}

TEST_CASE("selection probabilities sum to one and shift-invariance is exact") {
  RngStream rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    Vec lw(8);
    // Dyadic log-weights make the shift cancellation exact in floating point.
    for (auto& w : lw)
      w = std::round(rng.normal() * 1048576.0) / 1048576.0 * 8.0;
    Vec alphas, shifted;
    select_from_log_weights(lw, 0.3, &alphas);
    double total = 0.0;
    for (double a : alphas) total += a;
    CHECK(std::fabs(total - 1.0) < 1e-12);

    Vec lw_shift = lw;
    const double c = 6.25;
    for (auto& w : lw_shift) w += c;
    select_from_log_weights(lw_shift, 0.3, &shifted);
    for (std::size_t i = 0; i < alphas.size(); ++i) CHECK(alphas[i] == shifted[i]);
  }
}

TEST_CASE("degenerate clouds raise, lone-finite current state holds") {
  CHECK_THROWS_AS(select_from_log_weights({kNegInf, kNegInf}, 0.5, nullptr),
                  DegenerateWeightsError);
  Vec alphas;
  const int sel = select_from_log_weights({0.0, kNegInf, kNegInf}, 0.9, &alphas);
  CHECK(sel == 0);
  CHECK(alphas[0] == 1.0);
}

TEST_CASE("barker with constant weights selects uniformly") {
  auto target = gaussian_reference_target({1.0, 1.0});
  auto spec = barker_spec(BetaKind::BubblePotential, ProposalKernel::pcn(2, 0.5, {1.0, 1.0}), 7);
  StepKey key{1, 0, 0};
  auto res = step_barker(spec, target, {0.2, -0.1}, key);
  for (double a : res.record.alphas) CHECK(a == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("slingshot with exact-target independence proposal gives equal weights") {
  auto target = gaussian_target(1, 1.0);
  auto spec =
      barker_spec(BetaKind::Slingshot, ProposalKernel::state_independent({0.0}, 1.0), 15);
  StepKey key{2, 0, 0};
  auto res = step_barker(spec, target, {0.3}, key);
  // pi / f is the normalizing-constant ratio for every cloud member.
  for (double a : res.record.alphas) CHECK(a == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
}

TEST_CASE("slingshot two-point transition law matches the quadrature oracle") {
  auto target = gaussian_target(1, 1.0);
  const double sf = 4.18;
  auto spec = barker_spec(BetaKind::Slingshot, ProposalKernel::gaussian_rw(1, sf), 1);
  const Vec q0{4.0};

  // Independent oracle: E[alpha_1] by quadrature over the proposal law.
  // w(x) = pi(x) / f(q0, x), alpha_1(x) = w(x) / (w(q0) + w(x)).
  auto w = [&](double x) {
    return std::exp(-0.5 * x * x + 0.5 * (x - 4.0) * (x - 4.0) / (sf * sf)) * sf *
           std::sqrt(2.0 * M_PI) / std::sqrt(2.0 * M_PI);
  };
  const double w0 = w(4.0);
  const double lo = 4.0 - 12.0 * sf, hi = 4.0 + 12.0 * sf;
  const int nq = 200000;
  const double h = (hi - lo) / nq;
  double expect_move = 0.0;
  for (int i = 0; i < nq; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double f = std::exp(-0.5 * (x - 4.0) * (x - 4.0) / (sf * sf)) /
                     (sf * std::sqrt(2.0 * M_PI));
    expect_move += f * (w(x) / (w0 + w(x))) * h;
  }

  const int n = 1000000;
  int moves = 0;
  for (int r = 0; r < n; ++r) {
    StepKey key{7, static_cast<std::uint64_t>(r), 0};
    auto res = step_barker(spec, target, q0, key);
    moves += res.record.accepted ? 1 : 0;
  }
  const double freq = static_cast<double>(moves) / n;
  const double se = std::sqrt(expect_move * (1.0 - expect_move) / n);
  CHECK(std::fabs(freq - expect_move) < 3.0 * se);
}

TEST_CASE("no-hold variant always moves and matches barker for large p") {
  auto target = gaussian_target(1, 1.0);
  auto spec = barker_spec(BetaKind::Slingshot, ProposalKernel::gaussian_rw(1, 2.0), 1);
  spec.family = Family::BarkerNoHold;
  StepKey key{3, 0, 0};
  auto res = step_barker_no_hold(spec, target, {0.5}, key);
  CHECK(res.record.selected == 1);
  CHECK(res.record.alphas[0] == 0.0);

  // Constant weights over proposals only.
  auto flat = flat_lebesgue_target(1);
  auto spec2 = barker_spec(BetaKind::BubbleBath, ProposalKernel::gaussian_rw(1, 1.0), 5);
  auto res2 = step_barker_no_hold(spec2, flat, {0.0}, key);
  CHECK(res2.record.alphas[0] == 0.0);
  for (std::size_t j = 1; j < res2.record.alphas.size(); ++j)
    CHECK(res2.record.alphas[j] == doctest::Approx(0.2));

  // Remark-level equivalence: the held-state mass vanishes as p grows, so
  // the two variants' moments approach each other (common substreams).
  auto gap = [&](int p) {
    auto sa = barker_spec(BetaKind::Slingshot, ProposalKernel::gaussian_rw(1, 2.0), p);
    auto sb = sa;
    sb.family = Family::BarkerNoHold;
    Observable m2{"m2", [](const Vec& q) { return q[0] * q[0]; }};
    auto ta = run_chain(sa, target, {0.0}, 20000, 1000, {}, 99, 0);
    auto tb = run_chain(sb, target, {0.0}, 20000, 1000, {}, 99, 0);
    return std::fabs(estimate_standard(ta, m2) - estimate_standard(tb, m2));
  };
  CHECK(gap(512) < gap(16));
}

TEST_CASE("metropolis-type multiproposal acceptance structure") {
  auto flat = flat_lebesgue_target(1);
  KernelSpec spec;
  spec.family = Family::MetropolisDegenerate;
  spec.beta = BetaKind::BubbleBath;
  spec.proposal = ProposalKernel::gaussian_rw(1, 1.0);
  spec.p = 4;
  StepKey key{5, 0, 0};
  // Beta ratio is identically 1: alpha_j = a_j, hold probability 1 - sum a_j.
  spec.mh_weights = {0.1, 0.2, 0.3, 0.2};
  auto res = step_metropolis_degenerate(spec, flat, {0.0}, key);
  CHECK(res.record.alphas[0] == doctest::Approx(0.2));
  for (int j = 1; j <= 4; ++j)
    CHECK(res.record.alphas[static_cast<std::size_t>(j)] ==
          doctest::Approx(spec.mh_weights[static_cast<std::size_t>(j - 1)]));

  spec.mh_weights = {0.9, 0.9, 0.0, 0.0};
  CHECK_THROWS_AS(step_metropolis_degenerate(spec, flat, {0.0}, key), ParameterError);

  // Single proposal with a_1 = 1 reduces to plain MH.
  auto target = gaussian_target(1, 1.0);
  KernelSpec mh;
  mh.family = Family::MetropolisDegenerate;
  mh.beta = BetaKind::BubbleBath;
  mh.proposal = ProposalKernel::gaussian_rw(1, 2.4);
  mh.p = 1;
  mh.mh_weights = {1.0};
  auto res2 = step_metropolis_degenerate(mh, target, {1.0}, StepKey{6, 0, 0});
  const Vec& q1 = res2.record.proposals[0];
  const double expected = std::min(1.0, std::exp(-0.5 * q1[0] * q1[0] + 0.5));
  CHECK(res2.record.alphas[1] == doctest::Approx(expected));
}

TEST_CASE("convolutional with dirac preliminary reproduces barker per seed") {
  auto target = gaussian_target(2, 1.0);
  auto spec = barker_spec(BetaKind::BubbleBath, ProposalKernel::gaussian_rw(2, 1.3), 9);
  KernelSpec conv = spec;
  conv.family = Family::Convolutional;
  conv.preliminary = ProposalKernel::dirac(2);
  for (int iter = 0; iter < 50; ++iter) {
    StepKey key{11, 0, static_cast<std::uint64_t>(iter)};
    auto a = step_barker(spec, target, {0.4, -0.7}, key);
    auto b = step_convolutional(conv, target, {0.4, -0.7}, key);
    CHECK(a.q_next == b.q_next);
    CHECK(a.record.selected == b.record.selected);
  }
}

TEST_CASE("convolutional rejects unbiased-pairing violations") {
  auto target = gaussian_target(1, 1.0);
  KernelSpec conv;
  conv.family = Family::Convolutional;
  conv.beta = BetaKind::BubbleBath;
  conv.proposal = ProposalKernel::gaussian_rw(1, 1.0);
  conv.preliminary = ProposalKernel::gaussian_rw(1, 2.0);  // mismatched scales
  conv.p = 3;
  CHECK_THROWS_AS(step_convolutional(conv, target, {0.0}, StepKey{1, 0, 0}), ConfigError);
  conv.preliminary = ProposalKernel::state_independent({0.0}, 1.0);
  conv.proposal = ProposalKernel::state_independent({0.0}, 1.0);
  CHECK_THROWS_AS(step_convolutional(conv, target, {0.0}, StepKey{1, 0, 0}), ConfigError);
}

TEST_CASE("naive unbiased weights: single proposal and independence reductions") {
  auto target = gaussian_target(1, 1.0);
  KernelSpec naive;
  naive.family = Family::NaiveUnbiased;
  naive.proposal = ProposalKernel::gaussian_rw(1, 1.7);
  naive.p = 1;
  StepKey key{13, 0, 0};
  auto res = step_naive_unbiased(naive, target, {0.8}, key);
  // p = 1 with symmetric f: alpha ratio reduces to pi(q1) : pi(q0).
  const Vec& q1 = res.record.proposals[0];
  const double r = std::exp(-0.5 * q1[0] * q1[0]) /
                   (std::exp(-0.5 * 0.64) + std::exp(-0.5 * q1[0] * q1[0]));
  CHECK(res.record.alphas[1] == doctest::Approx(r).epsilon(1e-10));

  // State-independent f: interaction terms cancel, weights match slingshot.
  KernelSpec naive_ind = naive;
  naive_ind.proposal = ProposalKernel::state_independent({0.0}, 2.0);
  naive_ind.p = 6;
  auto sling = barker_spec(BetaKind::Slingshot, ProposalKernel::state_independent({0.0}, 2.0), 6);
  auto ra = step_naive_unbiased(naive_ind, target, {0.8}, key);
  auto rb = step_barker(sling, target, {0.8}, key);
  for (std::size_t j = 0; j < ra.record.alphas.size(); ++j)
    CHECK(ra.record.alphas[j] == doctest::Approx(rb.record.alphas[j]).epsilon(1e-10));

  naive.p = 600;
  CHECK_THROWS_AS(step_naive_unbiased(naive, target, {0.0}, key), CostGuardError);
}

TEST_CASE("hmc barker cloud is uniform for a constant potential") {
  auto flat = flat_lebesgue_target(2);
  KernelSpec spec;
  spec.family = Family::HMCBarker;
  spec.p = 5;
  spec.hmc_T = 1.0;
  auto res = step_hmc_multiproposal(spec, flat, {0.1, 0.2}, StepKey{17, 0, 0});
  for (double a : res.record.alphas) CHECK(a == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("hmc short-time continuity") {
  auto target = gaussian_target(2, 1.0);
  KernelSpec spec;
  spec.family = Family::HMCBarker;
  spec.p = 4;
  spec.hmc_T = 1e-4;
  const Vec q0{0.7, -0.3};
  auto res = step_hmc_multiproposal(spec, target, q0, StepKey{19, 0, 0});
  CHECK(norm2(sub(res.q_next, q0)) < 1e-3);
}

TEST_CASE("random-time kernel follows the exact harmonic flow") {
  auto target = gaussian_target(1, 1.0);
  KernelSpec spec;
  spec.family = Family::SingleHMCRandomT;
  spec.hmc_T = M_PI / 2.0;
  spec.hmc_fine_steps = 4096;
  const Vec q0{1.3};
  for (int iter = 0; iter < 20; ++iter) {
    StepKey key{23, 0, static_cast<std::uint64_t>(iter)};
    auto res = step_hmc_random_time(spec, target, q0, key);
    // Streams are addressable, so the test can replay the momentum and time.
    RngStream mom = key.stream(Purpose::Momentum);
    const double v0 = mom.normal();
    RngStream sel = key.stream(Purpose::Select);
    const double t_raw = sel.uniform() * spec.hmc_T;
    const double dt = spec.hmc_T / spec.hmc_fine_steps;
    const double t = std::lround(t_raw / dt) * dt;
    const double exact = std::cos(t) * q0[0] + std::sin(t) * v0;
    CHECK(std::fabs(res.q_next[0] - exact) < 1e-4);
  }
}

TEST_CASE("single-kernel baselines") {
  auto target = std::make_shared<TargetModel>(gaussian_target(1, 1.0));

  KernelSpec rwm;
  rwm.family = Family::SingleRWM;
  rwm.proposal = ProposalKernel::gaussian_rw(1, 2.4);
  auto trace = run_chain(rwm, *target, {0.0}, 100000, 10000, {}, 29, 0);
  Observable id{"q1", [](const Vec& q) { return q[0]; }};
  const Vec series = observable_series(trace, id);
  const double mean = estimate_standard(trace, id);
  const double se = std::sqrt(1.0 / ess(series).ess);
  CHECK(std::fabs(mean) < 3.0 * se);

  // MALA acceptance approaches 1 as the step vanishes.
  KernelSpec mala;
  mala.family = Family::SingleMALA;
  mala.proposal = ProposalKernel::langevin_em(target, 0.01);
  auto tr2 = run_chain(mala, *target, {0.5}, 4000, 0, {}, 31, 0);
  CHECK(tr2.acceptance_rate() >= 0.95);

  // inf-MALA accepts identically under a zero potential.
  auto prior = std::make_shared<TargetModel>(gaussian_reference_target({1.0, 0.5}));
  KernelSpec infm;
  infm.family = Family::SingleInfMALA;
  infm.proposal = ProposalKernel::inf_mala_cn(prior, 0.6);
  for (int iter = 0; iter < 30; ++iter) {
    auto res = step_single(infm, *prior, {0.3, -0.4}, StepKey{37, 0, static_cast<std::uint64_t>(iter)});
    CHECK(res.record.alphas[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("single-kernel detailed balance pointwise") {
  auto target = std::make_shared<TargetModel>(gaussian_target(1, 1.0));
  // alpha(x,y) f(x,y) pi(x) == alpha(y,x) f(y,x) pi(y) for MALA.
  auto prop = ProposalKernel::langevin_em(target, 0.8);
  RngStream rng(41);
  for (int i = 0; i < 1000; ++i) {
    const Vec x{2.0 * rng.normal()}, y{2.0 * rng.normal()};
    auto log_alpha = [&](const Vec& a, const Vec& b) {
      return std::min(0.0, (-target->phi(b) + prop.log_density(b, a)) -
                               (-target->phi(a) + prop.log_density(a, b)));
    };
    const double lhs = log_alpha(x, y) + prop.log_density(x, y) - target->phi(x);
    const double rhs = log_alpha(y, x) + prop.log_density(y, x) - target->phi(y);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("cloud records are bit-identical for a fixed seed") {
  auto target = gaussian_target(2, 1.0);
  auto spec = barker_spec(BetaKind::Slingshot, ProposalKernel::gaussian_rw(2, 1.5), 12);
  StepKey key{43, 7, 19};
  auto a = step_barker(spec, target, {0.3, 0.4}, key);
  auto b = step_barker(spec, target, {0.3, 0.4}, key);
  CHECK(a.q_next == b.q_next);
  CHECK(a.record.log_weights == b.record.log_weights);
  CHECK(a.record.alphas == b.record.alphas);
  CHECK(a.record.selected == b.record.selected);
}

TEST_CASE("nan potentials are reported, not silently selected") {
  TargetModel bad = gaussian_target(1, 1.0);
  bad.potential = [](const Vec& q) {
    return q[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : 0.5 * q[0] * q[0];
  };
  auto spec = barker_spec(BetaKind::BubbleBath, ProposalKernel::gaussian_rw(1, 5.0), 32);
  CHECK_THROWS_AS(step_barker(spec, bad, {0.0}, StepKey{47, 0, 0}), NumericError);
}
