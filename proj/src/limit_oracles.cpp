#include "madprops/limit_oracles.hpp"

#include <cmath>

namespace madprops {

namespace {

// pi(q~) Q(q0, dq~) / Z(q0), by rejection against Q when a sup bound on
// the density is available, otherwise by self-normalized importance
// resampling over a finite pool.
Vec bubble_bath_limit_draw(const LimitKernel& lk, const Vec& q0, const StepKey& key) {
  const TargetModel& target = *lk.target;
  if (lk.log_sup_density) {
    const double log_m = *lk.log_sup_density;
    RngStream rng = key.stream(Purpose::Exact);
    for (int attempt = 0; attempt < 1000000; ++attempt) {
      Vec q = lk.proposal.draw(q0, rng);
      const double log_acc = -target.phi(q) - log_m;
      if (std::log(rng.uniform()) < log_acc) return q;
    }
    throw EffectiveSampleError("bubble-bath limit: rejection sampler starved");
  }
  // Fallback: importance resampling with a max-weight guard against
  // silent bias from a degenerate pool.
  const int pool = lk.fallback_pool;
  std::vector<Vec> draws(static_cast<std::size_t>(pool));
  Vec log_w(static_cast<std::size_t>(pool));
  for (int i = 0; i < pool; ++i) {
    RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(i));
    draws[static_cast<std::size_t>(i)] = lk.proposal.draw(q0, rng);
    log_w[static_cast<std::size_t>(i)] = -target.phi(draws[static_cast<std::size_t>(i)]);
  }
  const double lse = log_sum_exp(log_w);
  if (lse == kNegInf) throw DegenerateWeightsError("bubble-bath limit: all pool weights vanished");
  double max_w = 0.0;
  for (double lw : log_w) max_w = std::max(max_w, std::exp(lw - lse));
  if (max_w > 0.2)
    throw EffectiveSampleError("bubble-bath limit: resampling pool is degenerate");
  RngStream sel = key.stream(Purpose::Select);
  const double u = sel.uniform();
  double cum = 0.0;
  for (int i = 0; i < pool; ++i) {
    cum += std::exp(log_w[static_cast<std::size_t>(i)] - lse);
    if (u < cum) return draws[static_cast<std::size_t>(i)];
  }
  return draws.back();
}

}  // namespace

Vec draw_limit(const LimitKernel& lk, const Vec& q0, const StepKey& key) {
  switch (lk.kind) {
    case LimitKernel::Kind::SlingshotLimit: {
      RngStream rng = key.stream(Purpose::Exact);
      return lk.target->exact_draw(rng);
    }
    case LimitKernel::Kind::BubbleBathLimit:
      return bubble_bath_limit_draw(lk, q0, key);
    case LimitKernel::Kind::TjelmelandLimit: {
      RngStream rng = key.stream(Purpose::Prelim);
      Vec q_bar = lk.proposal.draw(q0, rng);
      return bubble_bath_limit_draw(lk, q_bar, key);
    }
    case LimitKernel::Kind::HMCRandomTimeLimit: {
      KernelSpec spec;
      spec.family = Family::SingleHMCRandomT;
      spec.hmc_T = lk.hmc_T;
      spec.hmc_fine_steps = lk.hmc_fine_steps;
      return step_hmc_random_time(spec, *lk.target, q0, key).q_next;
    }
  }
  throw NumericError("unreachable");
}

}  // namespace madprops
