#pragma once

#include <memory>
#include <optional>

#include "madprops/kernels.hpp"

namespace madprops {

// Samplers for the analytic p = infinity kernels, used as reference laws in
// convergence experiments.
struct LimitKernel {
  enum class Kind {
    SlingshotLimit,      // the target itself
    BubbleBathLimit,     // pi(q~) Q(q0, dq~) / integral
    TjelmelandLimit,     // preliminary draw, then the bubble-bath limit
    HMCRandomTimeLimit,  // random integration time along the exact flow
  };
  Kind kind = Kind::SlingshotLimit;
  std::shared_ptr<const TargetModel> target;
  ProposalKernel proposal;                   // BubbleBath / Tjelmeland
  std::optional<double> log_sup_density;     // log sup exp(-Phi); rejection bound
  int fallback_pool = 10000;                 // importance-resampling pool size
  double hmc_T = 1.0;
  int hmc_fine_steps = 4096;
};

Vec draw_limit(const LimitKernel& lk, const Vec& q0, const StepKey& key);

}  // namespace madprops
