#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "madprops/config.hpp"
#include "madprops/diagnostics.hpp"
#include "madprops/limit_oracles.hpp"

namespace madprops {

// Ordered parallel map: fn(i) runs on a pool, results must be written by
// index so outputs are identical for any worker count.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Independent single-step kernel outputs from a fixed starting point.
std::vector<Vec> kernel_redraws(const KernelSpec& spec, const TargetModel& target,
                                const Vec& q0, int n, std::uint64_t seed,
                                std::uint64_t stream_tag = 0);

struct AdaptiveRunResult {
  ChainTrace trace;
  Vec epoch_sigmas;          // sigma entering each epoch
  Vec epoch_rates;           // measured rate per epoch
  std::vector<int> epoch_ends;
  double final_sigma = 0.0;  // frozen after burn-in
};

// Acceptance-rate-targeting adaptation over geometrically growing epochs,
// active during burn-in only; the post-burn-in kernel is a fixed Markov
// kernel.
AdaptiveRunResult run_chain_adaptive(
    const std::function<KernelSpec(double)>& make_spec, double sigma0,
    const TargetModel& target, const Vec& q_init, int iterations, int burn_in,
    const AdaptPolicy& policy, const std::vector<Observable>& observables,
    std::uint64_t seed, std::uint64_t chain_id);

// Analytic per-coordinate mean and raw second moment, for targets that
// have them in closed form.
std::optional<std::pair<Vec, Vec>> analytic_moments(const TargetModel& target,
                                                    const nlohmann::json& target_json);

// Grid ground truth for the banana, cached under `cache_dir`. The box is
// chosen from the potential's level sets at the default parameters.
GridOracle banana_oracle(const TargetModel& target, const nlohmann::json& target_json,
                         const std::string& cache_dir);

// CLI commands. Throw ConfigError/ParameterError for exit code 2,
// anything else for exit code 1.
void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir, int workers);
void cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int workers);
void cmd_tune(const ExperimentConfig& cfg, const std::string& out_dir, int workers);
void cmd_limitcheck(const ExperimentConfig& cfg, const std::string& out_dir, int workers);

}  // namespace madprops
