#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "madprops/adaptation.hpp"
#include "madprops/chain.hpp"
#include "madprops/kernels.hpp"

namespace madprops {

// Declarative experiment description; fully determines outputs given the
// seed.
struct ExperimentConfig {
  nlohmann::json target_json;
  nlohmann::json kernel_json;
  int iterations = 1000;
  int burn_in = -1;  // -1: default N/4
  int replicates = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> observables;
  std::optional<Vec> q_init;
  std::optional<AdaptPolicy> adapt;
  bool scale_star = false;            // --scale star
  std::optional<double> scale_fixed;  // --scale fixed:<sigma>

  // sweep
  std::vector<int> p_list;
  Vec sigma_list;
  // tune
  Vec target_rates;
  // limitcheck
  int redraws = 10000;
  int reference_draws = 0;  // 0: same as redraws
  std::string distance = "tv";
  int bins = 64;
  std::string reference = "exact";

  int effective_burn_in() const {
    return burn_in >= 0 ? burn_in : iterations / 4;
  }
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_json(const nlohmann::json& j);

std::shared_ptr<TargetModel> build_target(const nlohmann::json& j);

// Builds the transition kernel named by the config for the given target.
// `sigma_override` replaces the proposal scale (used by adaptation).
KernelSpec build_kernel(const nlohmann::json& j,
                        const std::shared_ptr<TargetModel>& target,
                        std::optional<double> sigma_override = std::nullopt);

// Scalar observables by id: q<k> (coordinate), norm, norm2.
Observable build_observable(const std::string& id, int dim);

}  // namespace madprops
