#pragma once

#include <optional>
#include <string>
#include <vector>

#include "madprops/common.hpp"
#include "madprops/proposals.hpp"
#include "madprops/rng.hpp"
#include "madprops/targets.hpp"

namespace madprops {

// Relative selection weights beta(q_tilde, q0); evaluated in log space.
enum class BetaKind {
  BubbleBath,       // pi(q_tilde), Lebesgue targets
  BubblePotential,  // exp(-Phi(q_tilde)), Gaussian-reference targets
  LocalSqrt,        // sqrt(pi(q_tilde) / pi(q0))
  LocalPCN,         // exp(-rho/(1+rho) (Phi(q_tilde/rho) - Phi(q0)))
  Slingshot,        // pi(q_tilde) / f(q0, q_tilde)
};

enum class Family {
  Barker,
  BarkerNoHold,
  MetropolisDegenerate,
  MTM,
  MTpCN,
  LMTpCN,
  Convolutional,
  NaiveUnbiased,
  HMCMetropolis,
  HMCBarker,
  SingleRWM,
  SingleMALA,
  SinglePCN,
  SingleInfMALA,
  SingleHMCRandomT,
};

// Everything recorded about one transition: the proposal cloud, the
// selection probabilities, and what was ultimately chosen.
struct CloudRecord {
  Vec q0;
  std::optional<Vec> q_bar;       // preliminary point / stage-one pick
  std::vector<Vec> proposals;     // q_1..q_p (cloud index 0 is q0)
  Vec log_weights;                // aligned with alphas
  Vec alphas;                     // selection probabilities, sum to 1
  int selected = 0;               // index into {q0, proposals...}
  double alpha_bar = 1.0;         // second-stage acceptance (MT / HMC-Metropolis)
  double alpha_bar_full = 1.0;    // general-form acceptance, kept for cross-checks
  bool accepted = false;
};

struct StepResult {
  Vec q_next;
  CloudRecord record;
};

struct KernelSpec {
  Family family = Family::Barker;
  BetaKind beta = BetaKind::BubbleBath;
  ProposalKernel proposal;
  std::optional<ProposalKernel> preliminary;  // Convolutional only
  int p = 1;
  Vec mh_weights;       // MetropolisDegenerate / HMCMetropolis; empty = 1/p each
  double hmc_T = 1.0;   // HMC families
  int hmc_fine_steps = 4096;  // random-integration-time surrogate resolution
  int naive_cap = 512;
};

double log_beta(BetaKind beta, const TargetModel& target,
                const ProposalKernel& proposal, const Vec& q_tilde,
                const Vec& q0);

// Cumulative-interval draw over normalized weights. Ties at interval
// boundaries resolve to the lower index.
int select_from_log_weights(const Vec& log_w, double u, Vec* alphas_out);
int select_from_alphas(const Vec& alphas, double u);

StepResult step_barker(const KernelSpec& spec, const TargetModel& target,
                       const Vec& q0, const StepKey& key);
StepResult step_barker_no_hold(const KernelSpec& spec, const TargetModel& target,
                               const Vec& q0, const StepKey& key);
StepResult step_metropolis_degenerate(const KernelSpec& spec,
                                      const TargetModel& target, const Vec& q0,
                                      const StepKey& key);
StepResult step_mtm(const KernelSpec& spec, const TargetModel& target,
                    const Vec& q0, const StepKey& key);
StepResult step_mtpcn(const KernelSpec& spec, const TargetModel& target,
                      const Vec& q0, const StepKey& key);
StepResult step_lmtpcn(const KernelSpec& spec, const TargetModel& target,
                       const Vec& q0, const StepKey& key);
StepResult step_convolutional(const KernelSpec& spec, const TargetModel& target,
                              const Vec& q0, const StepKey& key);
StepResult step_naive_unbiased(const KernelSpec& spec, const TargetModel& target,
                               const Vec& q0, const StepKey& key);
StepResult step_hmc_multiproposal(const KernelSpec& spec, const TargetModel& target,
                                  const Vec& q0, const StepKey& key);
StepResult step_hmc_random_time(const KernelSpec& spec, const TargetModel& target,
                                const Vec& q0, const StepKey& key);
StepResult step_single(const KernelSpec& spec, const TargetModel& target,
                       const Vec& q0, const StepKey& key);

StepResult step(const KernelSpec& spec, const TargetModel& target, const Vec& q0,
                const StepKey& key);

// True when the family records a full selection cloud, i.e. when the
// Rao-Blackwellized estimator of eq-style form applies.
bool family_exposes_cloud(Family family);

bool prior_reversible(const ProposalKernel& proposal, const TargetModel& target);

Family family_from_string(const std::string& s);
std::string family_to_string(Family f);
BetaKind beta_from_string(const std::string& s);
std::string beta_to_string(BetaKind b);

}  // namespace madprops
