#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "madprops/kernels.hpp"

namespace madprops {

struct Observable {
  std::string name;
  std::function<double(const Vec&)> fn;  // should be bounded on the visited region
};

// Per-iteration Rao-Blackwell row: selection probabilities plus the
// observable values over the whole cloud. Full clouds are never retained.
struct RbIterRow {
  Vec alphas;
  std::vector<Vec> values;  // values[obs][l]
};

struct ChainTrace {
  std::vector<Vec> states;            // length N+1, states[0] = q_init
  std::vector<std::uint8_t> accepted_flags;  // length N
  std::vector<RbIterRow> rb_rows;     // length N when recorded, else empty
  std::vector<std::string> observable_names;
  std::uint64_t seed = 0;
  std::uint64_t chain_id = 0;
  int iterations = 0;
  int burn_in = 0;

  double acceptance_rate() const;
  bool has_rb() const { return !rb_rows.empty(); }
};

ChainTrace run_chain(const KernelSpec& spec, const TargetModel& target,
                     const Vec& q_init, int iterations, int burn_in,
                     const std::vector<Observable>& observables,
                     std::uint64_t seed, std::uint64_t chain_id = 0);

// Mean of the observable over the post-burn-in states.
double estimate_standard(const ChainTrace& trace, const Observable& obs);

// (1/N) sum_k sum_l alpha_l phi(q_l) using the recorded selection
// probabilities, not the realized selection.
double estimate_rb(const ChainTrace& trace, const std::string& observable_name);

// Empirical variance of the one-step Rao-Blackwell estimate over
// independent clouds at a fixed q0 (Barker / Convolutional families).
double rb_onestep_variance(const KernelSpec& spec, const TargetModel& target,
                           const Vec& q0, int replicates, const Observable& obs,
                           std::uint64_t seed);

// Post-burn-in series of one observable, for ESS and SE computations.
Vec observable_series(const ChainTrace& trace, const Observable& obs);

}  // namespace madprops
