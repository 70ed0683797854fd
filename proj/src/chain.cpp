#include "madprops/chain.hpp"

#include <cmath>
#include <numeric>

namespace madprops {

double ChainTrace::acceptance_rate() const {
  if (accepted_flags.empty()) return 0.0;
  double s = 0.0;
  for (auto f : accepted_flags) s += f;
  return s / static_cast<double>(accepted_flags.size());
}

ChainTrace run_chain(const KernelSpec& spec, const TargetModel& target,
                     const Vec& q_init, int iterations, int burn_in,
                     const std::vector<Observable>& observables,
                     std::uint64_t seed, std::uint64_t chain_id) {
  if (iterations < 0 || burn_in < 0 || (iterations > 0 && burn_in >= iterations))
    throw ParameterError("run_chain: need iterations > burn_in >= 0");
  ChainTrace trace;
  trace.seed = seed;
  trace.chain_id = chain_id;
  trace.iterations = iterations;
  trace.burn_in = burn_in;
  trace.states.reserve(static_cast<std::size_t>(iterations) + 1);
  trace.states.push_back(q_init);
  trace.accepted_flags.reserve(static_cast<std::size_t>(iterations));
  for (const auto& obs : observables) trace.observable_names.push_back(obs.name);
  const bool record_rb = !observables.empty() && family_exposes_cloud(spec.family);

  Vec q = q_init;
  for (int k = 0; k < iterations; ++k) {
    StepKey key{seed, chain_id, static_cast<std::uint64_t>(k)};
    StepResult res;
    try {
      res = step(spec, target, q, key);
    } catch (const std::exception& e) {
      throw std::runtime_error("chain step " + std::to_string(k) + ": " + e.what());
    }
    if (record_rb) {
      RbIterRow row;
      row.alphas = res.record.alphas;
      row.values.resize(observables.size());
      for (std::size_t o = 0; o < observables.size(); ++o) {
        Vec vals(res.record.alphas.size());
        vals[0] = observables[o].fn(q);
        for (std::size_t l = 1; l < vals.size(); ++l)
          vals[l] = observables[o].fn(res.record.proposals[l - 1]);
        row.values[o] = std::move(vals);
      }
      trace.rb_rows.push_back(std::move(row));
    }
    trace.accepted_flags.push_back(res.record.accepted ? 1 : 0);
    q = std::move(res.q_next);
    trace.states.push_back(q);
  }
  return trace;
}

double estimate_standard(const ChainTrace& trace, const Observable& obs) {
  const int n = trace.iterations - trace.burn_in;
  if (n <= 0) throw ParameterError("estimate_standard: empty post-burn-in window");
  double s = 0.0;
  for (int k = trace.burn_in + 1; k <= trace.iterations; ++k)
    s += obs.fn(trace.states[static_cast<std::size_t>(k)]);
  return s / n;
}

double estimate_rb(const ChainTrace& trace, const std::string& observable_name) {
  if (!trace.has_rb())
    throw UnsupportedOperationError("estimate_rb: no RB rows recorded for this family");
  std::size_t o = 0;
  for (; o < trace.observable_names.size(); ++o)
    if (trace.observable_names[o] == observable_name) break;
  if (o == trace.observable_names.size())
    throw ParameterError("estimate_rb: unknown observable " + observable_name);
  const int n = trace.iterations - trace.burn_in;
  if (n <= 0) throw ParameterError("estimate_rb: empty post-burn-in window");
  double s = 0.0;
  for (int k = trace.burn_in; k < trace.iterations; ++k) {
    const RbIterRow& row = trace.rb_rows[static_cast<std::size_t>(k)];
    double iter_val = 0.0;
    for (std::size_t l = 0; l < row.alphas.size(); ++l)
      iter_val += row.alphas[l] * row.values[o][l];
    s += iter_val;
  }
  return s / n;
}

double rb_onestep_variance(const KernelSpec& spec, const TargetModel& target,
                           const Vec& q0, int replicates, const Observable& obs,
                           std::uint64_t seed) {
  if (replicates < 2) throw ParameterError("rb_onestep_variance: replicates must be >= 2");
  if (spec.family != Family::Barker && spec.family != Family::Convolutional)
    throw UnsupportedOperationError("rb_onestep_variance: Barker or Convolutional only");
  Vec vals(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    StepKey key{seed, static_cast<std::uint64_t>(r), 0};
    StepResult res = step(spec, target, q0, key);
    double v = res.record.alphas[0] * obs.fn(q0);
    for (std::size_t l = 1; l < res.record.alphas.size(); ++l)
      v += res.record.alphas[l] * obs.fn(res.record.proposals[l - 1]);
    vals[static_cast<std::size_t>(r)] = v;
  }
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / replicates;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  return ss / (replicates - 1);
}

Vec observable_series(const ChainTrace& trace, const Observable& obs) {
  Vec s;
  s.reserve(static_cast<std::size_t>(trace.iterations - trace.burn_in));
  for (int k = trace.burn_in + 1; k <= trace.iterations; ++k)
    s.push_back(obs.fn(trace.states[static_cast<std::size_t>(k)]));
  return s;
}

}  // namespace madprops
