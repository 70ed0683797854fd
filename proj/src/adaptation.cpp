#include "madprops/adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace madprops {

double sigma_star_norm(double q0_norm, double sigma_pi, int d) {
  if (!(sigma_pi > 0.0)) throw ParameterError("sigma_star: sigma_pi must be > 0");
  if (d < 1) throw ParameterError("sigma_star: d must be >= 1");
  if (q0_norm == 0.0) return sigma_pi;  // the formula is exact at the center
  const double s2 = sigma_pi * sigma_pi;
  const double r2 = q0_norm * q0_norm / d;
  const double var =
      0.75 * s2 + 0.5 * r2 + 0.25 * std::sqrt(s2 * s2 + 12.0 * s2 * r2 + 4.0 * r2 * r2);
  return std::sqrt(var);
}

double sigma_star(const Vec& q0, double sigma_pi) {
  return sigma_star_norm(norm2(q0), sigma_pi, static_cast<int>(q0.size()));
}

double adapt_rate(double current_sigma, double measured_rate, double target_rate,
                  const AdaptPolicy& policy) {
  if (!(target_rate > 0.0 && target_rate < 1.0))
    throw ParameterError("adapt_rate: target rate must be in (0,1)");
  if (measured_rate < 0.0 || measured_rate > 1.0)
    throw ParameterError("adapt_rate: measured rate must be in [0,1]");
  const double eps = 1e-12;
  const double ratio = target_rate / std::max(measured_rate, eps);
  const double r = std::clamp(ratio, policy.clamp_lo, policy.clamp_hi);
  return current_sigma / std::sqrt(r);
}

std::pair<double, double> weight_mean_variance(const TargetModel& target,
                                               const ProposalKernel& proposal,
                                               const Vec& q0, int p, int redraws,
                                               std::uint64_t seed) {
  if (p < 1) throw ParameterError("weight_mean_variance: p must be >= 1");
  if (redraws < 2) throw ParameterError("weight_mean_variance: redraws must be >= 2");
  if (!proposal.has_log_density())
    throw ConfigError("weight_mean_variance: proposal density required");
  // Normalized target density when the constant is known; the variance is
  // unaffected either way.
  const double log_z = target.log_norm_const.value_or(0.0);

  Vec bars(static_cast<std::size_t>(redraws));
  for (int r = 0; r < redraws; ++r) {
    StepKey key{seed, static_cast<std::uint64_t>(r), 0};
    double sum = 0.0;
    for (int l = 1; l <= p; ++l) {
      RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(l));
      Vec ql = proposal.draw(q0, rng);
      sum += std::exp(-target.phi(ql) - log_z - proposal.log_density(q0, ql));
    }
    bars[static_cast<std::size_t>(r)] = sum / p;
  }
  double mean = 0.0;
  for (double b : bars) mean += b;
  mean /= redraws;
  double ss = 0.0;
  for (double b : bars) ss += (b - mean) * (b - mean);
  return {mean, ss / (redraws - 1)};
}

}  // namespace madprops
