#pragma once

#include <cstdint>
#include <utility>

#include "madprops/kernels.hpp"

namespace madprops {

struct AdaptPolicy {
  double target_rate = 0.5;   // in (0,1)
  double clamp_lo = 0.5;      // precision-multiplier clamp
  double clamp_hi = 2.0;
  int epoch0 = 100;           // first adaptation interval, iterations
  double epoch_growth = 2.0;  // intervals grow geometrically
};

// Optimal state-dependent slingshot proposal scale for a centered spherical
// Gaussian target:
//   sigma_f*^2 = 3/4 s^2 + |q0|^2/(2d) + 1/4 sqrt(s^4 + 12 s^2 |q0|^2/d + 4 |q0|^4/d^2).
double sigma_star_norm(double q0_norm, double sigma_pi, int d);
double sigma_star(const Vec& q0, double sigma_pi);

// One acceptance-rate adaptation update: the precision multiplier is the
// target/measured ratio clamped to [1/2, 2], and precision scales as
// sigma^{-2}.
double adapt_rate(double current_sigma, double measured_rate, double target_rate,
                  const AdaptPolicy& policy);

// Mean and variance, across independent clouds, of the mean slingshot
// proposal weight (1/p) sum_l pi(q_l) / f(q0, q_l).
std::pair<double, double> weight_mean_variance(const TargetModel& target,
                                               const ProposalKernel& proposal,
                                               const Vec& q0, int p, int redraws,
                                               std::uint64_t seed);

}  // namespace madprops
