#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "madprops/common.hpp"
#include "madprops/rng.hpp"
#include "madprops/targets.hpp"

namespace madprops {

struct EssResult {
  double ess = 0.0;
  bool zero_variance = false;
  bool capped = false;  // raw estimate exceeded N (antithetic series)
};

// Effective sample size via Geyer's initial monotone sequence truncation.
EssResult ess(const Vec& series);

// Kolmogorov-Smirnov statistics.
double ks_distance(const Vec& a, const Vec& b);
double ks_distance_cdf(const Vec& a, const std::function<double(double)>& cdf);
// Asymptotic two-sample p-value.
double ks_pvalue(double statistic, std::size_t n1, std::size_t n2);

// Histogram total variation over a common binning of two 1-D samples.
double tv_estimate(const Vec& a, const Vec& b, int bins);

// Mean squared gap between sorted marginal samples, averaged over
// dimensions; inputs are truncated to the shorter length.
double order_stat_mse(const std::vector<Vec>& chain_samples,
                      const std::vector<Vec>& exact_samples);

struct Box2D {
  double x_lo, x_hi, y_lo, y_hi;
};

// Grid ground truth for 2-D targets: normalizing constant and E|q|^k,
// k = 1..6, from midpoint quadrature at successively doubled resolutions.
struct GridOracle {
  Box2D box{};
  double tolerance = 1e-4;
  int levels = 0;
  int final_resolution = 0;
  double z = 0.0;                      // unnormalized integral of exp(-Phi)
  std::array<double, 6> moments{};     // E|q|^k, k = 1..6
  double sup_density = 0.0;            // max of exp(-Phi) over the box
  bool converged = false;

  double moment(int k) const {
    if (k < 1 || k > 6) throw ParameterError("grid oracle stores moments k = 1..6");
    return moments[static_cast<std::size_t>(k - 1)];
  }
};

GridOracle grid_oracle_build(const TargetModel& target, const Box2D& box,
                             int start_resolution, double tolerance = 1e-4,
                             int max_levels = 8);

// Same, backed by a JSON cache file keyed by target id, box and tolerance.
GridOracle grid_oracle_build_cached(const TargetModel& target, const Box2D& box,
                                    int start_resolution, double tolerance,
                                    const std::string& cache_dir);

// Inverse-CDF sampler on a fixed-resolution grid of the target.
class GridSampler {
 public:
  GridSampler(const TargetModel& target, const Box2D& box, int resolution);
  Vec draw(RngStream& rng) const;

 private:
  Box2D box_;
  int n_;
  Vec row_cdf_;             // marginal over x rows
  std::vector<Vec> cell_cdf_;  // per-row cumulative over y cells
};

// Sum over k = 1..6 of relative errors in E|q|^k against the oracle.
double banana_loss(const std::vector<Vec>& samples, const GridOracle& oracle);

// Least-squares slope of log(dist) against log(p).
double loglog_slope(const Vec& p_values, const Vec& distances);

}  // namespace madprops
