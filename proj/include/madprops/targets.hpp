#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "madprops/common.hpp"
#include "madprops/rng.hpp"

namespace madprops {

// Base measure mu0: Lebesgue on R^d, or a mean-zero Gaussian with a
// diagonal covariance spectrum lambda_k^2. Densities are always handled
// relative to this reference, so the target density is exp(-Phi) in both
// cases.
struct ReferenceMeasure {
  enum class Kind { Lebesgue, GaussianZeroMean };
  Kind kind = Kind::Lebesgue;
  Vec covariance_spectrum;  // lambda_k^2, GaussianZeroMean only

  static ReferenceMeasure lebesgue() { return {}; }
  static ReferenceMeasure gaussian(Vec spectrum);
};

struct TargetModel {
  int dim = 0;
  std::function<double(const Vec&)> potential;             // Phi
  std::function<Vec(const Vec&)> grad_potential;           // optional
  ReferenceMeasure reference;
  std::function<Vec(RngStream&)> exact_sampler;            // optional
  std::optional<double> log_norm_const;
  std::string id;

  double phi(const Vec& q) const { return potential(q); }
  Vec grad(const Vec& q) const {
    if (!grad_potential) throw ConfigError("target '" + id + "' has no gradient");
    return grad_potential(q);
  }
  bool has_grad() const { return static_cast<bool>(grad_potential); }
  bool has_exact_sampler() const { return static_cast<bool>(exact_sampler); }
  Vec exact_draw(RngStream& rng) const {
    if (!exact_sampler) throw UnsupportedOperationError("target '" + id + "' has no exact sampler");
    return exact_sampler(rng);
  }

  // log of d mu / d mu0 up to the normalizing constant, i.e. -Phi.
  double log_relative_density(const Vec& q) const { return -potential(q); }
};

struct BananaParams {
  double a = 0.005;
  double b = 100.0;
  double c = 0.05;
  double B = 0.1;
};

// Centered spherical Gaussian on R^d: Phi(q) = |q|^2 / (2 sigma^2).
TargetModel gaussian_target(int d, double sigma_pi);

// Independent Gaussian coordinates with per-coordinate means and variances.
TargetModel diag_gaussian_target(Vec means, Vec variances);

// Tilted banana on R^2: Phi(q) = a q1^2 + c q1 + (q2 + B q1^2 - b B)^2 / 2.
TargetModel banana_target(const BananaParams& params);

// Gaussian mixture, log-sum-exp potential; weights need not be normalized.
TargetModel gaussian_mixture_target(const Vec& weights,
                                    const std::vector<Vec>& centers,
                                    double tau);

// Alias of gaussian_target(d, 1).
TargetModel product_normal_target(int d);

// Phi == 0 relative to N(0, C); the chain should preserve the reference.
TargetModel gaussian_reference_target(Vec spectrum);

// Gaussian posterior relative to the N(0, C) reference from observing
// y = q + noise, noise ~ N(0, sigma_noise^2 I). Closed-form moments make it
// the conjugate oracle for stationarity tests.
TargetModel gaussian_posterior_target(Vec spectrum, Vec y, double sigma_noise);

// The same posterior expressed with a Lebesgue reference.
TargetModel gaussian_posterior_lebesgue(const Vec& spectrum, const Vec& y,
                                        double sigma_noise);

// Per-coordinate posterior mean and variance for gaussian_posterior_target.
void gaussian_posterior_moments(const Vec& spectrum, const Vec& y,
                                double sigma_noise, Vec& mean_out, Vec& var_out);

// Central finite-difference gradient, used by the gradient check.
Vec finite_difference_gradient(const TargetModel& target, const Vec& q,
                               double h = 1e-5);

}  // namespace madprops
