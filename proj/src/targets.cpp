#include "madprops/targets.hpp"

#include <cmath>

namespace madprops {

ReferenceMeasure ReferenceMeasure::gaussian(Vec spectrum) {
  if (spectrum.empty()) throw ParameterError("Gaussian reference needs a nonempty spectrum");
  for (double s : spectrum)
    if (!(s > 0.0)) throw ParameterError("Gaussian reference spectrum must be strictly positive");
  ReferenceMeasure m;
  m.kind = Kind::GaussianZeroMean;
  m.covariance_spectrum = std::move(spectrum);
  return m;
}

TargetModel gaussian_target(int d, double sigma_pi) {
  if (d < 1) throw ParameterError("gaussian_target: d must be >= 1");
  if (!(sigma_pi > 0.0)) throw ParameterError("gaussian_target: sigma must be > 0");
  TargetModel t;
  t.dim = d;
  t.id = "gaussian";
  const double inv_var = 1.0 / (sigma_pi * sigma_pi);
  t.potential = [inv_var](const Vec& q) { return 0.5 * inv_var * norm2sq(q); };
  t.grad_potential = [inv_var](const Vec& q) {
    Vec g(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) g[i] = inv_var * q[i];
    return g;
  };
  t.reference = ReferenceMeasure::lebesgue();
  t.exact_sampler = [d, sigma_pi](RngStream& rng) {
    Vec q = rng.normal_vec(static_cast<std::size_t>(d));
    for (auto& x : q) x *= sigma_pi;
    return q;
  };
  t.log_norm_const = 0.5 * d * (kLog2Pi + 2.0 * std::log(sigma_pi));
  return t;
}

TargetModel diag_gaussian_target(Vec means, Vec variances) {
  if (means.size() != variances.size() || means.empty())
    throw ParameterError("diag_gaussian_target: size mismatch");
  for (double v : variances)
    if (!(v > 0.0)) throw ParameterError("diag_gaussian_target: variances must be > 0");
  TargetModel t;
  t.dim = static_cast<int>(means.size());
  t.id = "diag_gaussian";
  t.potential = [means, variances](const Vec& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = q[i] - means[i];
      s += d * d / variances[i];
    }
    return 0.5 * s;
  };
  t.grad_potential = [means, variances](const Vec& q) {
    Vec g(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) g[i] = (q[i] - means[i]) / variances[i];
    return g;
  };
  t.reference = ReferenceMeasure::lebesgue();
  t.exact_sampler = [means, variances](RngStream& rng) {
    Vec q(means.size());
    for (std::size_t i = 0; i < q.size(); ++i)
      q[i] = means[i] + std::sqrt(variances[i]) * rng.normal();
    return q;
  };
  double lz = 0.0;
  for (double v : variances) lz += 0.5 * (kLog2Pi + std::log(v));
  t.log_norm_const = lz;
  return t;
}

TargetModel banana_target(const BananaParams& p) {
  TargetModel t;
  t.dim = 2;
  t.id = "banana";
  t.potential = [p](const Vec& q) {
    const double ridge = q[1] + p.B * q[0] * q[0] - p.b * p.B;
    return p.a * q[0] * q[0] + p.c * q[0] + 0.5 * ridge * ridge;
  };
  t.grad_potential = [p](const Vec& q) {
    const double ridge = q[1] + p.B * q[0] * q[0] - p.b * p.B;
    return Vec{2.0 * p.a * q[0] + p.c + ridge * 2.0 * p.B * q[0], ridge};
  };
  t.reference = ReferenceMeasure::lebesgue();
  return t;
}

TargetModel gaussian_mixture_target(const Vec& weights,
                                    const std::vector<Vec>& centers,
                                    double tau) {
  if (weights.empty() || centers.empty()) throw ParameterError("mixture: empty component list");
  if (weights.size() != centers.size()) throw ParameterError("mixture: weights/centers size mismatch");
  if (!(tau > 0.0)) throw ParameterError("mixture: tau must be > 0");
  for (double w : weights)
    if (!(w > 0.0)) throw ParameterError("mixture: weights must be > 0");
  const std::size_t d = centers.front().size();
  for (const auto& c : centers)
    if (c.size() != d) throw ParameterError("mixture: inconsistent center dimensions");

  Vec log_w(weights.size());
  for (std::size_t m = 0; m < weights.size(); ++m) log_w[m] = std::log(weights[m]);
  const double inv_two_tau2 = 1.0 / (2.0 * tau * tau);

  TargetModel t;
  t.dim = static_cast<int>(d);
  t.id = "mixture";
  t.potential = [log_w, centers, inv_two_tau2](const Vec& q) {
    Vec terms(centers.size());
    for (std::size_t m = 0; m < centers.size(); ++m)
      terms[m] = log_w[m] - inv_two_tau2 * norm2sq(sub(q, centers[m]));
    return -log_sum_exp(terms);
  };
  t.grad_potential = [log_w, centers, inv_two_tau2, tau](const Vec& q) {
    Vec terms(centers.size());
    for (std::size_t m = 0; m < centers.size(); ++m)
      terms[m] = log_w[m] - inv_two_tau2 * norm2sq(sub(q, centers[m]));
    const double lse = log_sum_exp(terms);
    Vec g(q.size(), 0.0);
    const double inv_tau2 = 1.0 / (tau * tau);
    for (std::size_t m = 0; m < centers.size(); ++m) {
      const double resp = std::exp(terms[m] - lse);
      for (std::size_t i = 0; i < q.size(); ++i)
        g[i] += resp * (q[i] - centers[m][i]) * inv_tau2;
    }
    return g;
  };
  t.reference = ReferenceMeasure::lebesgue();

  Vec cum(weights.size());
  double total = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    total += weights[m];
    cum[m] = total;
  }
  for (auto& c : cum) c /= total;
  t.exact_sampler = [cum, centers, tau](RngStream& rng) {
    const double u = rng.uniform();
    std::size_t m = 0;
    while (m + 1 < cum.size() && u >= cum[m]) ++m;
    Vec q = rng.normal_vec(centers[m].size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = centers[m][i] + tau * q[i];
    return q;
  };
  return t;
}

TargetModel product_normal_target(int d) { return gaussian_target(d, 1.0); }

TargetModel gaussian_reference_target(Vec spectrum) {
  TargetModel t;
  t.dim = static_cast<int>(spectrum.size());
  t.id = "gaussian_reference";
  t.reference = ReferenceMeasure::gaussian(spectrum);
  t.potential = [](const Vec&) { return 0.0; };
  t.grad_potential = [](const Vec& q) { return Vec(q.size(), 0.0); };
  Vec spec = t.reference.covariance_spectrum;
  t.exact_sampler = [spec](RngStream& rng) {
    Vec q(spec.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::sqrt(spec[i]) * rng.normal();
    return q;
  };
  return t;
}

TargetModel gaussian_posterior_target(Vec spectrum, Vec y, double sigma_noise) {
  if (spectrum.size() != y.size()) throw ParameterError("posterior: spectrum/y size mismatch");
  if (!(sigma_noise > 0.0)) throw ParameterError("posterior: sigma_noise must be > 0");
  TargetModel t;
  t.dim = static_cast<int>(y.size());
  t.id = "gaussian_posterior";
  t.reference = ReferenceMeasure::gaussian(spectrum);
  const double inv_var = 1.0 / (sigma_noise * sigma_noise);
  t.potential = [y, inv_var](const Vec& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = y[i] - q[i];
      s += d * d;
    }
    return 0.5 * inv_var * s;
  };
  t.grad_potential = [y, inv_var](const Vec& q) {
    Vec g(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) g[i] = inv_var * (q[i] - y[i]);
    return g;
  };
  Vec mean, var;
  gaussian_posterior_moments(t.reference.covariance_spectrum, y, sigma_noise, mean, var);
  t.exact_sampler = [mean, var](RngStream& rng) {
    Vec q(mean.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = mean[i] + std::sqrt(var[i]) * rng.normal();
    return q;
  };
  return t;
}

TargetModel gaussian_posterior_lebesgue(const Vec& spectrum, const Vec& y,
                                        double sigma_noise) {
  Vec mean, var;
  gaussian_posterior_moments(spectrum, y, sigma_noise, mean, var);
  TargetModel t = diag_gaussian_target(mean, var);
  t.id = "gaussian_posterior_lebesgue";
  return t;
}

void gaussian_posterior_moments(const Vec& spectrum, const Vec& y,
                                double sigma_noise, Vec& mean_out, Vec& var_out) {
  mean_out.resize(y.size());
  var_out.resize(y.size());
  const double noise_prec = 1.0 / (sigma_noise * sigma_noise);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double prec = 1.0 / spectrum[i] + noise_prec;
    var_out[i] = 1.0 / prec;
    mean_out[i] = var_out[i] * noise_prec * y[i];
  }
}

Vec finite_difference_gradient(const TargetModel& target, const Vec& q, double h) {
  Vec g(q.size());
  Vec qp = q, qm = q;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double step = h * std::max(1.0, std::fabs(q[i]));
    qp[i] = q[i] + step;
    qm[i] = q[i] - step;
    g[i] = (target.phi(qp) - target.phi(qm)) / (2.0 * step);
    qp[i] = q[i];
    qm[i] = q[i];
  }
  return g;
}

}  // namespace madprops
