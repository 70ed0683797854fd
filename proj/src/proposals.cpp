#include "madprops/proposals.hpp"

#include <cmath>

namespace madprops {

namespace {

void check_spectrum(const Vec& spectrum, int dim) {
  if (spectrum.empty()) return;
  if (static_cast<int>(spectrum.size()) != dim)
    throw ParameterError("proposal spectrum length does not match dim");
  for (double s : spectrum)
    if (!(s > 0.0)) throw ParameterError("proposal spectrum must be strictly positive");
}

// log N(x; mean, diag(var)) with per-coordinate variances.
double log_gaussian_density(const Vec& x, const Vec& mean, const Vec& var) {
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean[i];
    quad += d * d / var[i];
    logdet += std::log(var[i]);
  }
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + logdet + quad);
}

}  // namespace

ProposalKernel ProposalKernel::gaussian_rw(int dim, double sigma, Vec spectrum) {
  if (!(sigma > 0.0)) throw ParameterError("GaussianRW: sigma must be > 0");
  check_spectrum(spectrum, dim);
  ProposalKernel k;
  k.kind = Kind::GaussianRW;
  k.dim = dim;
  k.sigma = sigma;
  k.spectrum = std::move(spectrum);
  return k;
}

ProposalKernel ProposalKernel::pcn(int dim, double rho, Vec spectrum) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("PCN: rho must be in [0,1]");
  check_spectrum(spectrum, dim);
  ProposalKernel k;
  k.kind = Kind::PCN;
  k.dim = dim;
  k.rho = rho;
  k.spectrum = std::move(spectrum);
  return k;
}

ProposalKernel ProposalKernel::state_independent(Vec mean, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("StateIndependent: sigma must be > 0");
  ProposalKernel k;
  k.kind = Kind::StateIndependent;
  k.dim = static_cast<int>(mean.size());
  k.sigma = sigma;
  k.mean = std::move(mean);
  return k;
}

ProposalKernel ProposalKernel::state_dependent_rw(int dim,
                                                  std::function<double(const Vec&)> scale_fn) {
  if (!scale_fn) throw ParameterError("StateDependentRW: missing scale function");
  ProposalKernel k;
  k.kind = Kind::StateDependentRW;
  k.dim = dim;
  k.scale_fn = std::move(scale_fn);
  return k;
}

ProposalKernel ProposalKernel::langevin_em(std::shared_ptr<const TargetModel> target,
                                           double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("LangevinEM: sigma must be > 0");
  if (!target || !target->has_grad())
    throw ConfigError("LangevinEM proposal requires a target gradient");
  ProposalKernel k;
  k.kind = Kind::LangevinEM;
  k.dim = target->dim;
  k.sigma = sigma;
  k.target = std::move(target);
  return k;
}

ProposalKernel ProposalKernel::inf_mala_cn(std::shared_ptr<const TargetModel> target,
                                           double rho, Vec spectrum) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("InfMalaCN: rho must be in [0,1]");
  if (!target || !target->has_grad())
    throw ConfigError("InfMalaCN proposal requires a target gradient");
  ProposalKernel k;
  k.kind = Kind::InfMalaCN;
  k.dim = target->dim;
  k.rho = rho;
  if (spectrum.empty() && target->reference.kind == ReferenceMeasure::Kind::GaussianZeroMean)
    spectrum = target->reference.covariance_spectrum;
  check_spectrum(spectrum, k.dim);
  k.spectrum = std::move(spectrum);
  k.target = std::move(target);
  return k;
}

ProposalKernel ProposalKernel::dirac(int dim) {
  ProposalKernel k;
  k.kind = Kind::DiracIdentity;
  k.dim = dim;
  return k;
}

Vec ProposalKernel::mean_at(const Vec& q0) const {
  switch (kind) {
    case Kind::GaussianRW:
    case Kind::StateDependentRW:
    case Kind::DiracIdentity:
      return q0;
    case Kind::PCN: {
      Vec m(q0.size());
      for (std::size_t i = 0; i < q0.size(); ++i) m[i] = rho * q0[i];
      return m;
    }
    case Kind::StateIndependent:
      return mean;
    case Kind::LangevinEM: {
      Vec g = target->grad(q0);  // grad Phi; grad log pi = -grad Phi
      Vec m(q0.size());
      for (std::size_t i = 0; i < q0.size(); ++i)
        m[i] = q0[i] - 0.5 * sigma * sigma * g[i];
      return m;
    }
    case Kind::InfMalaCN: {
      Vec g = target->grad(q0);
      Vec m(q0.size());
      for (std::size_t i = 0; i < q0.size(); ++i)
        m[i] = rho * q0[i] - (1.0 - rho) * spectrum_entry(i) * g[i];
      return m;
    }
  }
  throw NumericError("unreachable");
}

Vec ProposalKernel::draw(const Vec& q0, RngStream& rng) const {
  if (kind == Kind::DiracIdentity) return q0;
  Vec m = mean_at(q0);
  const std::size_t d = m.size();
  switch (kind) {
    case Kind::GaussianRW: {
      for (std::size_t i = 0; i < d; ++i)
        m[i] += sigma * std::sqrt(spectrum_entry(i)) * rng.normal();
      return m;
    }
    case Kind::PCN: {
      const double scale = std::sqrt(1.0 - rho * rho);
      for (std::size_t i = 0; i < d; ++i)
        m[i] += scale * std::sqrt(spectrum_entry(i)) * rng.normal();
      return m;
    }
    case Kind::StateIndependent:
    case Kind::LangevinEM: {
      for (std::size_t i = 0; i < d; ++i) m[i] += sigma * rng.normal();
      return m;
    }
    case Kind::StateDependentRW: {
      const double s = scale_fn(q0);
      if (!(s > 0.0)) throw NumericError("StateDependentRW: nonpositive scale");
      for (std::size_t i = 0; i < d; ++i) m[i] += s * rng.normal();
      return m;
    }
    case Kind::InfMalaCN: {
      const double scale = std::sqrt(1.0 - rho * rho);
      for (std::size_t i = 0; i < d; ++i)
        m[i] += scale * std::sqrt(spectrum_entry(i)) * rng.normal();
      return m;
    }
    default:
      throw NumericError("unreachable");
  }
}

double ProposalKernel::log_density(const Vec& q0, const Vec& q_tilde) const {
  if (kind == Kind::DiracIdentity)
    throw UnsupportedOperationError("DiracIdentity has no density");
  const Vec m = mean_at(q0);
  Vec var(m.size());
  switch (kind) {
    case Kind::GaussianRW:
      for (std::size_t i = 0; i < var.size(); ++i)
        var[i] = sigma * sigma * spectrum_entry(i);
      break;
    case Kind::PCN: {
      if (rho >= 1.0) throw UnsupportedOperationError("PCN(1) is a Dirac kernel");
      const double f = 1.0 - rho * rho;
      for (std::size_t i = 0; i < var.size(); ++i) var[i] = f * spectrum_entry(i);
      break;
    }
    case Kind::StateIndependent:
    case Kind::LangevinEM:
      for (auto& v : var) v = sigma * sigma;
      break;
    case Kind::StateDependentRW: {
      const double s = scale_fn(q0);
      for (auto& v : var) v = s * s;
      break;
    }
    case Kind::InfMalaCN: {
      if (rho >= 1.0) throw UnsupportedOperationError("InfMalaCN(1) is a Dirac kernel");
      const double f = 1.0 - rho * rho;
      for (std::size_t i = 0; i < var.size(); ++i) var[i] = f * spectrum_entry(i);
      break;
    }
    default:
      throw NumericError("unreachable");
  }
  return log_gaussian_density(q_tilde, m, var);
}

void leapfrog_step(const TargetModel& target, double dt, Vec& q, Vec& v) {
  Vec g = target.grad(q);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 0.5 * dt * g[i];
  for (std::size_t i = 0; i < q.size(); ++i) q[i] += dt * v[i];
  g = target.grad(q);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 0.5 * dt * g[i];
}

std::vector<std::pair<Vec, Vec>> leapfrog_path(const HamiltonianSystem& sys,
                                               const Vec& q0, const Vec& v0,
                                               int p) {
  if (p < 1) throw ParameterError("leapfrog_path: p must be >= 1");
  if (!(sys.T > 0.0)) throw ParameterError("leapfrog_path: T must be > 0");
  const double dt = sys.T / p;
  std::vector<std::pair<Vec, Vec>> path;
  path.reserve(static_cast<std::size_t>(p));
  Vec q = q0, v = v0;
  for (int j = 0; j < p; ++j) {
    leapfrog_step(*sys.target, dt, q, v);
    path.emplace_back(q, v);
  }
  return path;
}

}  // namespace madprops
