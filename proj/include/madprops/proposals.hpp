#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "madprops/common.hpp"
#include "madprops/rng.hpp"
#include "madprops/targets.hpp"

namespace madprops {

// Single-proposal kernels Q(q0, .). Covariances are diagonal spectra, so
// C^{1/2} acts componentwise via sqrt(lambda_k^2).
struct ProposalKernel {
  enum class Kind {
    GaussianRW,       // q0 + sigma C^{1/2} xi
    PCN,              // rho q0 + sqrt(1-rho^2) C^{1/2} xi
    StateIndependent, // mean + sigma xi
    StateDependentRW, // q0 + sigma_f(q0) xi
    LangevinEM,       // q0 + (sigma^2/2) grad log pi(q0) + sigma xi
    InfMalaCN,        // rho q0 - (1-rho) C grad Phi(q0) + sqrt(1-rho^2) C^{1/2} xi
    DiracIdentity,
  };

  Kind kind = Kind::GaussianRW;
  int dim = 0;
  double sigma = 1.0;                         // GaussianRW / StateIndependent / LangevinEM
  double rho = 0.5;                           // PCN / InfMalaCN
  Vec spectrum;                               // lambda_k^2; empty means identity
  Vec mean;                                   // StateIndependent
  std::function<double(const Vec&)> scale_fn; // StateDependentRW
  std::shared_ptr<const TargetModel> target;  // LangevinEM / InfMalaCN

  static ProposalKernel gaussian_rw(int dim, double sigma, Vec spectrum = {});
  static ProposalKernel pcn(int dim, double rho, Vec spectrum = {});
  static ProposalKernel state_independent(Vec mean, double sigma);
  static ProposalKernel state_dependent_rw(int dim, std::function<double(const Vec&)> scale_fn);
  static ProposalKernel langevin_em(std::shared_ptr<const TargetModel> target, double sigma);
  static ProposalKernel inf_mala_cn(std::shared_ptr<const TargetModel> target, double rho,
                                    Vec spectrum = {});
  static ProposalKernel dirac(int dim);

  bool has_log_density() const { return kind != Kind::DiracIdentity; }

  Vec draw(const Vec& q0, RngStream& rng) const;
  // log f(q0, q_tilde) with respect to Lebesgue measure, normalization included.
  double log_density(const Vec& q0, const Vec& q_tilde) const;

  // Mean of the Gaussian Q(q0, .); used by log_density and by tests.
  Vec mean_at(const Vec& q0) const;

  double spectrum_entry(std::size_t i) const {
    return spectrum.empty() ? 1.0 : spectrum[i];
  }
};

// Separable Hamiltonian H(q, v) = Phi(q) + |v|^2 / 2, integrated by the
// leapfrog map with step T / p.
struct HamiltonianSystem {
  std::shared_ptr<const TargetModel> target;
  double T = 1.0;

  double hamiltonian(const Vec& q, const Vec& v) const {
    return target->phi(q) + 0.5 * norm2sq(v);
  }
};

// One leapfrog step: half momentum kick, full position drift, half kick.
void leapfrog_step(const TargetModel& target, double dt, Vec& q, Vec& v);

// All intermediate points Xi^j_{T/p}(q0, v0), j = 1..p.
std::vector<std::pair<Vec, Vec>> leapfrog_path(const HamiltonianSystem& sys,
                                               const Vec& q0, const Vec& v0,
                                               int p);

}  // namespace madprops
