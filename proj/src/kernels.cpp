#include "madprops/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace madprops {

namespace {

void check_finite_weights(const Vec& log_w) {
  for (double w : log_w)
    if (std::isnan(w)) throw NumericError("NaN log-weight in proposal cloud");
}

Vec scaled_by_rho(const Vec& q, double rho) {
  Vec r(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) r[i] = q[i] / rho;
  return r;
}

double local_pcn_rho(const ProposalKernel& proposal) {
  if (proposal.kind != ProposalKernel::Kind::PCN)
    throw ConfigError("LocalPCN weights require a pCN proposal");
  if (!(proposal.rho > 0.0))
    throw ParameterError("LocalPCN weights require rho in (0,1]");
  return proposal.rho;
}

// Uniform selection weights a_1..a_p with sum <= 1.
Vec metropolis_weights(const KernelSpec& spec) {
  Vec a = spec.mh_weights;
  if (a.empty()) a.assign(static_cast<std::size_t>(spec.p), 1.0 / spec.p);
  if (static_cast<int>(a.size()) != spec.p)
    throw ParameterError("mixture weight count does not match p");
  double total = 0.0;
  for (double w : a) {
    if (w < 0.0) throw ParameterError("mixture weights must be nonnegative");
    total += w;
  }
  if (total > 1.0 + 1e-12) throw ParameterError("mixture weights must sum to at most 1");
  return a;
}

}  // namespace

bool prior_reversible(const ProposalKernel& proposal, const TargetModel& target) {
  if (target.reference.kind == ReferenceMeasure::Kind::GaussianZeroMean)
    return proposal.kind == ProposalKernel::Kind::PCN;
  // Lebesgue base measure: symmetric kernel densities.
  return proposal.kind == ProposalKernel::Kind::GaussianRW;
}

double log_beta(BetaKind beta, const TargetModel& target,
                const ProposalKernel& proposal, const Vec& q_tilde,
                const Vec& q0) {
  switch (beta) {
    case BetaKind::BubbleBath:
    case BetaKind::BubblePotential:
      return -target.phi(q_tilde);
    case BetaKind::LocalSqrt:
      return 0.5 * (target.phi(q0) - target.phi(q_tilde));
    case BetaKind::LocalPCN: {
      const double rho = local_pcn_rho(proposal);
      return -(rho / (1.0 + rho)) * (target.phi(scaled_by_rho(q_tilde, rho)) - target.phi(q0));
    }
    case BetaKind::Slingshot: {
      if (target.reference.kind != ReferenceMeasure::Kind::Lebesgue)
        throw ConfigError("slingshot weights require a Lebesgue-reference target");
      if (!proposal.has_log_density())
        throw ConfigError("slingshot weights require a proposal density");
      return -target.phi(q_tilde) - proposal.log_density(q0, q_tilde);
    }
  }
  throw NumericError("unreachable");
}

int select_from_log_weights(const Vec& log_w, double u, Vec* alphas_out) {
  check_finite_weights(log_w);
  // Normalize against the running maximum so that shifting every
  // log-weight by the same constant cancels exactly.
  double m = kNegInf;
  for (double w : log_w) m = std::max(m, w);
  if (m == kNegInf)
    throw DegenerateWeightsError("all selection weights vanished");
  Vec alphas(log_w.size());
  double s = 0.0;
  for (std::size_t j = 0; j < log_w.size(); ++j) {
    alphas[j] = std::exp(log_w[j] - m);
    s += alphas[j];
  }
  for (auto& a : alphas) a /= s;
  if (alphas_out) *alphas_out = alphas;
  return select_from_alphas(alphas, u);
}

int select_from_alphas(const Vec& alphas, double u) {
  double cum = 0.0;
  int last_positive = 0;
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    if (alphas[j] > 0.0) last_positive = static_cast<int>(j);
    cum += alphas[j];
    if (u < cum) return static_cast<int>(j);
  }
  // u landed at or beyond the accumulated mass (rounding); take the last
  // index that carries any.
  return last_positive;
}

StepResult step_barker(const KernelSpec& spec, const TargetModel& target,
                       const Vec& q0, const StepKey& key) {
  if (spec.p < 0) throw ParameterError("barker: p must be >= 0");
  CloudRecord rec;
  rec.q0 = q0;
  rec.proposals.reserve(static_cast<std::size_t>(spec.p));
  Vec log_w(static_cast<std::size_t>(spec.p) + 1);
  log_w[0] = log_beta(spec.beta, target, spec.proposal, q0, q0);
  for (int j = 1; j <= spec.p; ++j) {
    RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(j));
    Vec qj = spec.proposal.draw(q0, rng);
    log_w[static_cast<std::size_t>(j)] = log_beta(spec.beta, target, spec.proposal, qj, q0);
    rec.proposals.push_back(std::move(qj));
  }
  rec.log_weights = log_w;
  RngStream sel = key.stream(Purpose::Select);
  rec.selected = select_from_log_weights(log_w, sel.uniform(), &rec.alphas);
  rec.accepted = rec.selected != 0;
  Vec q_next = rec.selected == 0 ? q0 : rec.proposals[static_cast<std::size_t>(rec.selected - 1)];
  return {std::move(q_next), std::move(rec)};
}

StepResult step_barker_no_hold(const KernelSpec& spec, const TargetModel& target,
                               const Vec& q0, const StepKey& key) {
  if (spec.p < 1) throw ParameterError("barker_no_hold: p must be >= 1");
  CloudRecord rec;
  rec.q0 = q0;
  Vec log_w(static_cast<std::size_t>(spec.p) + 1, kNegInf);  // alpha_0 forced to 0
  for (int j = 1; j <= spec.p; ++j) {
    RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(j));
    Vec qj = spec.proposal.draw(q0, rng);
    log_w[static_cast<std::size_t>(j)] = log_beta(spec.beta, target, spec.proposal, qj, q0);
    rec.proposals.push_back(std::move(qj));
  }
  rec.log_weights = log_w;
  RngStream sel = key.stream(Purpose::Select);
  rec.selected = select_from_log_weights(log_w, sel.uniform(), &rec.alphas);
  rec.accepted = true;
  Vec q_next = rec.proposals[static_cast<std::size_t>(rec.selected - 1)];
  return {std::move(q_next), std::move(rec)};
}

StepResult step_metropolis_degenerate(const KernelSpec& spec,
                                      const TargetModel& target, const Vec& q0,
                                      const StepKey& key) {
  if (spec.p < 1) throw ParameterError("metropolis: p must be >= 1");
  const Vec a = metropolis_weights(spec);
  CloudRecord rec;
  rec.q0 = q0;
  Vec alphas(static_cast<std::size_t>(spec.p) + 1, 0.0);
  Vec log_w(static_cast<std::size_t>(spec.p) + 1, 0.0);
  double sum = 0.0;
  for (int j = 1; j <= spec.p; ++j) {
    RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(j));
    Vec qj = spec.proposal.draw(q0, rng);
    const double fwd = log_beta(spec.beta, target, spec.proposal, qj, q0);
    const double bwd = log_beta(spec.beta, target, spec.proposal, q0, qj);
    log_w[static_cast<std::size_t>(j)] = fwd;
    const double acc = std::min(1.0, std::exp(fwd - bwd));
    alphas[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(j - 1)] * acc;
    sum += alphas[static_cast<std::size_t>(j)];
    rec.proposals.push_back(std::move(qj));
  }
  alphas[0] = std::max(0.0, 1.0 - sum);
  rec.alphas = alphas;
  rec.log_weights = log_w;
  RngStream sel = key.stream(Purpose::Select);
  rec.selected = select_from_alphas(alphas, sel.uniform());
  rec.accepted = rec.selected != 0;
  Vec q_next = rec.selected == 0 ? q0 : rec.proposals[static_cast<std::size_t>(rec.selected - 1)];
  return {std::move(q_next), std::move(rec)};
}

namespace {

// log d eta_perp / d eta (q0, q_bar) per the per-case rules: the target
// density ratio under prior reversibility, the explicit kernel-density
// ratio otherwise.
double log_eta_ratio(const TargetModel& target, const ProposalKernel& proposal,
                     const Vec& q0, const Vec& q_bar) {
  if (prior_reversible(proposal, target))
    return target.phi(q0) - target.phi(q_bar);
  if (target.reference.kind == ReferenceMeasure::Kind::Lebesgue &&
      proposal.has_log_density()) {
    return (-target.phi(q_bar) + proposal.log_density(q_bar, q0)) -
           (-target.phi(q0) + proposal.log_density(q0, q_bar));
  }
  throw ConfigError("multiple-try step needs a proposal density or prior reversibility");
}

// The balance condition that collapses the two-stage acceptance to the
// weight-sum ratio.
bool mtm_balance_holds(BetaKind beta, const ProposalKernel& proposal,
                       const TargetModel& target) {
  switch (beta) {
    case BetaKind::BubbleBath:
    case BetaKind::BubblePotential:
    case BetaKind::LocalSqrt:
      return prior_reversible(proposal, target);
    case BetaKind::Slingshot:
      return proposal.kind == ProposalKernel::Kind::GaussianRW ||
             proposal.kind == ProposalKernel::Kind::StateIndependent;
    case BetaKind::LocalPCN:
      return false;
  }
  return false;
}

StepResult mtm_core(const KernelSpec& spec, const TargetModel& target,
                    const Vec& q0, const StepKey& key) {
  if (spec.p < 1) throw ParameterError("multiple-try: p must be >= 1");
  const ProposalKernel& Q = spec.proposal;

  CloudRecord rec;
  rec.q0 = q0;
  Vec log_w(static_cast<std::size_t>(spec.p) + 1, kNegInf);  // index 0 unused in stage one
  for (int j = 1; j <= spec.p; ++j) {
    RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(j));
    Vec qj = Q.draw(q0, rng);
    log_w[static_cast<std::size_t>(j)] = log_beta(spec.beta, target, Q, qj, q0);
    rec.proposals.push_back(std::move(qj));
  }
  rec.log_weights = log_w;
  RngStream sel = key.stream(Purpose::Select);
  rec.selected = select_from_log_weights(log_w, sel.uniform(), &rec.alphas);
  const Vec& q_bar = rec.proposals[static_cast<std::size_t>(rec.selected - 1)];
  rec.q_bar = q_bar;

  // Auxiliary cloud around the stage-one pick; its weight sum (with
  // beta(q0, q_bar) standing in for the held state) forms the denominator.
  Vec log_aux(static_cast<std::size_t>(spec.p));
  log_aux[0] = log_beta(spec.beta, target, Q, q0, q_bar);
  for (int l = 1; l <= spec.p - 1; ++l) {
    RngStream rng = key.stream(Purpose::Aux, static_cast<std::uint64_t>(l));
    Vec zl = Q.draw(q_bar, rng);
    log_aux[static_cast<std::size_t>(l)] = log_beta(spec.beta, target, Q, zl, q_bar);
  }

  Vec cloud_w(log_w.begin() + 1, log_w.end());
  const double log_ratio_reduced = log_sum_exp(cloud_w) - log_sum_exp(log_aux);
  const double log_prefactor =
      log_eta_ratio(target, Q, q0, q_bar) +
      log_beta(spec.beta, target, Q, q0, q_bar) -
      log_beta(spec.beta, target, Q, q_bar, q0);
  const double alpha_full = std::min(1.0, std::exp(log_prefactor + log_ratio_reduced));
  const double alpha_reduced = std::min(1.0, std::exp(log_ratio_reduced));

  rec.alpha_bar_full = alpha_full;
  rec.alpha_bar = mtm_balance_holds(spec.beta, Q, target) ? alpha_reduced : alpha_full;

  RngStream acc = key.stream(Purpose::Accept);
  rec.accepted = acc.uniform() < rec.alpha_bar;
  Vec q_next = rec.accepted ? q_bar : q0;
  return {std::move(q_next), std::move(rec)};
}

}  // namespace

StepResult step_mtm(const KernelSpec& spec, const TargetModel& target,
                    const Vec& q0, const StepKey& key) {
  return mtm_core(spec, target, q0, key);
}

StepResult step_mtpcn(const KernelSpec& spec, const TargetModel& target,
                      const Vec& q0, const StepKey& key) {
  if (spec.proposal.kind != ProposalKernel::Kind::PCN)
    throw ConfigError("MTpCN requires a pCN proposal");
  if (target.reference.kind != ReferenceMeasure::Kind::GaussianZeroMean)
    throw ConfigError("MTpCN requires a Gaussian-reference target");
  KernelSpec s = spec;
  s.beta = BetaKind::BubblePotential;
  return mtm_core(s, target, q0, key);
}

StepResult step_lmtpcn(const KernelSpec& spec, const TargetModel& target,
                       const Vec& q0, const StepKey& key) {
  if (spec.proposal.kind != ProposalKernel::Kind::PCN)
    throw ConfigError("lMTpCN requires a pCN proposal");
  if (target.reference.kind != ReferenceMeasure::Kind::GaussianZeroMean)
    throw ConfigError("lMTpCN requires a Gaussian-reference target");
  if (!(spec.proposal.rho > 0.0))
    throw ParameterError("lMTpCN requires rho in (0,1]");
  if (spec.proposal.rho >= 1.0) {
    // pCN(1) proposals are Dirac at q0: the step cannot move.
    CloudRecord rec;
    rec.q0 = q0;
    rec.alphas = {1.0};
    rec.log_weights = {0.0};
    rec.alpha_bar = rec.alpha_bar_full = 1.0;
    rec.accepted = false;
    return {q0, std::move(rec)};
  }
  KernelSpec s = spec;
  s.beta = BetaKind::LocalPCN;
  return mtm_core(s, target, q0, key);
}

StepResult step_convolutional(const KernelSpec& spec, const TargetModel& target,
                              const Vec& q0, const StepKey& key) {
  if (spec.p < 1) throw ParameterError("convolutional: p must be >= 1");
  if (!spec.preliminary) throw ConfigError("convolutional: preliminary kernel missing");
  const ProposalKernel& Qbar = *spec.preliminary;
  const ProposalKernel& Q = spec.proposal;

  // Unbiased pairings only: a Dirac preliminary (plain Barker cloud), or
  // Qbar = Q with a kernel that is reversible for the base measure.
  const bool dirac = Qbar.kind == ProposalKernel::Kind::DiracIdentity;
  if (!dirac) {
    const bool same =
        Qbar.kind == Q.kind && Qbar.sigma == Q.sigma && Qbar.rho == Q.rho &&
        Qbar.spectrum == Q.spectrum;
    if (!same || !prior_reversible(Q, target))
      throw ConfigError("convolutional: preliminary/cloud kernel pairing is not unbiased");
  }

  CloudRecord rec;
  rec.q0 = q0;
  RngStream prelim = key.stream(Purpose::Prelim);
  Vec q_bar = Qbar.draw(q0, prelim);
  if (!dirac) rec.q_bar = q_bar;

  Vec log_w(static_cast<std::size_t>(spec.p) + 1);
  log_w[0] = log_beta(spec.beta, target, Q, q0, q0);
  for (int j = 1; j <= spec.p; ++j) {
    RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(j));
    Vec qj = Q.draw(q_bar, rng);
    log_w[static_cast<std::size_t>(j)] = log_beta(spec.beta, target, Q, qj, q0);
    rec.proposals.push_back(std::move(qj));
  }
  rec.log_weights = log_w;
  RngStream sel = key.stream(Purpose::Select);
  rec.selected = select_from_log_weights(log_w, sel.uniform(), &rec.alphas);
  rec.accepted = rec.selected != 0;
  Vec q_next = rec.selected == 0 ? q0 : rec.proposals[static_cast<std::size_t>(rec.selected - 1)];
  return {std::move(q_next), std::move(rec)};
}

StepResult step_naive_unbiased(const KernelSpec& spec, const TargetModel& target,
                               const Vec& q0, const StepKey& key) {
  if (spec.p < 1) throw ParameterError("naive: p must be >= 1");
  if (spec.p > spec.naive_cap)
    throw CostGuardError("naive: p exceeds the O(p^2) cost cap");
  if (target.reference.kind != ReferenceMeasure::Kind::Lebesgue)
    throw ConfigError("naive: requires a Lebesgue-reference target");
  if (!spec.proposal.has_log_density())
    throw ConfigError("naive: requires a proposal density");
  const ProposalKernel& Q = spec.proposal;

  CloudRecord rec;
  rec.q0 = q0;
  std::vector<const Vec*> cloud(static_cast<std::size_t>(spec.p) + 1);
  cloud[0] = &q0;
  for (int j = 1; j <= spec.p; ++j) {
    RngStream rng = key.stream(Purpose::Cloud, static_cast<std::uint64_t>(j));
    rec.proposals.push_back(Q.draw(q0, rng));
  }
  for (int j = 1; j <= spec.p; ++j)
    cloud[static_cast<std::size_t>(j)] = &rec.proposals[static_cast<std::size_t>(j - 1)];

  // Full interaction weights pi(q_j) prod_{i != j} f(q_j, q_i).
  const std::size_t n = cloud.size();
  Vec log_w(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double lw = -target.phi(*cloud[j]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      lw += Q.log_density(*cloud[j], *cloud[i]);
    }
    log_w[j] = lw;
  }
  rec.log_weights = log_w;
  RngStream sel = key.stream(Purpose::Select);
  rec.selected = select_from_log_weights(log_w, sel.uniform(), &rec.alphas);
  rec.accepted = rec.selected != 0;
  Vec q_next = rec.selected == 0 ? q0 : rec.proposals[static_cast<std::size_t>(rec.selected - 1)];
  return {std::move(q_next), std::move(rec)};
}

StepResult step_hmc_multiproposal(const KernelSpec& spec, const TargetModel& target,
                                  const Vec& q0, const StepKey& key) {
  if (spec.p < 1) throw ParameterError("hmc: p must be >= 1");
  HamiltonianSystem sys;
  sys.target = std::shared_ptr<const TargetModel>(&target, [](const TargetModel*) {});
  sys.T = spec.hmc_T;

  RngStream mom = key.stream(Purpose::Momentum);
  Vec v0 = mom.normal_vec(q0.size());
  const double h0 = sys.hamiltonian(q0, v0);

  CloudRecord rec;
  rec.q0 = q0;

  if (spec.family == Family::HMCBarker) {
    auto path = leapfrog_path(sys, q0, v0, spec.p);
    Vec log_w(static_cast<std::size_t>(spec.p) + 1);
    log_w[0] = -h0;
    for (int j = 1; j <= spec.p; ++j) {
      const auto& [qj, vj] = path[static_cast<std::size_t>(j - 1)];
      log_w[static_cast<std::size_t>(j)] = -sys.hamiltonian(qj, vj);
      rec.proposals.push_back(qj);
    }
    rec.log_weights = log_w;
    RngStream sel = key.stream(Purpose::Select);
    rec.selected = select_from_log_weights(log_w, sel.uniform(), &rec.alphas);
    rec.accepted = rec.selected != 0;
    Vec q_next =
        rec.selected == 0 ? q0 : rec.proposals[static_cast<std::size_t>(rec.selected - 1)];
    return {std::move(q_next), std::move(rec)};
  }

  if (spec.family != Family::HMCMetropolis)
    throw ConfigError("step_hmc_multiproposal: not an HMC family");

  // The Metropolis-type scheme is a mixture of single-proposal HMC kernels:
  // draw the path index first, then integrate only that far.
  const Vec a = metropolis_weights(spec);
  RngStream sel = key.stream(Purpose::Select);
  const double u = sel.uniform();
  double cum = 0.0;
  int j = 0;  // 0 means the holding branch of the mixture
  for (int l = 1; l <= spec.p; ++l) {
    cum += a[static_cast<std::size_t>(l - 1)];
    if (u < cum) {
      j = l;
      break;
    }
  }
  if (j == 0) {
    rec.alphas = {1.0};
    rec.accepted = false;
    return {q0, std::move(rec)};
  }

  // Only the drawn path point is ever integrated; evaluating the rest of
  // the cloud would buy nothing (the kernel is the mixture either way).
  const double dt = sys.T / spec.p;
  Vec qj = q0, vj = v0;
  for (int s = 0; s < j; ++s) leapfrog_step(target, dt, qj, vj);
  const double hj = sys.hamiltonian(qj, vj);
  rec.proposals.push_back(qj);
  rec.selected = 1;
  rec.alpha_bar = rec.alpha_bar_full = std::min(1.0, std::exp(h0 - hj));
  RngStream acc = key.stream(Purpose::Accept);
  rec.accepted = acc.uniform() < rec.alpha_bar;
  if (!rec.accepted) rec.selected = 0;
  Vec q_next = rec.accepted ? qj : q0;
  return {std::move(q_next), std::move(rec)};
}

StepResult step_hmc_random_time(const KernelSpec& spec, const TargetModel& target,
                                const Vec& q0, const StepKey& key) {
  HamiltonianSystem sys;
  sys.target = std::shared_ptr<const TargetModel>(&target, [](const TargetModel*) {});
  sys.T = spec.hmc_T;
  const int p_int = spec.hmc_fine_steps;
  if (p_int < 1) throw ParameterError("hmc_random_time: fine step count must be >= 1");

  RngStream mom = key.stream(Purpose::Momentum);
  Vec v0 = mom.normal_vec(q0.size());
  RngStream sel = key.stream(Purpose::Select);
  const double t = sel.uniform() * sys.T;

  // Position of the finely integrated path at the nearest node to t.
  const double dt = sys.T / p_int;
  const long steps = std::lround(t / dt);
  Vec q = q0, v = v0;
  for (long s = 0; s < steps; ++s) leapfrog_step(target, dt, q, v);

  CloudRecord rec;
  rec.q0 = q0;
  rec.proposals.push_back(q);
  rec.selected = 1;
  rec.alphas = {0.0, 1.0};
  rec.accepted = true;
  return {std::move(q), std::move(rec)};
}

StepResult step_single(const KernelSpec& spec, const TargetModel& target,
                       const Vec& q0, const StepKey& key) {
  RngStream prop_rng = key.stream(Purpose::Cloud, 1);
  RngStream acc_rng = key.stream(Purpose::Accept);

  Vec q_prop;
  double log_accept = 0.0;
  switch (spec.family) {
    case Family::SingleRWM: {
      if (target.reference.kind != ReferenceMeasure::Kind::Lebesgue)
        throw ConfigError("RWM baseline expects a Lebesgue-reference target");
      q_prop = spec.proposal.draw(q0, prop_rng);
      log_accept = target.phi(q0) - target.phi(q_prop);
      break;
    }
    case Family::SingleMALA: {
      if (spec.proposal.kind != ProposalKernel::Kind::LangevinEM)
        throw ConfigError("MALA requires a Langevin proposal");
      q_prop = spec.proposal.draw(q0, prop_rng);
      log_accept = (-target.phi(q_prop) + spec.proposal.log_density(q_prop, q0)) -
                   (-target.phi(q0) + spec.proposal.log_density(q0, q_prop));
      break;
    }
    case Family::SinglePCN: {
      if (spec.proposal.kind != ProposalKernel::Kind::PCN)
        throw ConfigError("pCN requires a pCN proposal");
      if (target.reference.kind != ReferenceMeasure::Kind::GaussianZeroMean)
        throw ConfigError("pCN requires a Gaussian-reference target");
      q_prop = spec.proposal.draw(q0, prop_rng);
      log_accept = target.phi(q0) - target.phi(q_prop);
      break;
    }
    case Family::SingleInfMALA: {
      if (spec.proposal.kind != ProposalKernel::Kind::InfMalaCN)
        throw ConfigError("inf-MALA requires an InfMalaCN proposal");
      if (target.reference.kind != ReferenceMeasure::Kind::GaussianZeroMean)
        throw ConfigError("inf-MALA requires a Gaussian-reference target");
      q_prop = spec.proposal.draw(q0, prop_rng);
      const double rho = spec.proposal.rho;
      auto branch = [&](const Vec& a, const Vec& b) {
        // -Phi(a) - (1+rho)^{-1} (<grad Phi(a), b - rho a> + (1-rho)/2 |C^{1/2} grad Phi(a)|^2)
        const Vec g = target.grad(a);
        double inner = 0.0, cnorm = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
          inner += g[i] * (b[i] - rho * a[i]);
          cnorm += spec.proposal.spectrum_entry(i) * g[i] * g[i];
        }
        return -target.phi(a) - (inner + 0.5 * (1.0 - rho) * cnorm) / (1.0 + rho);
      };
      log_accept = branch(q_prop, q0) - branch(q0, q_prop);
      break;
    }
    default:
      throw ConfigError("step_single: not a single-proposal family");
  }

  CloudRecord rec;
  rec.q0 = q0;
  rec.proposals.push_back(q_prop);
  const double alpha = std::min(1.0, std::exp(log_accept));
  rec.alphas = {1.0 - alpha, alpha};
  rec.alpha_bar = rec.alpha_bar_full = alpha;
  rec.accepted = acc_rng.uniform() < alpha;
  rec.selected = rec.accepted ? 1 : 0;
  Vec q_next = rec.accepted ? q_prop : q0;
  return {std::move(q_next), std::move(rec)};
}

StepResult step(const KernelSpec& spec, const TargetModel& target, const Vec& q0,
                const StepKey& key) {
  switch (spec.family) {
    case Family::Barker:
      return step_barker(spec, target, q0, key);
    case Family::BarkerNoHold:
      return step_barker_no_hold(spec, target, q0, key);
    case Family::MetropolisDegenerate:
      return step_metropolis_degenerate(spec, target, q0, key);
    case Family::MTM:
      return step_mtm(spec, target, q0, key);
    case Family::MTpCN:
      return step_mtpcn(spec, target, q0, key);
    case Family::LMTpCN:
      return step_lmtpcn(spec, target, q0, key);
    case Family::Convolutional:
      return step_convolutional(spec, target, q0, key);
    case Family::NaiveUnbiased:
      return step_naive_unbiased(spec, target, q0, key);
    case Family::HMCMetropolis:
    case Family::HMCBarker:
      return step_hmc_multiproposal(spec, target, q0, key);
    case Family::SingleHMCRandomT:
      return step_hmc_random_time(spec, target, q0, key);
    case Family::SingleRWM:
    case Family::SingleMALA:
    case Family::SinglePCN:
    case Family::SingleInfMALA:
      return step_single(spec, target, q0, key);
  }
  throw NumericError("unreachable");
}

bool family_exposes_cloud(Family family) {
  switch (family) {
    case Family::Barker:
    case Family::BarkerNoHold:
    case Family::Convolutional:
    case Family::NaiveUnbiased:
    case Family::HMCBarker:
      return true;
    default:
      return false;
  }
}

Family family_from_string(const std::string& s) {
  if (s == "slingshot" || s == "bubble" || s == "local" || s == "localpcn" ||
      s == "indep_mp")
    return Family::Barker;
  if (s == "barker_no_hold") return Family::BarkerNoHold;
  if (s == "metropolis_mp") return Family::MetropolisDegenerate;
  if (s == "mtm") return Family::MTM;
  if (s == "mtpcn") return Family::MTpCN;
  if (s == "lmtpcn") return Family::LMTpCN;
  if (s == "conv") return Family::Convolutional;
  if (s == "naive") return Family::NaiveUnbiased;
  if (s == "hmc_barker") return Family::HMCBarker;
  if (s == "hmc_metropolis") return Family::HMCMetropolis;
  if (s == "hmc_random_time") return Family::SingleHMCRandomT;
  if (s == "rwm") return Family::SingleRWM;
  if (s == "mala") return Family::SingleMALA;
  if (s == "pcn") return Family::SinglePCN;
  if (s == "infmala") return Family::SingleInfMALA;
  throw ConfigError("unknown kernel family id: " + s);
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::Barker: return "barker";
    case Family::BarkerNoHold: return "barker_no_hold";
    case Family::MetropolisDegenerate: return "metropolis_mp";
    case Family::MTM: return "mtm";
    case Family::MTpCN: return "mtpcn";
    case Family::LMTpCN: return "lmtpcn";
    case Family::Convolutional: return "conv";
    case Family::NaiveUnbiased: return "naive";
    case Family::HMCMetropolis: return "hmc_metropolis";
    case Family::HMCBarker: return "hmc_barker";
    case Family::SingleRWM: return "rwm";
    case Family::SingleMALA: return "mala";
    case Family::SinglePCN: return "pcn";
    case Family::SingleInfMALA: return "infmala";
    case Family::SingleHMCRandomT: return "hmc_random_time";
  }
  return "?";
}

BetaKind beta_from_string(const std::string& s) {
  if (s == "bubble" || s == "bubble_bath") return BetaKind::BubbleBath;
  if (s == "bubble_potential") return BetaKind::BubblePotential;
  if (s == "local" || s == "local_sqrt") return BetaKind::LocalSqrt;
  if (s == "localpcn" || s == "local_pcn") return BetaKind::LocalPCN;
  if (s == "slingshot") return BetaKind::Slingshot;
  throw ConfigError("unknown beta id: " + s);
}

std::string beta_to_string(BetaKind b) {
  switch (b) {
    case BetaKind::BubbleBath: return "bubble_bath";
    case BetaKind::BubblePotential: return "bubble_potential";
    case BetaKind::LocalSqrt: return "local_sqrt";
    case BetaKind::LocalPCN: return "local_pcn";
    case BetaKind::Slingshot: return "slingshot";
  }
  return "?";
}

}  // namespace madprops
