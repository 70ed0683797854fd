#include "madprops/config.hpp"

#include <cmath>
#include <fstream>

namespace madprops {

using nlohmann::json;

namespace {

Vec get_vec(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers");
  Vec v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config_json(j);
}

ExperimentConfig parse_config_json(const json& j) {
  ExperimentConfig cfg;
  try {
    cfg.target_json = j.at("target");
    cfg.kernel_json = j.at("kernel");
    cfg.iterations = j.value("iterations", 1000);
    cfg.burn_in = j.value("burn_in", -1);
    cfg.replicates = j.value("replicates", 1);
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("observables"))
      cfg.observables = j.at("observables").get<std::vector<std::string>>();
    if (j.contains("q_init")) cfg.q_init = get_vec(j.at("q_init"));
    if (j.contains("adapt")) {
      AdaptPolicy p;
      const auto& a = j.at("adapt");
      p.target_rate = a.value("target_rate", 0.5);
      p.epoch0 = a.value("epoch0", 100);
      p.epoch_growth = a.value("growth", 2.0);
      cfg.adapt = p;
    }
    if (j.contains("scale")) {
      const std::string s = j.at("scale").get<std::string>();
      if (s == "star") {
        cfg.scale_star = true;
      } else if (s.rfind("fixed:", 0) == 0) {
        cfg.scale_fixed = std::stod(s.substr(6));
      } else {
        throw ConfigError("scale must be 'star' or 'fixed:<sigma>'");
      }
    }
    if (j.contains("p_list")) cfg.p_list = j.at("p_list").get<std::vector<int>>();
    if (j.contains("sigma_list")) cfg.sigma_list = get_vec(j.at("sigma_list"));
    if (j.contains("target_rates")) cfg.target_rates = get_vec(j.at("target_rates"));
    cfg.redraws = j.value("redraws", 10000);
    cfg.reference_draws = j.value("reference_draws", 0);
    cfg.distance = j.value("distance", std::string("tv"));
    cfg.bins = j.value("bins", 64);
    cfg.reference = j.value("reference", std::string("exact"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  return cfg;
}

std::shared_ptr<TargetModel> build_target(const json& j) {
  const std::string id = j.at("id").get<std::string>();
  try {
    if (id == "gaussian") {
      return std::make_shared<TargetModel>(
          gaussian_target(j.value("d", 1), j.value("sigma", 1.0)));
    }
    if (id == "banana") {
      BananaParams p;
      p.a = j.value("a", 0.005);
      p.b = j.value("b", 100.0);
      p.c = j.value("c", 0.05);
      p.B = j.value("B", 0.1);
      return std::make_shared<TargetModel>(banana_target(p));
    }
    if (id == "mixture") {
      Vec weights = get_vec(j.at("weights"));
      std::vector<Vec> centers;
      for (const auto& c : j.at("centers"))
        centers.push_back(c.is_array() ? get_vec(c) : Vec{c.get<double>()});
      return std::make_shared<TargetModel>(
          gaussian_mixture_target(weights, centers, j.at("tau").get<double>()));
    }
    if (id == "gaussian_ref") {
      return std::make_shared<TargetModel>(
          gaussian_reference_target(get_vec(j.at("spectrum"))));
    }
    if (id == "posterior") {
      return std::make_shared<TargetModel>(gaussian_posterior_target(
          get_vec(j.at("spectrum")), get_vec(j.at("y")), j.value("sigma_noise", 1.0)));
    }
  } catch (const json::exception& e) {
    throw ConfigError("target '" + id + "': " + e.what());
  }
  throw ConfigError("unknown target id: " + id);
}

namespace {

ProposalKernel build_proposal(const json& j,
                              const std::shared_ptr<TargetModel>& target,
                              std::optional<double> sigma_override) {
  const std::string id = j.at("id").get<std::string>();
  const int d = target->dim;
  auto spectrum_of = [&](const json& jj) -> Vec {
    if (jj.contains("spectrum")) return get_vec(jj.at("spectrum"));
    if (target->reference.kind == ReferenceMeasure::Kind::GaussianZeroMean)
      return target->reference.covariance_spectrum;
    return {};
  };
  if (id == "rw") {
    double sigma = j.value("sigma", 2.4 / std::sqrt(static_cast<double>(d)));
    if (sigma_override) sigma = *sigma_override;
    return ProposalKernel::gaussian_rw(d, sigma, spectrum_of(j));
  }
  if (id == "pcn") {
    return ProposalKernel::pcn(d, j.value("rho", 0.5), spectrum_of(j));
  }
  if (id == "indep") {
    Vec mean = j.contains("mean") ? get_vec(j.at("mean")) : Vec(static_cast<std::size_t>(d), 0.0);
    double sigma = j.value("sigma", 1.0);
    if (sigma_override) sigma = *sigma_override;
    return ProposalKernel::state_independent(std::move(mean), sigma);
  }
  if (id == "rw_adaptive_star") {
    const double sigma_pi = j.value("sigma_pi", 1.0);
    return ProposalKernel::state_dependent_rw(
        d, [sigma_pi](const Vec& q) { return sigma_star(q, sigma_pi); });
  }
  if (id == "mala") {
    double sigma = j.value("sigma", 0.5);
    if (sigma_override) sigma = *sigma_override;
    return ProposalKernel::langevin_em(target, sigma);
  }
  if (id == "infmala") {
    return ProposalKernel::inf_mala_cn(target, j.value("rho", 0.5), spectrum_of(j));
  }
  if (id == "dirac") {
    return ProposalKernel::dirac(d);
  }
  throw ConfigError("unknown proposal id: " + id);
}

}  // namespace

KernelSpec build_kernel(const json& j, const std::shared_ptr<TargetModel>& target,
                        std::optional<double> sigma_override) {
  const std::string id = j.at("id").get<std::string>();
  KernelSpec spec;
  spec.family = family_from_string(id);
  spec.p = j.value("p", 1);
  spec.naive_cap = j.value("naive_cap", 512);

  // Method-defining weight choices for the ids that imply one.
  if (id == "slingshot" || id == "indep_mp") spec.beta = BetaKind::Slingshot;
  else if (id == "bubble") spec.beta = BetaKind::BubbleBath;
  else if (id == "local") spec.beta = BetaKind::LocalSqrt;
  else if (id == "localpcn") spec.beta = BetaKind::LocalPCN;
  else if (j.contains("beta")) spec.beta = beta_from_string(j.at("beta").get<std::string>());
  else if (id == "mtm" || id == "conv" || id == "barker_no_hold" || id == "metropolis_mp")
    spec.beta = target->reference.kind == ReferenceMeasure::Kind::GaussianZeroMean
                    ? BetaKind::BubblePotential
                    : BetaKind::BubbleBath;

  json prop = j.value("proposal", json::object());
  if (!prop.contains("id")) {
    // Defaults per method family.
    if (id == "slingshot" || id == "local" || id == "bubble" || id == "mtm" ||
        id == "naive" || id == "conv" || id == "barker_no_hold" ||
        id == "metropolis_mp" || id == "rwm")
      prop["id"] = "rw";
    else if (id == "indep_mp")
      prop["id"] = "indep";
    else if (id == "mtpcn" || id == "lmtpcn" || id == "localpcn" || id == "pcn")
      prop["id"] = "pcn";
    else if (id == "mala")
      prop["id"] = "mala";
    else if (id == "infmala")
      prop["id"] = "infmala";
    else
      prop["id"] = "rw";
  }
  if (j.contains("sigma") && !prop.contains("sigma")) prop["sigma"] = j.at("sigma");
  if (j.contains("rho") && !prop.contains("rho")) prop["rho"] = j.at("rho");
  spec.proposal = build_proposal(prop, target, sigma_override);

  if (spec.family == Family::Convolutional) {
    json prelim = j.value("preliminary", json::object());
    if (!prelim.contains("id")) prelim = prop;  // Qbar = Q by default
    spec.preliminary = build_proposal(prelim, target, sigma_override);
  }

  if (j.contains("weights")) spec.mh_weights = get_vec(j.at("weights"));
  spec.hmc_T = j.value("T", 1.0);
  spec.hmc_fine_steps = j.value("fine_steps", 4096);
  return spec;
}

Observable build_observable(const std::string& id, int dim) {
  if (id == "norm") return {id, [](const Vec& q) { return norm2(q); }};
  if (id == "norm2") return {id, [](const Vec& q) { return norm2sq(q); }};
  if (id.size() > 1 && id[0] == 'q') {
    const int k = std::stoi(id.substr(1));
    if (k < 1 || k > dim) throw ConfigError("observable coordinate out of range: " + id);
    return {id, [k](const Vec& q) { return q[static_cast<std::size_t>(k - 1)]; }};
  }
  throw ConfigError("unknown observable id: " + id);
}

}  // namespace madprops
