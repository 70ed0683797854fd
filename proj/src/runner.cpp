#include "madprops/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

namespace madprops {

namespace fs = std::filesystem;
using nlohmann::json;

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Vec> kernel_redraws(const KernelSpec& spec, const TargetModel& target,
                                const Vec& q0, int n, std::uint64_t seed,
                                std::uint64_t stream_tag) {
  std::vector<Vec> out(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    StepKey key{seed, static_cast<std::uint64_t>(r), stream_tag};
    out[static_cast<std::size_t>(r)] = step(spec, target, q0, key).q_next;
  }
  return out;
}

AdaptiveRunResult run_chain_adaptive(
    const std::function<KernelSpec(double)>& make_spec, double sigma0,
    const TargetModel& target, const Vec& q_init, int iterations, int burn_in,
    const AdaptPolicy& policy, const std::vector<Observable>& observables,
    std::uint64_t seed, std::uint64_t chain_id) {
  if (!(policy.target_rate > 0.0 && policy.target_rate < 1.0))
    throw ParameterError("adaptive run: target rate must be in (0,1)");
  if (iterations <= burn_in || burn_in < 0)
    throw ParameterError("adaptive run: need iterations > burn_in >= 0");

  AdaptiveRunResult res;
  ChainTrace& trace = res.trace;
  trace.seed = seed;
  trace.chain_id = chain_id;
  trace.iterations = iterations;
  trace.burn_in = burn_in;
  trace.states.reserve(static_cast<std::size_t>(iterations) + 1);
  trace.states.push_back(q_init);
  for (const auto& obs : observables) trace.observable_names.push_back(obs.name);

  double sigma = sigma0;
  KernelSpec spec = make_spec(sigma);
  const bool record_rb = !observables.empty() && family_exposes_cloud(spec.family);

  double epoch_len = policy.epoch0;
  int epoch_end = std::min(burn_in, static_cast<int>(epoch_len));
  int epoch_accepts = 0, epoch_start = 0;

  Vec q = q_init;
  for (int k = 0; k < iterations; ++k) {
    StepKey key{seed, chain_id, static_cast<std::uint64_t>(k)};
    StepResult r = step(spec, target, q, key);
    if (record_rb) {
      RbIterRow row;
      row.alphas = r.record.alphas;
      row.values.resize(observables.size());
      for (std::size_t o = 0; o < observables.size(); ++o) {
        Vec vals(r.record.alphas.size());
        vals[0] = observables[o].fn(q);
        for (std::size_t l = 1; l < vals.size(); ++l)
          vals[l] = observables[o].fn(r.record.proposals[l - 1]);
        row.values[o] = std::move(vals);
      }
      trace.rb_rows.push_back(std::move(row));
    }
    trace.accepted_flags.push_back(r.record.accepted ? 1 : 0);
    epoch_accepts += r.record.accepted ? 1 : 0;
    q = std::move(r.q_next);
    trace.states.push_back(q);

    if (k + 1 == epoch_end && k + 1 <= burn_in) {
      const double measured =
          static_cast<double>(epoch_accepts) / (epoch_end - epoch_start);
      res.epoch_sigmas.push_back(sigma);
      res.epoch_rates.push_back(measured);
      res.epoch_ends.push_back(epoch_end);
      if (k + 1 < burn_in) {
        sigma = adapt_rate(sigma, measured, policy.target_rate, policy);
        spec = make_spec(sigma);
      }
      epoch_start = epoch_end;
      epoch_accepts = 0;
      epoch_len *= policy.epoch_growth;
      epoch_end = std::min(burn_in, epoch_start + static_cast<int>(epoch_len));
    }
  }
  res.final_sigma = sigma;
  return res;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_chain_csv(const fs::path& path, const ChainTrace& trace) {
  std::ofstream out(path);
  const std::size_t d = trace.states.front().size();
  out << "iter";
  for (std::size_t i = 1; i <= d; ++i) out << ",q_" << i;
  out << ",accepted\n";
  for (int k = 1; k <= trace.iterations; ++k) {
    out << k;
    for (double x : trace.states[static_cast<std::size_t>(k)]) out << "," << fmt_double(x);
    out << "," << static_cast<int>(trace.accepted_flags[static_cast<std::size_t>(k - 1)]) << "\n";
  }
}

void write_rb_csv(const fs::path& path, const ChainTrace& trace) {
  std::ofstream out(path);
  out << "iter,observable,rb_value\n";
  for (int k = 0; k < trace.iterations; ++k) {
    const RbIterRow& row = trace.rb_rows[static_cast<std::size_t>(k)];
    for (std::size_t o = 0; o < trace.observable_names.size(); ++o) {
      double v = 0.0;
      for (std::size_t l = 0; l < row.alphas.size(); ++l)
        v += row.alphas[l] * row.values[o][l];
      out << (k + 1) << "," << trace.observable_names[o] << "," << fmt_double(v) << "\n";
    }
  }
}

Vec default_init(const ExperimentConfig& cfg, const TargetModel& target) {
  if (cfg.q_init) {
    if (static_cast<int>(cfg.q_init->size()) != target.dim)
      throw ConfigError("q_init dimension does not match the target");
    return *cfg.q_init;
  }
  return Vec(static_cast<std::size_t>(target.dim), 0.0);
}

KernelSpec make_spec_for(const ExperimentConfig& cfg,
                         const std::shared_ptr<TargetModel>& target,
                         std::optional<double> sigma_override) {
  json kj = cfg.kernel_json;
  if (cfg.scale_star) kj["proposal"] = {{"id", "rw_adaptive_star"},
                                        {"sigma_pi", kj.value("sigma_pi", 1.0)}};
  if (cfg.scale_fixed && !sigma_override) sigma_override = *cfg.scale_fixed;
  return build_kernel(kj, target, sigma_override);
}

struct ChainStats {
  Vec mean;     // per coordinate
  Vec m2;       // per coordinate raw second moment
  Vec ess_vals; // per coordinate
  double acceptance = 0.0;
};

ChainStats chain_stats(const ChainTrace& trace) {
  ChainStats s;
  const std::size_t d = trace.states.front().size();
  const int n = trace.iterations - trace.burn_in;
  s.mean.assign(d, 0.0);
  s.m2.assign(d, 0.0);
  for (int k = trace.burn_in + 1; k <= trace.iterations; ++k) {
    const Vec& q = trace.states[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < d; ++i) {
      s.mean[i] += q[i];
      s.m2[i] += q[i] * q[i];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    s.mean[i] /= n;
    s.m2[i] /= n;
  }
  Vec series(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < d; ++i) {
    for (int k = 0; k < n; ++k)
      series[static_cast<std::size_t>(k)] =
          trace.states[static_cast<std::size_t>(trace.burn_in + 1 + k)][i];
    s.ess_vals.push_back(ess(series).ess);
  }
  double acc = 0.0;
  for (int k = trace.burn_in; k < trace.iterations; ++k)
    acc += trace.accepted_flags[static_cast<std::size_t>(k)];
  s.acceptance = acc / n;
  return s;
}

double mixture_moment(const json& target_json, int k) {
  // Raw moment E[x^k] of a 1-D Gaussian mixture, k <= 4.
  Vec w;
  for (const auto& x : target_json.at("weights")) w.push_back(x.get<double>());
  Vec c;
  for (const auto& x : target_json.at("centers"))
    c.push_back(x.is_array() ? x[0].get<double>() : x.get<double>());
  const double tau = target_json.at("tau").get<double>();
  double total = 0.0;
  for (double x : w) total += x;
  double m = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double mu = c[i], v = tau * tau;
    double comp = 0.0;
    switch (k) {
      case 1: comp = mu; break;
      case 2: comp = mu * mu + v; break;
      case 3: comp = mu * mu * mu + 3.0 * mu * v; break;
      case 4: comp = mu * mu * mu * mu + 6.0 * mu * mu * v + 3.0 * v * v; break;
      default: throw ParameterError("mixture moments supported up to k = 4");
    }
    m += (w[i] / total) * comp;
  }
  return m;
}

}  // namespace

std::optional<std::pair<Vec, Vec>> analytic_moments(const TargetModel& target,
                                                    const json& target_json) {
  const std::string id = target_json.value("id", target.id);
  if (id == "gaussian") {
    const double s = target_json.value("sigma", 1.0);
    Vec mean(static_cast<std::size_t>(target.dim), 0.0);
    Vec m2(static_cast<std::size_t>(target.dim), s * s);
    return std::make_pair(mean, m2);
  }
  if (id == "posterior") {
    Vec spectrum, y;
    for (const auto& x : target_json.at("spectrum")) spectrum.push_back(x.get<double>());
    for (const auto& x : target_json.at("y")) y.push_back(x.get<double>());
    Vec mean, var;
    gaussian_posterior_moments(spectrum, y, target_json.value("sigma_noise", 1.0), mean, var);
    Vec m2(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) m2[i] = mean[i] * mean[i] + var[i];
    return std::make_pair(mean, m2);
  }
  if (id == "gaussian_ref") {
    Vec spectrum;
    for (const auto& x : target_json.at("spectrum")) spectrum.push_back(x.get<double>());
    Vec mean(spectrum.size(), 0.0);
    return std::make_pair(mean, spectrum);
  }
  if (id == "mixture" && target.dim == 1) {
    Vec mean{mixture_moment(target_json, 1)};
    Vec m2{mixture_moment(target_json, 2)};
    return std::make_pair(mean, m2);
  }
  return std::nullopt;
}

GridOracle banana_oracle(const TargetModel& target, const json& target_json,
                         const std::string& cache_dir) {
  // Box from the potential level sets at the paper-scale parameters.
  Box2D box{-40.0, 40.0, -60.0, 20.0};
  if (target_json.value("a", 0.005) >= 0.4) box = {-6.0, 6.0, -4.0, 5.0};
  return grid_oracle_build_cached(target, box, 256, 1e-4, cache_dir);
}

void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir, int workers) {
  const auto t_start = std::chrono::steady_clock::now();
  auto target = build_target(cfg.target_json);
  std::vector<Observable> observables;
  for (const auto& id : cfg.observables)
    observables.push_back(build_observable(id, target->dim));
  const Vec q0 = default_init(cfg, *target);
  const int burn_in = cfg.effective_burn_in();
  if (cfg.iterations <= burn_in)
    throw ConfigError("run: iterations must exceed burn_in");

  fs::create_directories(out_dir);
  std::vector<ChainTrace> traces(static_cast<std::size_t>(cfg.replicates));
  parallel_for(cfg.replicates, workers, [&](int r) {
    if (cfg.adapt) {
      auto make_spec = [&](double sigma) { return make_spec_for(cfg, target, sigma); };
      const double sigma0 = cfg.scale_fixed.value_or(
          cfg.kernel_json.value("sigma", 2.4 / std::sqrt(static_cast<double>(target->dim))));
      traces[static_cast<std::size_t>(r)] =
          run_chain_adaptive(make_spec, sigma0, *target, q0, cfg.iterations, burn_in,
                             *cfg.adapt, observables, cfg.seed,
                             static_cast<std::uint64_t>(r))
              .trace;
    } else {
      KernelSpec spec = make_spec_for(cfg, target, std::nullopt);
      traces[static_cast<std::size_t>(r)] =
          run_chain(spec, *target, q0, cfg.iterations, burn_in, observables, cfg.seed,
                    static_cast<std::uint64_t>(r));
    }
  });

  std::vector<ChainStats> stats(traces.size());
  parallel_for(cfg.replicates, workers,
               [&](int r) { stats[static_cast<std::size_t>(r)] = chain_stats(traces[static_cast<std::size_t>(r)]); });

  for (int r = 0; r < cfg.replicates; ++r) {
    char name[64];
    std::snprintf(name, sizeof(name), "chain_%03d.csv", r);
    write_chain_csv(fs::path(out_dir) / name, traces[static_cast<std::size_t>(r)]);
    if (traces[static_cast<std::size_t>(r)].has_rb()) {
      std::snprintf(name, sizeof(name), "rb_%03d.csv", r);
      write_rb_csv(fs::path(out_dir) / name, traces[static_cast<std::size_t>(r)]);
    }
  }

  // Replicate-aggregated summary.
  const std::size_t d = static_cast<std::size_t>(target->dim);
  Vec mean(d, 0.0), se(d, 0.0);
  double ess_sum = 0.0, ess_min = std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (const auto& s : stats) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += s.mean[i];
    for (double e : s.ess_vals) {
      ess_sum += e;
      ess_min = std::min(ess_min, e);
    }
    acc += s.acceptance;
  }
  for (std::size_t i = 0; i < d; ++i) mean[i] /= cfg.replicates;
  acc /= cfg.replicates;
  if (cfg.replicates > 1) {
    for (std::size_t i = 0; i < d; ++i) {
      double ss = 0.0;
      for (const auto& s : stats) ss += (s.mean[i] - mean[i]) * (s.mean[i] - mean[i]);
      se[i] = std::sqrt(ss / (cfg.replicates - 1) / cfg.replicates);
    }
  } else {
    // Single chain: ESS-discounted standard error per coordinate.
    const auto& tr = traces.front();
    const int n = tr.iterations - tr.burn_in;
    for (std::size_t i = 0; i < d; ++i) {
      const double var = stats.front().m2[i] - stats.front().mean[i] * stats.front().mean[i];
      se[i] = std::sqrt(std::max(var, 0.0) / std::max(stats.front().ess_vals[i], 1.0));
      (void)n;
    }
  }

  json summary;
  summary["mean"] = mean;
  summary["se"] = se;
  summary["ess_mean"] = ess_sum / (cfg.replicates * static_cast<double>(d));
  summary["ess_min"] = ess_min;
  summary["acceptance_rate"] = acc;
  summary["iterations"] = cfg.iterations;
  summary["burn_in"] = burn_in;
  summary["replicates"] = cfg.replicates;
  summary["seed"] = cfg.seed;

  if (auto mom = analytic_moments(*target, cfg.target_json)) {
    double mse1 = 0.0, mse2 = 0.0;
    for (const auto& s : stats) {
      for (std::size_t i = 0; i < d; ++i) {
        mse1 += (s.mean[i] - mom->first[i]) * (s.mean[i] - mom->first[i]);
        mse2 += (s.m2[i] - mom->second[i]) * (s.m2[i] - mom->second[i]);
      }
    }
    summary["mse_m1"] = mse1 / (cfg.replicates * static_cast<double>(d));
    summary["mse_m2"] = mse2 / (cfg.replicates * static_cast<double>(d));
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  summary["wall_seconds"] = wall;
  summary["ess_per_sec"] = summary["ess_mean"].get<double>() / std::max(wall, 1e-9);

  std::ofstream out(fs::path(out_dir) / "summary.json");
  out << summary.dump(2) << "\n";
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int workers) {
  auto target = build_target(cfg.target_json);
  if (cfg.p_list.empty() && cfg.sigma_list.empty())
    throw ParameterError("sweep: need a nonempty p_list and/or sigma_list");
  std::vector<int> ps = cfg.p_list.empty()
                            ? std::vector<int>{cfg.kernel_json.value("p", 1)}
                            : cfg.p_list;
  Vec sigmas = cfg.sigma_list.empty() ? Vec{-1.0} : cfg.sigma_list;  // -1: config scale
  const Vec q0 = default_init(cfg, *target);
  const std::string mode = cfg.kernel_json.value("mode", std::string("chain"));

  std::optional<GridOracle> oracle;
  if (cfg.target_json.value("id", std::string()) == "banana")
    oracle = banana_oracle(*target, cfg.target_json, out_dir);
  const auto mom = analytic_moments(*target, cfg.target_json);

  struct Row {
    int p;
    double sigma;
    int replicate;
    std::string metric;
    double value;
  };
  const int n_points = static_cast<int>(ps.size() * sigmas.size());
  std::vector<std::vector<Row>> rows(static_cast<std::size_t>(n_points));

  parallel_for(n_points, workers, [&](int idx) {
    const int p = ps[static_cast<std::size_t>(idx) / sigmas.size()];
    const double sigma = sigmas[static_cast<std::size_t>(idx) % sigmas.size()];
    std::optional<double> sigma_override;
    if (sigma > 0.0) sigma_override = sigma;
    json kj = cfg.kernel_json;
    kj["p"] = p;
    KernelSpec spec = build_kernel(kj, target, sigma_override);
    auto& out_rows = rows[static_cast<std::size_t>(idx)];

    if (mode == "kernel_redraws") {
      auto draws = kernel_redraws(spec, *target, q0, cfg.redraws, cfg.seed,
                                  static_cast<std::uint64_t>(idx));
      if (oracle)
        out_rows.push_back({p, sigma, 0, "loss", banana_loss(draws, *oracle)});
      if (spec.beta == BetaKind::Slingshot && spec.proposal.has_log_density()) {
        const int wr = std::min(cfg.redraws, 512);
        auto [mean_bar, var_bar] = weight_mean_variance(
            *target, spec.proposal, q0, p, wr, mix_key(cfg.seed, static_cast<std::uint64_t>(idx)));
        out_rows.push_back({p, sigma, 0, "mean_alpha_bar", mean_bar});
        out_rows.push_back({p, sigma, 0, "var_alpha_bar", var_bar});
      }
      return;
    }

    for (int r = 0; r < cfg.replicates; ++r) {
      ChainTrace trace = run_chain(spec, *target, q0, cfg.iterations,
                                   cfg.effective_burn_in(), {}, cfg.seed,
                                   mix_key(static_cast<std::uint64_t>(idx),
                                           static_cast<std::uint64_t>(r)));
      ChainStats st = chain_stats(trace);
      out_rows.push_back({p, sigma, r, "acceptance_rate", st.acceptance});
      out_rows.push_back({p, sigma, r, "ess_q1", st.ess_vals[0]});
      if (oracle) {
        std::vector<Vec> samples(trace.states.begin() + trace.burn_in + 1, trace.states.end());
        out_rows.push_back({p, sigma, r, "loss", banana_loss(samples, *oracle)});
      }
      if (mom) {
        double mse1 = 0.0, mse2 = 0.0;
        for (std::size_t i = 0; i < st.mean.size(); ++i) {
          mse1 += (st.mean[i] - mom->first[i]) * (st.mean[i] - mom->first[i]);
          mse2 += (st.m2[i] - mom->second[i]) * (st.m2[i] - mom->second[i]);
        }
        out_rows.push_back({p, sigma, r, "mse_m1", mse1 / static_cast<double>(st.mean.size())});
        out_rows.push_back({p, sigma, r, "mse_m2", mse2 / static_cast<double>(st.mean.size())});
      }
    }
  });

  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "sweep.csv");
  out << "p,sigma,replicate,metric,value\n";
  for (const auto& point : rows)
    for (const auto& r : point)
      out << r.p << "," << fmt_double(r.sigma) << "," << r.replicate << "," << r.metric
          << "," << fmt_double(r.value) << "\n";
}

void cmd_tune(const ExperimentConfig& cfg, const std::string& out_dir, int workers) {
  auto target = build_target(cfg.target_json);
  Vec rates = cfg.target_rates;
  if (rates.empty() && cfg.adapt) rates.push_back(cfg.adapt->target_rate);
  if (rates.empty()) throw ParameterError("tune: no target rates given");
  for (double r : rates)
    if (!(r > 0.0 && r < 1.0)) throw ParameterError("tune: target rates must be in (0,1)");
  std::vector<int> ps = cfg.p_list.empty()
                            ? std::vector<int>{cfg.kernel_json.value("p", 1)}
                            : cfg.p_list;
  const Vec q0 = default_init(cfg, *target);
  AdaptPolicy base = cfg.adapt.value_or(AdaptPolicy{});
  const int burn_in = cfg.effective_burn_in();

  std::optional<GridOracle> oracle;
  if (cfg.target_json.value("id", std::string()) == "banana")
    oracle = banana_oracle(*target, cfg.target_json, out_dir);
  const bool mixture_loss =
      cfg.target_json.value("id", std::string()) == "mixture" && target->dim == 1;

  struct Point {
    double rate;
    int p;
    AdaptiveRunResult res;
    double final_acc = 0.0;
    double loss = std::numeric_limits<double>::quiet_NaN();
  };
  const int n_points = static_cast<int>(rates.size() * ps.size());
  std::vector<Point> points(static_cast<std::size_t>(n_points));

  parallel_for(n_points, workers, [&](int idx) {
    Point& pt = points[static_cast<std::size_t>(idx)];
    pt.rate = rates[static_cast<std::size_t>(idx) / ps.size()];
    pt.p = ps[static_cast<std::size_t>(idx) % ps.size()];
    AdaptPolicy policy = base;
    policy.target_rate = pt.rate;
    json kj = cfg.kernel_json;
    kj["p"] = pt.p;
    auto make_spec = [&](double sigma) {
      return build_kernel(kj, target, sigma);
    };
    const double sigma0 = cfg.scale_fixed.value_or(kj.value("sigma", 1.0));
    pt.res = run_chain_adaptive(make_spec, sigma0, *target, q0, cfg.iterations, burn_in,
                                policy, {}, cfg.seed, static_cast<std::uint64_t>(idx));
    const ChainTrace& tr = pt.res.trace;
    double acc = 0.0;
    for (int k = tr.burn_in; k < tr.iterations; ++k)
      acc += tr.accepted_flags[static_cast<std::size_t>(k)];
    pt.final_acc = acc / (tr.iterations - tr.burn_in);
    std::vector<Vec> samples(tr.states.begin() + tr.burn_in + 1, tr.states.end());
    if (oracle) {
      pt.loss = banana_loss(samples, *oracle);
    } else if (mixture_loss) {
      // Relative errors of the first, second and fourth moments.
      double m1 = 0.0, m2 = 0.0, m4 = 0.0;
      for (const auto& s : samples) {
        m1 += s[0];
        m2 += s[0] * s[0];
        m4 += s[0] * s[0] * s[0] * s[0];
      }
      const double n = static_cast<double>(samples.size());
      m1 /= n;
      m2 /= n;
      m4 /= n;
      pt.loss = std::fabs(m1 - mixture_moment(cfg.target_json, 1)) /
                    std::fabs(mixture_moment(cfg.target_json, 1)) +
                std::fabs(m2 - mixture_moment(cfg.target_json, 2)) /
                    mixture_moment(cfg.target_json, 2) +
                std::fabs(m4 - mixture_moment(cfg.target_json, 4)) /
                    mixture_moment(cfg.target_json, 4);
    }
  });

  fs::create_directories(out_dir);
  std::ofstream trace_out(fs::path(out_dir) / "tune_trace.csv");
  trace_out << "target_rate,p,epoch,end_iter,sigma,measured_rate\n";
  for (const auto& pt : points)
    for (std::size_t e = 0; e < pt.res.epoch_sigmas.size(); ++e)
      trace_out << fmt_double(pt.rate) << "," << pt.p << "," << e << ","
                << pt.res.epoch_ends[e] << "," << fmt_double(pt.res.epoch_sigmas[e]) << ","
                << fmt_double(pt.res.epoch_rates[e]) << "\n";

  std::ofstream final_out(fs::path(out_dir) / "tune_final.csv");
  final_out << "target_rate,p,sigma,acceptance_rate,loss\n";
  for (const auto& pt : points)
    final_out << fmt_double(pt.rate) << "," << pt.p << "," << fmt_double(pt.res.final_sigma)
              << "," << fmt_double(pt.final_acc) << "," << fmt_double(pt.loss) << "\n";
}

void cmd_limitcheck(const ExperimentConfig& cfg, const std::string& out_dir, int workers) {
  auto target = build_target(cfg.target_json);
  if (cfg.p_list.size() < 2)
    throw ParameterError("limitcheck: need at least two proposal counts for a slope");
  const Vec q0 = default_init(cfg, *target);
  const int n_ref = cfg.reference_draws > 0 ? cfg.reference_draws : cfg.redraws;

  // Reference sample from the stated limit law.
  Vec ref(static_cast<std::size_t>(n_ref));
  {
    LimitKernel lk;
    lk.target = target;
    if (cfg.reference == "exact" || cfg.reference == "slingshot_limit") {
      lk.kind = LimitKernel::Kind::SlingshotLimit;
    } else if (cfg.reference == "bubble_limit") {
      lk.kind = LimitKernel::Kind::BubbleBathLimit;
      lk.proposal = build_kernel(cfg.kernel_json, target).proposal;
      lk.log_sup_density = 0.0;  // exp(-Phi) <= 1 for the built-in targets
    } else if (cfg.reference == "tjelmeland_limit") {
      lk.kind = LimitKernel::Kind::TjelmelandLimit;
      lk.proposal = build_kernel(cfg.kernel_json, target).proposal;
      lk.log_sup_density = 0.0;
    } else {
      throw ConfigError("limitcheck: unknown reference " + cfg.reference);
    }
    std::vector<Vec> draws(static_cast<std::size_t>(n_ref));
    parallel_for(n_ref, workers, [&](int i) {
      StepKey key{mix_key(cfg.seed, 0x5ef5ULL), static_cast<std::uint64_t>(i), 0};
      draws[static_cast<std::size_t>(i)] = draw_limit(lk, q0, key);
    });
    for (int i = 0; i < n_ref; ++i) ref[static_cast<std::size_t>(i)] = draws[static_cast<std::size_t>(i)][0];
  }

  const int np = static_cast<int>(cfg.p_list.size());
  Vec distances(static_cast<std::size_t>(np));
  parallel_for(np, workers, [&](int ip) {
    json kj = cfg.kernel_json;
    kj["p"] = cfg.p_list[static_cast<std::size_t>(ip)];
    KernelSpec spec = build_kernel(kj, target);
    auto draws = kernel_redraws(spec, *target, q0, cfg.redraws, cfg.seed,
                                static_cast<std::uint64_t>(ip) + 1);
    Vec marg(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) marg[i] = draws[i][0];
    distances[static_cast<std::size_t>(ip)] =
        cfg.distance == "ks" ? ks_distance(marg, ref) : tv_estimate(marg, ref, cfg.bins);
  });

  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "limitcheck.csv");
  out << "p,distance\n";
  for (int i = 0; i < np; ++i)
    out << cfg.p_list[static_cast<std::size_t>(i)] << ","
        << fmt_double(distances[static_cast<std::size_t>(i)]) << "\n";

  Vec pv(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i) pv[static_cast<std::size_t>(i)] = cfg.p_list[static_cast<std::size_t>(i)];
  json j;
  j["slope"] = loglog_slope(pv, distances);
  j["distance"] = cfg.distance;
  std::ofstream js(fs::path(out_dir) / "limitcheck.json");
  js << j.dump(2) << "\n";
}

}  // namespace madprops
