#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "madprops/adaptation.hpp"
#include "madprops/chain.hpp"
#include "madprops/diagnostics.hpp"
#include "madprops/kernels.hpp"
#include "madprops/limit_oracles.hpp"
#include "madprops/runner.hpp"

namespace py = pybind11;
using namespace madprops;

namespace {

std::shared_ptr<TargetModel> target_from_json_str(const std::string& s) {
  return build_target(nlohmann::json::parse(s));
}

KernelSpec kernel_from_json_str(const std::string& s,
                                const std::shared_ptr<TargetModel>& target) {
  return build_kernel(nlohmann::json::parse(s), target);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "multiproposal MCMC toolkit";

  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UnsupportedOperationError>(m, "UnsupportedOperationError",
                                                    PyExc_RuntimeError);
  py::register_exception<DegenerateWeightsError>(m, "DegenerateWeightsError",
                                                 PyExc_RuntimeError);

  py::class_<TargetModel, std::shared_ptr<TargetModel>>(m, "TargetModel")
      .def_readonly("dim", &TargetModel::dim)
      .def_readonly("id", &TargetModel::id)
      .def("potential", [](const TargetModel& t, const Vec& q) { return t.phi(q); })
      .def("grad_potential", [](const TargetModel& t, const Vec& q) { return t.grad(q); })
      .def("exact_draw", [](const TargetModel& t, std::uint64_t seed, std::uint64_t index) {
        RngStream rng(mix_key(seed, index));
        return t.exact_draw(rng);
      });

  m.def("gaussian_target", [](int d, double sigma) {
    return std::make_shared<TargetModel>(gaussian_target(d, sigma));
  });
  m.def("banana_target", [](double a, double b, double c, double B) {
    return std::make_shared<TargetModel>(banana_target({a, b, c, B}));
  }, py::arg("a") = 0.005, py::arg("b") = 100.0, py::arg("c") = 0.05, py::arg("B") = 0.1);
  m.def("gaussian_mixture_target",
        [](const Vec& w, const std::vector<Vec>& centers, double tau) {
          return std::make_shared<TargetModel>(gaussian_mixture_target(w, centers, tau));
        });
  m.def("product_normal_target", [](int d) {
    return std::make_shared<TargetModel>(product_normal_target(d));
  });
  m.def("gaussian_reference_target", [](const Vec& spectrum) {
    return std::make_shared<TargetModel>(gaussian_reference_target(spectrum));
  });
  m.def("gaussian_posterior_target", [](const Vec& spectrum, const Vec& y, double sn) {
    return std::make_shared<TargetModel>(gaussian_posterior_target(spectrum, y, sn));
  });
  m.def("target_from_json", &target_from_json_str);

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_readwrite("p", &KernelSpec::p)
      .def_readwrite("hmc_T", &KernelSpec::hmc_T);
  m.def("kernel_from_json", &kernel_from_json_str);

  py::class_<CloudRecord>(m, "CloudRecord")
      .def_readonly("q0", &CloudRecord::q0)
      .def_readonly("proposals", &CloudRecord::proposals)
      .def_readonly("log_weights", &CloudRecord::log_weights)
      .def_readonly("alphas", &CloudRecord::alphas)
      .def_readonly("selected", &CloudRecord::selected)
      .def_readonly("alpha_bar", &CloudRecord::alpha_bar)
      .def_readonly("accepted", &CloudRecord::accepted);

  m.def("step",
        [](const KernelSpec& spec, const std::shared_ptr<TargetModel>& target, const Vec& q0,
           std::uint64_t seed, std::uint64_t chain, std::uint64_t iter) {
          StepResult r = step(spec, *target, q0, StepKey{seed, chain, iter});
          return py::make_tuple(r.q_next, r.record);
        },
        py::arg("spec"), py::arg("target"), py::arg("q0"), py::arg("seed"),
        py::arg("chain") = 0, py::arg("iter") = 0);

  py::class_<ChainTrace>(m, "ChainTrace")
      .def_readonly("states", &ChainTrace::states)
      .def_readonly("iterations", &ChainTrace::iterations)
      .def_readonly("burn_in", &ChainTrace::burn_in)
      .def("acceptance_rate", &ChainTrace::acceptance_rate);

  m.def("run_chain",
        [](const KernelSpec& spec, const std::shared_ptr<TargetModel>& target,
           const Vec& q_init, int iterations, int burn_in,
           const std::vector<std::string>& observables, std::uint64_t seed,
           std::uint64_t chain_id) {
          std::vector<Observable> obs;
          for (const auto& id : observables) obs.push_back(build_observable(id, target->dim));
          return run_chain(spec, *target, q_init, iterations, burn_in, obs, seed, chain_id);
        },
        py::arg("spec"), py::arg("target"), py::arg("q_init"), py::arg("iterations"),
        py::arg("burn_in") = 0, py::arg("observables") = std::vector<std::string>{},
        py::arg("seed") = 0, py::arg("chain_id") = 0);

  m.def("estimate_rb", [](const ChainTrace& trace, const std::string& name) {
    return estimate_rb(trace, name);
  });
  m.def("estimate_standard",
        [](const ChainTrace& trace, const std::string& name, int dim) {
          return estimate_standard(trace, build_observable(name, dim));
        });

  m.def("sigma_star", py::overload_cast<const Vec&, double>(&sigma_star));
  m.def("sigma_star_norm", &sigma_star_norm);
  m.def("adapt_rate", [](double sigma, double measured, double target) {
    return adapt_rate(sigma, measured, target, AdaptPolicy{});
  });

  m.def("ess", [](const Vec& series) {
    auto r = ess(series);
    return py::make_tuple(r.ess, r.zero_variance, r.capped);
  });
  m.def("ks_distance", py::overload_cast<const Vec&, const Vec&>(&ks_distance));
  m.def("tv_estimate", &tv_estimate);
  m.def("order_stat_mse", &order_stat_mse);
  m.def("loglog_slope", &loglog_slope);

  m.def("kernel_redraws",
        [](const KernelSpec& spec, const std::shared_ptr<TargetModel>& target, const Vec& q0,
           int n, std::uint64_t seed) { return kernel_redraws(spec, *target, q0, n, seed); });

  m.def("weight_mean_variance",
        [](const std::shared_ptr<TargetModel>& target, const std::string& kernel_json,
           const Vec& q0, int p, int redraws, std::uint64_t seed) {
          KernelSpec spec = kernel_from_json_str(kernel_json, target);
          return weight_mean_variance(*target, spec.proposal, q0, p, redraws, seed);
        });

  m.def("draw_limit_slingshot",
        [](const std::shared_ptr<TargetModel>& target, const Vec& q0, int n,
           std::uint64_t seed) {
          LimitKernel lk;
          lk.kind = LimitKernel::Kind::SlingshotLimit;
          lk.target = target;
          std::vector<Vec> out;
          for (int i = 0; i < n; ++i)
            out.push_back(draw_limit(lk, q0, StepKey{seed, static_cast<std::uint64_t>(i), 0}));
          return out;
        });
}
