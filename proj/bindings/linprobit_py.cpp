// Python bindings for the core library: problems, linearization,
// estimators, closed-form MSEs, and the synthetic sweep.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>

#include "linprobit/analysis.hpp"
#include "linprobit/bench.hpp"
#include "linprobit/errors.hpp"
#include "linprobit/estimators.hpp"
#include "linprobit/linearization.hpp"
#include "linprobit/model.hpp"
#include "linprobit/rng.hpp"

namespace py = pybind11;
using namespace linprobit;

namespace {

std::vector<EstimatorId> ids_from_names(const std::vector<std::string>& names) {
  std::vector<EstimatorId> ids;
  for (const std::string& name : names) {
    const auto id = estimator_from_string(name);
    if (!id) throw std::invalid_argument("unknown estimator '" + name + "'");
    ids.push_back(*id);
  }
  return ids;
}

py::dict sweep_point_to_dict(const SweepPoint& r) {
  py::dict d;
  d["m"] = r.m;
  d["n"] = r.n;
  d["snr_db"] = r.snr_db;
  d["estimator"] = to_string(r.estimator_id);
  d["mse_emp_mean"] = r.mse_empirical_mean
                          ? py::object(py::float_(*r.mse_empirical_mean))
                          : py::object(py::none());
  d["mse_emp_stderr"] =
      r.mse_empirical_std_error
          ? py::object(py::float_(*r.mse_empirical_std_error))
          : py::object(py::none());
  d["mse_closed_form"] = r.mse_closed_form
                             ? py::object(py::float_(*r.mse_closed_form))
                             : py::object(py::none());
  d["trials"] = r.trials_used;
  d["failures"] = r.failures;
  return d;
}

}  // namespace

PYBIND11_MODULE(linprobit, m) {
  m.doc() =
      "Linearized binary (probit) regression: Bussgang linearization, "
      "L-MMSE/LS estimators with exact MSE, and MAP/ML/Logit-MAP/Gibbs "
      "posterior-mean baselines.";
  m.attr("__version__") = "0.1.0";

  py::register_exception<NumericError>(m, "NumericError");
  py::register_exception<EstimatorUnavailable>(m, "EstimatorUnavailable");
  py::register_exception<LoadError>(m, "LoadError");

  py::class_<ObservationVector>(m, "ObservationVector")
      .def_static("binary", &ObservationVector::binary, py::arg("values"),
                  "Wrap a vector of +-1 measurements.")
      .def_static("smoothed", &ObservationVector::smoothed, py::arg("values"),
                  "Wrap a vector of smoothed measurements in [-1, 1].")
      .def_property_readonly("values", &ObservationVector::values)
      .def_property_readonly("is_binary", [](const ObservationVector& o) {
        return o.kind() == ObservationKind::Binary;
      });

  py::class_<ProbitProblem>(m, "ProbitProblem")
      .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd, Eigen::MatrixXd,
                    double>(),
           py::arg("design"), py::arg("prior_cov"), py::arg("noise_cov"),
           py::arg("smoothing") = 0.0)
      .def_property_readonly("design", &ProbitProblem::design)
      .def_property_readonly("prior_cov", &ProbitProblem::prior_cov)
      .def_property_readonly("noise_cov", &ProbitProblem::noise_cov)
      .def_property_readonly("smoothing", &ProbitProblem::smoothing)
      .def_property_readonly("m", &ProbitProblem::m)
      .def_property_readonly("n", &ProbitProblem::n);

  py::class_<Linearization>(m, "Linearization")
      .def_readonly("e_matrix", &Linearization::e_matrix)
      .def_readonly("obs_cov", &Linearization::obs_cov)
      .def_readonly("f_matrix", &Linearization::f_matrix)
      .def_readonly("z_cov", &Linearization::z_cov)
      .def_readonly("prior_cov", &Linearization::prior_cov)
      .def_readonly("smoothing", &Linearization::smoothing);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_static("desk_scale", &SolverConfig::desk_scale,
                  "Short-chain settings: 5000 kept Gibbs samples, 2000 "
                  "burn-in sweeps.")
      .def_readwrite("max_iter", &SolverConfig::max_iter)
      .def_readwrite("tol", &SolverConfig::tol)
      .def_readwrite("gibbs_samples", &SolverConfig::gibbs_samples)
      .def_readwrite("gibbs_burn_in", &SolverConfig::gibbs_burn_in)
      .def_readwrite("divergence_bound", &SolverConfig::divergence_bound);

  py::class_<EstimatorReport>(m, "EstimatorReport")
      .def_readonly("estimate", &EstimatorReport::estimate)
      .def_property_readonly(
          "estimator",
          [](const EstimatorReport& r) { return to_string(r.estimator_id); })
      .def_property_readonly(
          "converged",
          [](const EstimatorReport& r) { return r.diagnostics.converged; })
      .def_property_readonly(
          "diverged",
          [](const EstimatorReport& r) { return r.diagnostics.diverged; })
      .def_property_readonly(
          "iterations",
          [](const EstimatorReport& r) { return r.diagnostics.iterations; })
      .def_property_readonly(
          "final_residual",
          [](const EstimatorReport& r) { return r.diagnostics.final_residual; })
      .def_property_readonly(
          "samples_kept",
          [](const EstimatorReport& r) { return r.diagnostics.samples_kept; })
      .def_property_readonly(
          "warning",
          [](const EstimatorReport& r)
              -> std::optional<std::string> {
            if (r.diagnostics.warning.empty()) return std::nullopt;
            return r.diagnostics.warning;
          })
      .def("failed", &EstimatorReport::failed);

  m.def("linearize", &linearize, py::arg("problem"),
        "Bussgang linearization: ybar = F x + e with E[x e^T] = 0.");
  m.def(
      "residual_check",
      [](const ProbitProblem& problem, const Linearization& lin, long trials,
         std::uint64_t seed) {
        RandomStream rng = RandomStream::substream(seed, 0x72);
        return residual_check(problem, lin, trials, rng);
      },
      py::arg("problem"), py::arg("lin"), py::arg("trials"), py::arg("seed"),
      "Empirical E[x e^T]; near zero when F is the Bussgang gain.");

  m.def("lmmse_estimate", &lmmse_estimate, py::arg("lin"),
        py::arg("observation"), py::arg("config") = SolverConfig());
  m.def("ls_estimate", &ls_estimate, py::arg("lin"), py::arg("observation"));
  m.def("map_probit", &map_probit, py::arg("problem"), py::arg("observation"),
        py::arg("config") = SolverConfig());
  m.def("ml_probit", &ml_probit, py::arg("problem"), py::arg("observation"),
        py::arg("config") = SolverConfig());
  m.def("map_logit", &map_logit, py::arg("problem"), py::arg("observation"),
        py::arg("config") = SolverConfig());
  m.def(
      "pm_gibbs",
      [](const ProbitProblem& problem, const ObservationVector& obs,
         const SolverConfig& config, std::uint64_t seed) {
        RandomStream rng = RandomStream::substream(seed, 0x9b);
        return pm_gibbs(problem, obs, config, rng);
      },
      py::arg("problem"), py::arg("observation"),
      py::arg("config") = SolverConfig::desk_scale(), py::arg("seed") = 1,
      "Posterior mean by truncated-normal data augmentation.");

  m.def("lmmse_mse_closed_form", &lmmse_mse_closed_form, py::arg("lin"));
  m.def("ls_mse_closed_form", &ls_mse_closed_form, py::arg("lin"));

  m.def(
      "generate_design",
      [](int rows, int cols, std::uint64_t seed) {
        RandomStream rng =
            RandomStream::substream(seed, kStreamDesign,
                                    static_cast<std::uint64_t>(rows),
                                    static_cast<std::uint64_t>(cols));
        return generate_design(rows, cols, rng);
      },
      py::arg("m"), py::arg("n"), py::arg("seed"),
      "Gaussian design with unit-norm rows.");
  m.def(
      "make_synthetic_problem",
      [](int rows, int cols, double sigma_x_sq, double snr_db,
         std::uint64_t seed) {
        SyntheticConfig cfg;
        cfg.m = rows;
        cfg.n = cols;
        cfg.sigma_x_sq = sigma_x_sq;
        cfg.snr_db = snr_db;
        cfg.seed = seed;
        cfg.validate();
        RandomStream rng =
            RandomStream::substream(seed, kStreamDesign,
                                    static_cast<std::uint64_t>(rows),
                                    static_cast<std::uint64_t>(cols));
        return make_synthetic_problem(cfg, generate_design(rows, cols, rng));
      },
      py::arg("m"), py::arg("n"), py::arg("sigma_x_sq") = 1.0,
      py::arg("snr_db") = 0.0, py::arg("seed") = 1,
      "Row-normalized Gaussian design with isotropic covariances.");
  m.def(
      "sample_instance",
      [](const ProbitProblem& problem, std::uint64_t seed, std::uint64_t k) {
        RandomStream rng = RandomStream::substream(seed, kStreamInstance, 0, k);
        auto [x, y] = sample_instance(problem, rng);
        return py::make_tuple(x, y);
      },
      py::arg("problem"), py::arg("seed"), py::arg("trial") = 0,
      "Draw (signal, observation) from the generative model.");

  m.def(
      "snr_sweep",
      [](int rows, int cols, const std::vector<double>& snr_grid_db,
         const std::vector<std::string>& estimators, int trials,
         double sigma_x_sq, std::uint64_t seed, const SolverConfig& solver,
         int threads) {
        SyntheticConfig base;
        base.m = rows;
        base.n = cols;
        base.sigma_x_sq = sigma_x_sq;
        base.seed = seed;
        const auto points = snr_sweep(base, snr_grid_db,
                                      ids_from_names(estimators), trials,
                                      solver, threads);
        py::list out;
        for (const SweepPoint& r : points) out.append(sweep_point_to_dict(r));
        return out;
      },
      py::arg("m"), py::arg("n"), py::arg("snr_grid_db"),
      py::arg("estimators"), py::arg("trials") = 100,
      py::arg("sigma_x_sq") = 1.0, py::arg("seed") = 1,
      py::arg("solver") = SolverConfig::desk_scale(), py::arg("threads") = 1,
      "Shared-draw Monte-Carlo MSE sweep; rows as dicts with None for "
      "absent values.");

  m.def("evaluate_acc", &evaluate_acc, py::arg("scores"), py::arg("labels"));
  m.def("evaluate_auc", &evaluate_auc, py::arg("scores"), py::arg("labels"));
}
