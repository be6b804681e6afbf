// Python bindings for the core operations: action-set geometry, step-size
// admissibility, theoretical brackets, accumulator identities, reference
// solves and full experiment runs.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "mwopt/experiments.hpp"
#include "mwopt/oracle.hpp"
#include "mwopt/queue_multipliers.hpp"

namespace py = pybind11;
using namespace mwopt;

namespace {

Vector to_vector(const std::vector<double>& values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = values[i];
  }
  return v;
}

std::vector<double> from_vector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

ActionSet to_actions(const std::vector<std::vector<double>>& points) {
  std::vector<Vector> converted;
  converted.reserve(points.size());
  for (const auto& p : points) converted.push_back(to_vector(p));
  return ActionSet(converted);
}

// JSON -> native python objects, so callers get dicts instead of strings.
// Imported per call: caching the callable in a static would destroy a Python
// object after interpreter finalization and abort at shutdown.
py::object json_to_py(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Greedy descent over finite action sets with approximate Lagrange "
      "multipliers: geometry helpers, admissibility limits, theoretical "
      "brackets and experiment runners.";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<OracleFailure>(m, "OracleFailure", PyExc_RuntimeError);

  m.def(
      "diameter",
      [](const std::vector<std::vector<double>>& points) {
        return diameter(to_actions(points));
      },
      py::arg("points"),
      "Largest pairwise Euclidean distance among the action points.");

  m.def(
      "max_point_norm",
      [](const std::vector<std::vector<double>>& points) {
        return max_point_norm(to_actions(points));
      },
      py::arg("points"), "Largest Euclidean norm among the action points.");

  m.def("beta_bound", &beta_bound, py::arg("epsilon"), py::arg("gamma"),
        py::arg("mu_f"), py::arg("xbar"),
        "Admissible averaging step: (1-gamma) * min(epsilon/(mu_f*xbar^2), 1).");

  m.def("alpha_bound", &alpha_bound, py::arg("epsilon"), py::arg("gamma"),
        py::arg("gamma1"), py::arg("beta"), py::arg("m"), py::arg("gbar"),
        py::arg("sigma0"),
        "Admissible multiplier step given the constraint magnitude and noise.");

  m.def("bound_main", &bound_main, py::arg("k"), py::arg("alpha"),
        py::arg("epsilon"), py::arg("sigma0"), py::arg("lambda_bar"),
        py::arg("gbar"), py::arg("m"),
        "(lower, upper) bracket for f(z_diamond_k) - f* at averaging count k.");

  m.def("bound_slackness", &bound_slackness, py::arg("k"), py::arg("alpha"),
        py::arg("lambda_bar"), py::arg("gbar"), py::arg("m"),
        "(lower, upper) bracket for lambda_diamond' g(z_diamond) at count k.");

  m.def("feasibility_cap", &feasibility_cap, py::arg("k"), py::arg("alpha"),
        py::arg("lambda_bar"),
        "Upper cap lambda_bar/(alpha*k) on each averaged constraint value.");

  m.def("bound_lagrangian_average", &bound_lagrangian_average, py::arg("k"),
        py::arg("alpha"), py::arg("epsilon"), py::arg("lambda_bar"),
        py::arg("gbar"), py::arg("m"),
        "(lower, upper) bracket for the averaged Lagrangian minus f*.");

  m.def("tracking_gap_bound", &tracking_gap_bound, py::arg("alpha"),
        py::arg("beta"), py::arg("sigma1"), py::arg("sigma2"), py::arg("m"),
        "Uniform bound 2*m*alpha*(sigma1/beta + sigma2) on |approx - exact|.");

  m.def(
      "clipped_accumulator_closed_form",
      [](double lambda1, const std::vector<double>& deltas) {
        return clipped_accumulator_closed_form(lambda1, deltas);
      },
      py::arg("lambda1"), py::arg("deltas"),
      "Closed form for iterating lambda <- max(lambda + delta, 0).");

  m.def(
      "brute_argmin",
      [](const std::function<double(std::vector<double>)>& f,
         const std::vector<std::vector<double>>& points) {
        const ActionSet actions = to_actions(points);
        const auto result = brute_argmin(
            [&](const Vector& x) { return f(from_vector(x)); }, actions);
        return py::make_tuple(result.first, result.second);
      },
      py::arg("f"), py::arg("points"),
      "Enumerates the action points and returns (index, value) of the "
      "minimum; ties resolve to the lowest index.");

  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& out_dir,
         std::optional<std::uint64_t> seed, std::optional<bool> strict) {
        const Config config = Config::parse_file(config_path);
        const ExperimentOutcome outcome =
            run_experiment(config, out_dir, seed, strict);
        return json_to_py(outcome.summary);
      },
      py::arg("config_path"), py::arg("out_dir"),
      py::arg("seed") = py::none(), py::arg("strict") = py::none(),
      "Runs the configured experiment, writes trace.csv and summary.json "
      "under out_dir, and returns the summary as a dict (its 'exit_code' "
      "entry is 3 when the multiplier contract was breached).");

  m.def(
      "experiment_bounds",
      [](const std::string& config_path) {
        return json_to_py(experiment_bounds(Config::parse_file(config_path)));
      },
      py::arg("config_path"),
      "Theoretical brackets and admissibility limits for a config, "
      "without running it.");

  m.def(
      "experiment_oracle",
      [](const std::string& config_path,
         const std::optional<std::vector<double>>& lambda) {
        std::optional<Vector> converted;
        if (lambda) converted = to_vector(*lambda);
        return json_to_py(
            experiment_oracle(Config::parse_file(config_path), converted));
      },
      py::arg("config_path"), py::arg("lambda") = py::none(),
      "Reference solves for a config: f*, and q(lambda) when multipliers "
      "are supplied.");
}
