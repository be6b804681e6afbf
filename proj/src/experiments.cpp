#include "mwopt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mwopt/csv.hpp"
#include "mwopt/log.hpp"
#include "mwopt/oracle.hpp"

namespace mwopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();


long long require_int(const Config& config, const std::string& key) {
  if (!config.has(key)) {
    throw ValidationError("missing required config key '" + key + "' (" +
                          config.origin() + ")");
  }
  return config.get_int(key);
}

Json json_vector(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_number(v[i]));
  return out;
}

UpdateRule parse_update_rule(const Config& config) {
  const std::string rule = config.get_string("solver.update_rule", "direct");
  if (rule == "direct") return UpdateRule::direct;
  if (rule == "frank_wolfe") return UpdateRule::frank_wolfe;
  throw ValidationError("solver.update_rule must be 'direct' or 'frank_wolfe', got '" +
                        rule + "'");
}

double resolve_xbar(const Config& config, const ActionSet& actions) {
  const std::string convention =
      config.get_string("solver.xbar_convention", "radius");
  if (convention == "radius") return max_point_norm(actions);
  if (convention == "diameter") return diameter(actions);
  throw ValidationError(
      "solver.xbar_convention must be 'radius' or 'diameter', got '" +
      convention + "'");
}

// Shared [solver] section reading; lambda_cap and f_star are resolved by the
// callers because both may need a reference solve.
SolverParams read_solver_common(const Config& config, double default_epsilon,
                                double default_alpha, double default_beta_or_auto,
                                long long default_iterations) {
  SolverParams params;
  params.epsilon = config.get_double("solver.epsilon", default_epsilon);
  params.gamma = config.get_double("solver.gamma", 0.5);
  params.gamma1 = config.get_double("solver.gamma1", 0.4);
  params.alpha = config.has("solver.alpha") ? config.get_double("solver.alpha")
                                            : default_alpha;
  if (config.has("solver.beta")) {
    const auto beta = config.get_auto_double("solver.beta");
    params.beta = beta ? *beta : 0.0;  // 0 marks "auto", resolved by the caller
  } else {
    params.beta = default_beta_or_auto;
  }
  params.sigma0 = config.get_double("solver.sigma0", 0.0);
  params.max_iterations =
      config.has("solver.max_iterations") ? config.get_int("solver.max_iterations")
                                          : default_iterations;
  params.update_rule = parse_update_rule(config);
  params.checkpoint_every = config.get_int("solver.checkpoint_every", 100);
  params.trace_every = config.get_int("solver.trace_every", 100);
  params.confirmation_window = config.get_int("solver.confirmation_window", 100);
  params.seed = static_cast<std::uint64_t>(config.get_int("solver.seed", 1));
  params.strict = config.get_bool("solver.strict", false);
  params.oracle.tolerance = config.get_double("solver.oracle_tolerance", 1e-8);
  if (config.has("problem.gbar")) {
    const auto declared = config.get_auto_double("problem.gbar");
    params.gbar_declared = declared ? *declared : 0.0;
  }
  return params;
}

// lambda_cap: a number, "inf", or "auto" (minimal admissible cap computed
// from a reference dual value).
double resolve_lambda_cap(const Config& config, const std::string& fallback,
                          const ProblemInstance& problem,
                          const SolverParams& params,
                          const std::function<double()>& q_ref) {
  const std::string text = config.get_string("solver.lambda_cap", fallback);
  if (text == "inf") return kInf;
  if (text == "auto") {
    const double requirement =
        lambda_bar_requirement(problem, params.alpha, params.epsilon,
                               params.sigma0, q_ref(), params.gbar_declared);
    log::info("lambda_cap auto-resolved to the minimal admissible cap ",
              requirement);
    return requirement;
  }
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || !(value > 0.0)) {
    throw ValidationError("solver.lambda_cap must be positive, 'inf' or 'auto'");
  }
  return value;
}

// f_star: "auto" (reference solve), "none", or a literal number.
std::optional<double> resolve_f_star(const Config& config,
                                     const std::string& fallback,
                                     const std::function<double()>& compute) {
  const std::string text = config.get_string("multipliers.f_star", fallback);
  if (text == "none") return std::nullopt;
  if (text == "auto") return compute();
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw ValidationError("multipliers.f_star must be a number, 'auto' or 'none'");
  }
  return value;
}

MultiplierSource exp_multiplier_source(const Config& config,
                                       const SolverParams& params) {
  const std::string name = config.get_string("multipliers.source", "exact");
  MultiplierSource source;
  if (name == "exact") {
    source.kind = MultiplierSource::Kind::exact;
    return source;
  }
  if (name == "uniform") {
    // One shared uniform draw per iteration, scaled to the declared band.
    source.kind = MultiplierSource::Kind::perturbed;
    const double amplitude = params.alpha * params.sigma0;
    source.perturb = [amplitude](const Vector& lambda, long long, Rng& rng) {
      return Vector(lambda.array() + amplitude * rng.uniform(-1.0, 1.0));
    };
    return source;
  }
  if (name == "adversarial") {
    if (!std::isfinite(params.lambda_cap)) {
      throw ValidationError(
          "multipliers.source=adversarial requires a finite solver.lambda_cap");
    }
    const long long onset = config.get_int("multipliers.onset", 100000);
    const double alpha = params.alpha;
    const double cap = params.lambda_cap;
    source.kind = MultiplierSource::Kind::perturbed;
    source.perturb = [alpha, cap, onset](const Vector& lambda, long long k,
                                         Rng&) {
      // Exponentially growing additive bump, clipped into the admissible box;
      // negligible before the onset, dominant after it.
      const double t = static_cast<double>(k - onset);
      const double bump = alpha * std::exp(t);
      return Vector((lambda.array() + bump).max(0.0).min(cap));
    };
    return source;
  }
  throw ValidationError(
      "multipliers.source must be 'exact', 'uniform' or 'adversarial', got '" +
      name + "'");
}

// --- exp_example -------------------------------------------------------------

ConvexFunctionSpec exp_sum_objective(Eigen::Index n, double curvature) {
  ConvexFunctionSpec f;
  f.name = "sum_of_exponentials";
  f.curvature = curvature;
  f.value = [n](const Vector& z) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      total += std::exp(static_cast<double>(i + 1) * z[i]);
    }
    return total;
  };
  f.subgradient = [n](const Vector& z) {
    Vector g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double weight = static_cast<double>(i + 1);
      g[i] = weight * std::exp(weight * z[i]);
    }
    return g;
  };
  return f;
}

ConstraintVector floor_constraints(const Vector& floors) {
  ConstraintVector g;
  for (Eigen::Index j = 0; j < floors.size(); ++j) {
    Vector c = Vector::Zero(floors.size());
    c[j] = -1.0;
    g.components.push_back(
        make_linear(c, floors[j], "floor_" + std::to_string(j + 1)));
  }
  return g;
}

}  // namespace

Json json_number(double value) {
  if (std::isfinite(value)) return Json(value);
  if (std::isnan(value)) return Json("nan");
  return Json(value > 0 ? "inf" : "-inf");
}

ExperimentKind experiment_kind(const Config& config) {
  const std::string kind = config.get_string("experiment.kind");
  if (kind == "exp_example") return ExperimentKind::exp_example;
  if (kind == "fig_q") return ExperimentKind::fig_q;
  if (kind == "privacy") return ExperimentKind::privacy;
  if (kind == "custom") return ExperimentKind::custom;
  throw ValidationError(
      "experiment.kind must be one of exp_example|fig_q|privacy|custom, got '" +
      kind + "'");
}

BuiltConstrainedExperiment build_exp_example(const Config& config) {
  const long long n_raw = config.get_int("problem.n", 3);
  if (n_raw < 1 || n_raw > 20) {
    throw ValidationError("problem.n must lie in [1, 20]");
  }
  const auto n = static_cast<Eigen::Index>(n_raw);
  const double mu = config.get_double("problem.mu_objective", 0.6);
  if (mu < 0.0) throw ValidationError("problem.mu_objective must be >= 0");

  double s;
  const auto s_config = config.get_auto_double("problem.s");
  if (s_config) {
    s = *s_config;
  } else {
    if (!(mu > 0.0)) {
      throw ValidationError(
          "problem.s=auto requires problem.mu_objective > 0 (the edge length "
          "is chosen so that mu * n * s^2 = 1)");
    }
    s = 1.0 / std::sqrt(static_cast<double>(n) * mu);
  }
  if (!(s > 0.0)) throw ValidationError("problem.s must be > 0");

  // Componentwise floors b_j = s * j / (n (n+1)), strictly inside the box.
  Vector floors(n);
  const double denom = static_cast<double>(n) * static_cast<double>(n + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    floors[j] = s * static_cast<double>(j + 1) / denom;
  }

  ActionSet actions = box_corners(n, 0.0, s);
  const std::size_t top_corner = actions.size() - 1;  // all coordinates at s

  std::vector<double> interior_weights(actions.size(), 0.0);
  interior_weights[top_corner] = 1.0;
  ProblemInstance problem(exp_sum_objective(n, mu), floor_constraints(floors),
                          actions, Vector::Constant(n, s), interior_weights);

  SolverParams params = read_solver_common(config, 0.05, 7.29e-5,
                                           /*beta=*/0.0, 110000);
  const double xbar = resolve_xbar(config, actions);
  params.xbar = xbar;
  if (params.beta == 0.0) {
    params.beta = beta_bound(params.epsilon, params.gamma, mu, xbar);
  }

  auto reference_q = [&problem, &params]() {
    const ReferenceSolution primal = reference_primal(problem, params.oracle);
    return reference_dual(problem, primal.multipliers, params.oracle).value;
  };
  params.lambda_cap =
      resolve_lambda_cap(config, "0.7", problem, params, reference_q);
  params.f_star = resolve_f_star(config, "none", [&problem, &params]() {
    return reference_primal(problem, params.oracle).value;
  });
  params.lambda_init = Vector::Zero(n);

  MultiplierSource source = exp_multiplier_source(config, params);
  DescentState initial = make_vertex_state(actions, top_corner, params.beta);

  return BuiltConstrainedExperiment{std::move(problem), std::move(params),
                                    std::move(source), RunHooks{},
                                    std::move(initial)};
}

// --- privacy -----------------------------------------------------------------

namespace {

// argmin over the probability simplex of l1 * (sum p log p) + l2 * (sum i p):
// a Gibbs distribution p_i ~ exp(-(l2/l1) i) when l1 > 0, the lowest-index
// vertex when l1 = 0.
Vector gibbs_point(double l1, double l2, Eigen::Index support) {
  Vector p = Vector::Zero(support);
  if (l1 > 1e-300) {
    const double tilt = l2 / l1;
    double z = 0.0;
    for (Eigen::Index i = 0; i < support; ++i) {
      p[i] = std::exp(-tilt * static_cast<double>(i));
      z += p[i];
    }
    p /= z;
  } else {
    p[0] = 1.0;
  }
  return p;
}

// min over the simplex of l1*g1 + l2*g2 in closed form:
// l1*(E - log Z) + l2*(xi - b) with Z the Gibbs normalizer.
double privacy_dual_value(double l1, double l2, Eigen::Index support,
                          double entropy_target, double xi_minus_b) {
  if (l1 > 1e-300) {
    const double tilt = l2 / l1;
    double z = 0.0;
    for (Eigen::Index i = 0; i < support; ++i) {
      z += std::exp(-tilt * static_cast<double>(i));
    }
    return l1 * (entropy_target - std::log(z)) + l2 * xi_minus_b;
  }
  return l2 * xi_minus_b;
}

std::function<double(long long)> privacy_arrivals(const Config& config) {
  if (config.has("problem.arrivals_csv")) {
    const auto rows = load_arrivals_csv(config.get_string("problem.arrivals_csv"));
    if (rows.empty() || rows[0].size() != 1) {
      throw ValidationError(
          "problem.arrivals_csv must provide a single-column sequence");
    }
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.push_back(r[0]);
    return [values](long long k) {
      return values[static_cast<std::size_t>((k - 1) %
                                             static_cast<long long>(
                                                 values.size()))];
    };
  }
  // Default: alternating 0,1,0,1,... starting at 0.
  return [](long long k) { return ((k - 1) % 2 == 0) ? 0.0 : 1.0; };
}

}  // namespace

BuiltConstrainedExperiment build_privacy_example(const Config& config) {
  const long long t_raw = config.get_int("problem.t_max", 5);
  if (t_raw < 2 || t_raw > 1000) {
    throw ValidationError("problem.t_max must lie in [2, 1000]");
  }
  const auto support = static_cast<Eigen::Index>(t_raw + 1);  // indices 0..t_max

  double entropy_target;
  const auto e_config = config.get_auto_double("problem.entropy_target");
  entropy_target = e_config ? *e_config
                            : std::log(static_cast<double>(t_raw)) /
                                  static_cast<double>(t_raw);
  if (entropy_target > std::log(static_cast<double>(support)) + 1e-12) {
    throw ValidationError(
        "problem.entropy_target exceeds the achievable entropy log(t_max+1)");
  }
  const double b_mean = config.get_double("problem.b", 0.5);
  const double xi = config.get_double("problem.xi", b_mean / 2.0);
  if (!(xi > 0.0)) throw ValidationError("problem.xi must be > 0");

  // Actions: the unit basis vectors; their hull is the probability simplex.
  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(support));
  for (Eigen::Index i = 0; i < support; ++i) {
    Vector e = Vector::Zero(support);
    e[i] = 1.0;
    basis.push_back(std::move(e));
  }
  ActionSet actions(std::move(basis));

  // Negative entropy plus the target: sum p log p + E <= 0 asks the schedule
  // to keep at least E nats of uncertainty.
  ConvexFunctionSpec g1;
  g1.name = "entropy_floor";
  g1.curvature = kInf;  // second differences are unbounded at the boundary
  g1.value = [entropy_target](const Vector& p) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) sum += p[i] * std::log(p[i]);
    }
    return sum + entropy_target;
  };
  g1.subgradient = [](const Vector& p) {
    Vector g(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      g[i] = std::log(std::max(p[i], 1e-100)) + 1.0;
    }
    return g;
  };

  // Mean index (expected delay) cap: sum i p_i + xi - b <= 0.
  Vector index_weights(support);
  for (Eigen::Index i = 0; i < support; ++i) {
    index_weights[i] = static_cast<double>(i);
  }
  ConvexFunctionSpec g2 =
      make_linear(index_weights, xi - b_mean, "mean_index_cap");

  ConstraintVector constraints;
  constraints.components.push_back(std::move(g1));
  constraints.components.push_back(std::move(g2));

  // Constant-zero objective: this is a pure feasibility run.
  ConvexFunctionSpec objective =
      make_linear(Vector::Zero(support), 0.0, "zero");

  // Strictly feasible interior point: front-loaded mass keeps the mean index
  // small while staying comfortably above the entropy floor.
  Vector interior = Vector::Zero(support);
  interior[0] = 0.85;
  interior[1] = 0.12;
  interior[2] = 0.03;
  std::vector<double> interior_weights(static_cast<std::size_t>(support), 0.0);
  for (Eigen::Index i = 0; i < support; ++i) {
    interior_weights[static_cast<std::size_t>(i)] = interior[i];
  }
  ProblemInstance problem(std::move(objective), std::move(constraints), actions,
                          interior, interior_weights);

  SolverParams params = read_solver_common(config, 0.05, 0.01, 0.01, 20000);
  params.xbar = resolve_xbar(config, actions);
  if (params.beta == 0.0) params.beta = 0.01;
  if (!config.has("solver.sigma0")) params.sigma0 = 1.0;

  auto zero_q = []() { return 0.0; };
  params.lambda_cap = resolve_lambda_cap(config, "0.5", problem, params, zero_q);
  if (!std::isfinite(params.lambda_cap)) {
    throw ValidationError("privacy runs require a finite solver.lambda_cap");
  }
  params.f_star = resolve_f_star(config, "auto", []() { return 0.0; });

  params.lambda_init = Vector::Zero(2);
  params.lambda_init[0] = params.lambda_cap;  // entropy multiplier starts at the cap

  const double cap = params.lambda_cap;
  const double alpha = params.alpha;
  auto b_of_k = privacy_arrivals(config);

  MultiplierSource source;
  source.kind = MultiplierSource::Kind::recursive;
  source.advance = [alpha, cap, b_mean, b_of_k](const Vector& lambda_tilde,
                                                const Vector&,
                                                const Vector& g_next,
                                                long long k, Rng&) {
    // The entropy component sees the true constraint value; the mean-index
    // component sees the realized arrival instead of its mean.
    Vector increment = g_next;
    increment[1] += b_mean - b_of_k(k);
    return Vector((lambda_tilde + alpha * increment).cwiseMax(0.0).cwiseMin(cap));
  };

  RunHooks hooks;
  hooks.inner_point = [support](const Vector&, const Vector& lambda_tilde,
                                double) {
    return gibbs_point(lambda_tilde[0], lambda_tilde[1], support);
  };
  const double xi_minus_b = xi - b_mean;
  hooks.dual_value = [support, entropy_target, xi_minus_b](
                         const Vector& lambda_tilde) {
    return privacy_dual_value(lambda_tilde[0], lambda_tilde[1], support,
                              entropy_target, xi_minus_b);
  };

  std::vector<double> uniform_weights(static_cast<std::size_t>(support),
                                      1.0 / static_cast<double>(support));
  DescentState initial =
      make_hull_state(actions, Vector::Constant(support, 1.0 / support),
                      uniform_weights, params.beta);

  return BuiltConstrainedExperiment{std::move(problem), std::move(params),
                                    std::move(source), std::move(hooks),
                                    std::move(initial)};
}

// --- fig_q --------------------------------------------------------------------

BuiltTrackingExperiment build_fig_q_example(const Config& config) {
  const double b = config.get_double("problem.b", 0.5);

  std::vector<Vector> points;
  points.push_back(Vector::Zero(1));
  points.push_back(Vector::Ones(1));
  ActionSet actions(std::move(points));

  LinearConstraintSystem system;
  system.A = Matrix::Ones(1, 1);
  system.b = Vector::Constant(1, b);

  ArrivalModel arrivals;
  if (config.has("tracking.arrivals_csv")) {
    const auto rows = load_arrivals_csv(config.get_string("tracking.arrivals_csv"));
    arrivals.kind = ArrivalModel::Kind::deterministic_sequence;
    arrivals.sequence = rows;
    arrivals.mean = system.b;
    if (config.has("tracking.sigma2")) {
      arrivals.sigma2_claim = config.get_double("tracking.sigma2");
    }
  } else {
    arrivals = ArrivalModel::constant(system.b);
  }

  TrackingRunConfig run;
  run.alpha = config.get_double("solver.alpha", 1.0);
  run.beta = config.get_double("solver.beta", 0.1);
  const std::string cap_text = config.get_string("solver.lambda_cap", "inf");
  run.lambda_cap = cap_text == "inf" ? kInf : config.get_double("solver.lambda_cap");
  run.steps = config.get_int("tracking.steps", 10000);
  run.seed = static_cast<std::uint64_t>(config.get_int("solver.seed", 1));
  run.trace_every = config.get_int("solver.trace_every", 1);

  BuiltTrackingExperiment built{std::move(system), std::move(actions),
                                std::move(arrivals), run,
                                static_cast<int>(config.get_int("tracking.seeds", 20))};
  if (built.seeds < 1) throw ValidationError("tracking.seeds must be >= 1");
  return built;
}

// --- custom -------------------------------------------------------------------

namespace {

ConvexFunctionSpec custom_objective(const Config& config, Eigen::Index n) {
  const std::string kind = config.get_string("objective.kind", "linear");
  if (kind == "linear") {
    Vector c = config.get_vector("objective.c");
    if (c.size() != n) {
      throw ValidationError("objective.c size does not match the action dimension");
    }
    return make_linear(c, config.get_double("objective.offset", 0.0), "objective");
  }
  if (kind == "quadratic") {
    Vector d = config.get_vector("objective.quad_diag");
    if (d.size() != n) {
      throw ValidationError(
          "objective.quad_diag size does not match the action dimension");
    }
    if ((d.array() < 0.0).any()) {
      throw ValidationError("objective.quad_diag entries must be >= 0");
    }
    Vector c = config.has("objective.c") ? config.get_vector("objective.c")
                                         : Vector::Zero(n).eval();
    if (c.size() != n) {
      throw ValidationError("objective.c size does not match the action dimension");
    }
    return make_quadratic(Matrix(d.asDiagonal()), c,
                          config.get_double("objective.offset", 0.0), "objective");
  }
  throw ValidationError("objective.kind must be 'linear' or 'quadratic', got '" +
                        kind + "'");
}

ActionSet custom_actions(const Config& config) {
  const std::string kind = config.get_string("actions.kind", "box");
  if (kind == "box") {
    const long long n = require_int(config, "actions.n");
    if (n < 1 || n > 20) throw ValidationError("actions.n must lie in [1, 20]");
    const double lo = config.get_double("actions.lo", 0.0);
    const double hi = config.get_double("actions.hi", 1.0);
    return box_corners(static_cast<Eigen::Index>(n), lo, hi);
  }
  if (kind == "explicit") {
    if (!config.has("actions.points")) {
      throw ValidationError("actions.points is required for explicit action sets");
    }
    const std::string text = config.get_string("actions.points");
    std::vector<Vector> points;
    std::stringstream stream(text);
    std::string piece;
    while (std::getline(stream, piece, ';')) {
      if (piece.find_first_not_of(" \t") == std::string::npos) continue;
      points.push_back(parse_vector(piece, "actions.points"));
    }
    return ActionSet(std::move(points));
  }
  throw ValidationError("actions.kind must be 'box' or 'explicit', got '" + kind +
                        "'");
}

std::optional<LinearConstraintSystem> custom_constraints(const Config& config,
                                                         Eigen::Index n) {
  if (!config.has("constraints.rows")) return std::nullopt;
  const std::string text = config.get_string("constraints.rows");
  std::vector<Vector> rows;
  std::vector<double> offsets;
  std::stringstream stream(text);
  std::string piece;
  while (std::getline(stream, piece, ';')) {
    if (piece.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = piece.find(':');
    if (colon == std::string::npos) {
      throw ValidationError(
          "constraints.rows entries must look like 'a1,...,an : b'");
    }
    Vector row = parse_vector(piece.substr(0, colon), "constraints.rows");
    if (row.size() != n) {
      throw ValidationError(
          "constraints.rows coefficient count does not match the action dimension");
    }
    rows.push_back(std::move(row));
    offsets.push_back(
        parse_vector(piece.substr(colon + 1), "constraints.rows")[0]);
  }
  if (rows.empty()) return std::nullopt;
  LinearConstraintSystem system;
  system.A.resize(static_cast<Eigen::Index>(rows.size()), n);
  system.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    system.A.row(static_cast<Eigen::Index>(j)) = rows[j].transpose();
    system.b[static_cast<Eigen::Index>(j)] = offsets[j];
  }
  return system;
}

}  // namespace

std::variant<BuiltConstrainedExperiment, BuiltUnconstrainedExperiment>
build_custom_experiment(const Config& config) {
  ActionSet actions = custom_actions(config);
  const Eigen::Index n = actions.dimension();
  ConvexFunctionSpec objective = custom_objective(config, n);
  const double mu = objective.curvature;
  auto system = custom_constraints(config, n);

  if (!system) {
    BuiltUnconstrainedExperiment built{
        ProblemInstance(std::move(objective), actions), DescentConfig{},
        DescentState{}};
    built.config.epsilon = config.get_double("solver.epsilon", 0.05);
    built.config.gamma = config.get_double("solver.gamma", 0.5);
    built.config.gamma1 = config.get_double("solver.gamma1", 0.4);
    built.config.max_iterations = config.get_int("solver.max_iterations", 10000);
    built.config.update_rule = parse_update_rule(config);
    built.config.strict = config.get_bool("solver.strict", false);

    const double xbar = resolve_xbar(config, actions);
    double beta;
    const auto beta_config = config.get_auto_double("solver.beta");
    beta = beta_config ? *beta_config
                       : beta_bound(built.config.epsilon, built.config.gamma, mu,
                                    xbar);
    const auto start =
        static_cast<std::size_t>(config.get_int("solver.initial_vertex", 0));
    if (start >= actions.size()) {
      throw ValidationError("solver.initial_vertex is out of range");
    }
    built.initial = make_vertex_state(actions, start, beta);
    return built;
  }

  if (!config.has("interior.point")) {
    throw ValidationError(
        "interior.point is required when constraints are present (a strictly "
        "feasible hull point certifies bounded multipliers)");
  }
  Vector interior = config.get_vector("interior.point");
  std::optional<std::vector<double>> weights;
  if (config.has("interior.weights")) {
    const Vector w = config.get_vector("interior.weights");
    weights = std::vector<double>(w.data(), w.data() + w.size());
  }

  ProblemInstance problem(std::move(objective), to_constraints(*system), actions,
                          std::move(interior), std::move(weights));

  SolverParams params = read_solver_common(config, 0.05, 0.0, 0.0, 10000);
  if (!(params.alpha > 0.0)) {
    throw ValidationError("solver.alpha is required for constrained custom runs");
  }
  params.xbar = resolve_xbar(config, actions);
  if (params.beta == 0.0) {
    const double mu_L = lagrangian_curvature(
        mu, problem.constraints().curvatures(),
        config.has("solver.lambda_cap") &&
                config.get_string("solver.lambda_cap") != "auto" &&
                config.get_string("solver.lambda_cap") != "inf"
            ? config.get_double("solver.lambda_cap")
            : mu /* linear constraints leave the curvature unchanged */);
    params.beta = beta_bound(params.epsilon, params.gamma, mu_L, params.xbar);
  }

  auto reference_q = [&problem, &params]() {
    const ReferenceSolution primal = reference_primal(problem, params.oracle);
    return reference_dual(problem, primal.multipliers, params.oracle).value;
  };
  params.lambda_cap =
      resolve_lambda_cap(config, "auto", problem, params, reference_q);
  params.f_star = resolve_f_star(config, "auto", [&problem, &params]() {
    return reference_primal(problem, params.oracle).value;
  });
  params.lambda_init = Vector::Zero(problem.m());

  MultiplierSource source = exp_multiplier_source(config, params);
  const auto start =
      static_cast<std::size_t>(config.get_int("solver.initial_vertex", 0));
  if (start >= actions.size()) {
    throw ValidationError("solver.initial_vertex is out of range");
  }
  DescentState initial = make_vertex_state(actions, start, params.beta);

  return BuiltConstrainedExperiment{std::move(problem), std::move(params),
                                    std::move(source), RunHooks{},
                                    std::move(initial)};
}

// --- running ------------------------------------------------------------------

namespace {

std::vector<std::string> constrained_columns(Eigen::Index n, int m) {
  std::vector<std::string> cols = {"k"};
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back("z" + std::to_string(i + 1));
  for (int j = 0; j < m; ++j) cols.push_back("lambda" + std::to_string(j + 1));
  for (int j = 0; j < m; ++j) {
    cols.push_back("lambda_tilde" + std::to_string(j + 1));
  }
  for (const char* name :
       {"lagrangian", "dual_gap", "averaging_count", "f_diamond", "main_lower",
        "main_upper", "slack_value", "slack_lower", "slack_upper", "feas_max",
        "feas_cap", "window_active", "contract_ok", "main_ok", "slack_ok",
        "feas_ok"}) {
    cols.emplace_back(name);
  }
  return cols;
}

void write_constrained_csv(const std::string& path,
                           const ConstrainedRunResult& result, Eigen::Index n,
                           int m) {
  CsvWriter csv(path, "constrained_trace_v1", constrained_columns(n, m));
  std::vector<double> row;
  for (const auto& r : result.trace) {
    row.clear();
    row.push_back(static_cast<double>(r.k));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(r.z[i]);
    for (int j = 0; j < m; ++j) row.push_back(r.lambda[j]);
    for (int j = 0; j < m; ++j) row.push_back(r.lambda_tilde[j]);
    row.push_back(r.lagrangian);
    row.push_back(r.dual_gap);
    row.push_back(static_cast<double>(r.averaging_count));
    row.push_back(r.f_diamond);
    row.push_back(r.main_lower);
    row.push_back(r.main_upper);
    row.push_back(r.slack_value);
    row.push_back(r.slack_lower);
    row.push_back(r.slack_upper);
    row.push_back(r.feas_max);
    row.push_back(r.feas_cap);
    row.push_back(r.window_active ? 1.0 : 0.0);
    row.push_back(r.contract_ok ? 1.0 : 0.0);
    row.push_back(r.main_ok ? 1.0 : 0.0);
    row.push_back(r.slack_ok ? 1.0 : 0.0);
    row.push_back(r.feas_ok ? 1.0 : 0.0);
    csv.write_row(row);
  }
}

Json constrained_summary(const std::string& experiment,
                         const BuiltConstrainedExperiment& built,
                         const ConstrainedRunResult& result) {
  const SolverParams& params = built.params;
  const int m = built.problem.m();

  Json summary;
  summary["experiment"] = experiment;
  summary["iterations"] = params.max_iterations;
  summary["seed"] = params.seed;
  summary["strict"] = params.strict;

  Json parameters;
  parameters["alpha"] = json_number(params.alpha);
  parameters["beta"] = json_number(params.beta);
  parameters["epsilon"] = json_number(params.epsilon);
  parameters["gamma"] = json_number(params.gamma);
  parameters["gamma1"] = json_number(params.gamma1);
  parameters["sigma0"] = json_number(params.sigma0);
  parameters["lambda_cap"] = json_number(params.lambda_cap);
  parameters["xbar"] = json_number(params.xbar);
  parameters["gbar_computed"] = json_number(result.gbar_computed);
  parameters["gbar_used"] = json_number(result.gbar_used);
  parameters["alpha_limit"] = json_number(result.alpha_limit);
  parameters["beta_limit"] = json_number(result.beta_limit);
  parameters["alpha_within_limit"] = result.alpha_within_limit;
  parameters["beta_within_limit"] = result.beta_within_limit;
  // Which (gamma1, beta) would make the configured alpha sit exactly at its
  // admissibility bound, holding everything else fixed.
  const double mm = static_cast<double>(m);
  const double denom = mm * mm *
                       (result.gbar_used * result.gbar_used +
                        2.0 * params.sigma0 * result.gbar_used);
  parameters["backsolved_gamma1"] = json_number(
      params.alpha * denom / (params.gamma * params.beta * params.epsilon));
  parameters["backsolved_beta"] = json_number(
      params.alpha * denom / (params.gamma * params.gamma1 * params.epsilon));
  summary["parameters"] = std::move(parameters);

  Json kbar;
  kbar["first_hit"] = result.kbar_first_hit;
  kbar["confirmed"] = result.kbar_confirmed;
  summary["kbar"] = std::move(kbar);

  Json gap;
  gap["final"] = json_number(result.final_dual_gap);
  gap["threshold"] = json_number(2.0 * params.epsilon);
  gap["breaches_after_confirmation"] = result.gap_breaches_after_confirmation;
  summary["gap"] = std::move(gap);

  Json violations;
  violations["main"] = result.main_violations;
  violations["slackness"] = result.slackness_violations;
  violations["feasibility"] = result.feasibility_violations;
  violations["lagrangian_average"] = result.lag_avg_violations;
  violations["weak_duality"] = result.weak_duality_violations;
  violations["first_main_k"] = result.first_main_violation_k;
  summary["violations"] = std::move(violations);

  Json contract;
  contract["violations"] = result.contract_violations;
  contract["first_k"] = result.first_contract_violation_k;
  contract["max_gap"] = json_number(result.max_contract_gap);
  contract["threshold"] = json_number(params.alpha * params.sigma0);
  contract["sigma2_breaches"] = result.sigma2_breaches;
  summary["contract"] = std::move(contract);

  Json drift;
  drift["max"] = json_number(result.max_multiplier_drift);
  drift["limit"] = json_number(result.drift_limit);
  summary["multiplier_drift"] = std::move(drift);

  Json averages;
  averages["window_start"] = result.averages.window_start;
  averages["count"] = result.averages.count;
  if (result.averages.active()) {
    const Vector z_diamond = result.averages.z_diamond();
    const Vector lambda_diamond = result.averages.lambda_diamond();
    const Vector g_diamond = built.problem.constraint_values(z_diamond);
    averages["z_diamond"] = json_vector(z_diamond);
    averages["lambda_diamond"] = json_vector(lambda_diamond);
    averages["lambda_tilde_diamond"] =
        json_vector(result.averages.lambda_tilde_diamond());
    averages["f_diamond"] =
        json_number(built.problem.objective().value(z_diamond));
    averages["g_diamond"] = json_vector(g_diamond);
    averages["slack"] = json_number(lambda_diamond.dot(g_diamond));
  }
  summary["averages"] = std::move(averages);

  if (params.f_star) summary["f_star"] = json_number(*params.f_star);
  summary["final_lambda"] = json_vector(result.final_multipliers.lambda);
  summary["final_z"] = json_vector(result.final_z);
  summary["contract_violated"] = result.contract_violated();
  return summary;
}

void write_summary(const Json& summary, const std::string& out_dir) {
  std::ofstream out(out_dir + "/summary.json");
  if (!out) {
    throw OracleFailure("cannot write " + out_dir + "/summary.json");
  }
  out << summary.dump(2) << "\n";
}

ExperimentOutcome run_constrained_experiment(const std::string& name,
                                             BuiltConstrainedExperiment built,
                                             const std::string& out_dir) {
  ConstrainedRunResult result = run_constrained(built.problem, built.params,
                                                built.source, built.hooks,
                                                &built.initial);
  write_constrained_csv(out_dir + "/trace.csv", result,
                        built.problem.dimension(), built.problem.m());

  ExperimentOutcome outcome;
  outcome.summary = constrained_summary(name, built, result);
  outcome.exit_code = result.contract_violated() ? 3 : 0;
  outcome.summary["exit_code"] = outcome.exit_code;
  write_summary(outcome.summary, out_dir);
  return outcome;
}

ExperimentOutcome run_tracking_experiment(BuiltTrackingExperiment built,
                                          const std::string& out_dir) {
  CsvWriter csv(out_dir + "/trace.csv", "tracking_trace_v1",
                {"seed", "k", "lambda1", "lambda_tilde1", "gap"});

  ExperimentOutcome outcome;
  Json per_seed = Json::array();
  double max_gap_overall = 0.0;
  bool all_within = true;
  bool any_sigma2_breach = false;
  double bound = 0.0;

  const std::size_t action_count = built.actions.size();
  auto picker = [action_count](long long, Rng& rng) {
    return rng.uniform_index(action_count);
  };

  for (int i = 0; i < built.seeds; ++i) {
    TrackingRunConfig config = built.config;
    config.seed = built.config.seed + static_cast<std::uint64_t>(i);
    const TrackingRunResult run = run_tracking_pair(
        built.system, built.actions, built.arrivals, config, picker);
    bound = run.bound;
    max_gap_overall = std::max(max_gap_overall, run.max_gap);
    all_within = all_within && run.within_bound;
    any_sigma2_breach = any_sigma2_breach || run.sigma2_breached;

    std::vector<double> row(5);
    for (const auto& r : run.trace) {
      row[0] = static_cast<double>(config.seed);
      row[1] = static_cast<double>(r.k);
      row[2] = r.lambda[0];
      row[3] = r.lambda_tilde[0];
      row[4] = r.gap;
      csv.write_row(row);
    }

    Json seed_summary;
    seed_summary["seed"] = config.seed;
    seed_summary["max_gap"] = json_number(run.max_gap);
    seed_summary["final_gap"] = json_number(run.final_gap);
    seed_summary["within_bound"] = run.within_bound;
    seed_summary["realized_deviation"] = json_vector(run.realized_deviation);
    per_seed.push_back(std::move(seed_summary));
  }

  outcome.summary["experiment"] = "fig_q";
  outcome.summary["seeds"] = built.seeds;
  outcome.summary["steps"] = built.config.steps;
  outcome.summary["bound"] = json_number(bound);
  outcome.summary["sigma1"] = json_number(sigma1_bound(built.system.A, built.actions));
  outcome.summary["max_gap_overall"] = json_number(max_gap_overall);
  outcome.summary["all_within_bound"] = all_within;
  outcome.summary["sigma2_breached"] = any_sigma2_breach;
  outcome.summary["per_seed"] = std::move(per_seed);
  outcome.exit_code = any_sigma2_breach ? 3 : 0;
  outcome.summary["exit_code"] = outcome.exit_code;
  write_summary(outcome.summary, out_dir);
  return outcome;
}

ExperimentOutcome run_unconstrained_experiment(BuiltUnconstrainedExperiment built,
                                               const Config& config,
                                               const std::string& out_dir) {
  const double xbar = resolve_xbar(config, built.problem.actions());
  UnconstrainedRunResult result =
      run_unconstrained(built.problem, built.config, built.initial, xbar);

  const Eigen::Index n = built.problem.dimension();
  std::vector<std::string> cols = {"k"};
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back("z" + std::to_string(i + 1));
  cols.emplace_back("f");
  CsvWriter csv(out_dir + "/trace.csv", "descent_trace_v1", cols);
  std::vector<double> row;
  for (const auto& r : result.trace) {
    row.clear();
    row.push_back(static_cast<double>(r.k));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(r.z[i]);
    row.push_back(r.f);
    csv.write_row(row);
  }

  ExperimentOutcome outcome;
  outcome.summary["experiment"] = "custom";
  outcome.summary["mode"] = "unconstrained";
  outcome.summary["iterations"] = built.config.max_iterations;
  outcome.summary["f_final"] = json_number(result.final_value);
  outcome.summary["beta"] = json_number(result.beta_used);
  outcome.summary["beta_limit"] = json_number(result.beta_limit);
  outcome.summary["beta_within_limit"] = result.beta_within_limit;
  outcome.summary["final_z"] = json_vector(result.final_state.z);

  const std::string f_star_text = config.get_string("multipliers.f_star", "auto");
  if (f_star_text != "none") {
    OracleOptions options;
    options.tolerance = config.get_double("solver.oracle_tolerance", 1e-8);
    const double f_star =
        f_star_text == "auto"
            ? reference_primal(built.problem, options).value
            : config.get_double("multipliers.f_star");
    outcome.summary["f_star"] = json_number(f_star);
    outcome.summary["final_error"] = json_number(result.final_value - f_star);
    outcome.summary["within_two_epsilon"] =
        result.final_value - f_star <= 2.0 * built.config.epsilon + 1e-9;
  }
  outcome.exit_code = 0;
  outcome.summary["exit_code"] = 0;
  write_summary(outcome.summary, out_dir);
  return outcome;
}

void apply_overrides(Config& config, std::optional<std::uint64_t> seed,
                     std::optional<bool> strict) {
  if (seed) config.apply_override("solver.seed=" + std::to_string(*seed));
  if (strict) {
    config.apply_override(std::string("solver.strict=") +
                          (*strict ? "true" : "false"));
  }
}

}  // namespace

ExperimentOutcome run_experiment(const Config& config_in,
                                 const std::string& out_dir,
                                 std::optional<std::uint64_t> seed_override,
                                 std::optional<bool> strict_override) {
  Config config = config_in;
  apply_overrides(config, seed_override, strict_override);
  std::filesystem::create_directories(out_dir);

  switch (experiment_kind(config)) {
    case ExperimentKind::exp_example:
      return run_constrained_experiment("exp_example", build_exp_example(config),
                                        out_dir);
    case ExperimentKind::privacy:
      return run_constrained_experiment("privacy", build_privacy_example(config),
                                        out_dir);
    case ExperimentKind::fig_q:
      return run_tracking_experiment(build_fig_q_example(config), out_dir);
    case ExperimentKind::custom: {
      auto built = build_custom_experiment(config);
      if (std::holds_alternative<BuiltConstrainedExperiment>(built)) {
        return run_constrained_experiment(
            "custom", std::get<BuiltConstrainedExperiment>(std::move(built)),
            out_dir);
      }
      return run_unconstrained_experiment(
          std::get<BuiltUnconstrainedExperiment>(std::move(built)), config,
          out_dir);
    }
  }
  throw ValidationError("unreachable experiment kind");
}

namespace {

Json constrained_bounds(const BuiltConstrainedExperiment& built) {
  const SolverParams& params = built.params;
  const int m = built.problem.m();
  const double gbar_computed = max_constraint_magnitude(
      built.problem, {built.problem.interior_point()});
  const double gbar_used =
      params.gbar_declared > 0.0 ? params.gbar_declared : gbar_computed;

  Json out;
  out["alpha"] = json_number(params.alpha);
  out["beta"] = json_number(params.beta);
  out["epsilon"] = json_number(params.epsilon);
  out["sigma0"] = json_number(params.sigma0);
  out["lambda_cap"] = json_number(params.lambda_cap);
  out["gbar_computed"] = json_number(gbar_computed);
  out["gbar_used"] = json_number(gbar_used);
  out["slater_margin"] = json_number(slater_margin(built.problem, false));
  out["alpha_limit"] = json_number(
      alpha_bound(params.epsilon, params.gamma, params.gamma1, params.beta, m,
                  gbar_used, params.sigma0));
  const double mu_L = lagrangian_curvature(built.problem.objective().curvature,
                                           built.problem.constraints().curvatures(),
                                           params.lambda_cap);
  out["mu_lagrangian"] = json_number(mu_L);
  out["beta_limit"] =
      json_number(beta_bound(params.epsilon, params.gamma, mu_L, params.xbar));

  Json brackets = Json::array();
  for (long long k : {100LL, 1000LL, 10000LL, 100000LL, 1000000LL}) {
    const BoundReport report =
        bound_report(k, params.alpha, params.epsilon, params.sigma0,
                     params.lambda_cap, gbar_used, m);
    Json row;
    row["k"] = k;
    row["main_lower"] = json_number(report.main_lower);
    row["main_upper"] = json_number(report.main_upper);
    row["slackness_lower"] = json_number(report.slackness_lower);
    row["slackness_upper"] = json_number(report.slackness_upper);
    row["feasibility_cap"] = json_number(report.feasibility_caps[0]);
    row["lag_avg_lower"] = json_number(report.lag_avg_lower);
    row["lag_avg_upper"] = json_number(report.lag_avg_upper);
    brackets.push_back(std::move(row));
  }
  out["brackets"] = std::move(brackets);
  return out;
}

}  // namespace

Json experiment_bounds(const Config& config) {
  switch (experiment_kind(config)) {
    case ExperimentKind::exp_example:
      return constrained_bounds(build_exp_example(config));
    case ExperimentKind::privacy:
      return constrained_bounds(build_privacy_example(config));
    case ExperimentKind::fig_q: {
      const BuiltTrackingExperiment built = build_fig_q_example(config);
      Json out;
      out["sigma1"] = json_number(sigma1_bound(built.system.A, built.actions));
      out["sigma2"] =
          json_number(built.arrivals.sigma2_claim.value_or(0.0));
      out["alpha"] = json_number(built.config.alpha);
      out["beta"] = json_number(built.config.beta);
      out["bound"] = json_number(tracking_gap_bound(
          built.config.alpha, built.config.beta,
          sigma1_bound(built.system.A, built.actions),
          built.arrivals.sigma2_claim.value_or(0.0),
          static_cast<int>(built.system.A.rows())));
      return out;
    }
    case ExperimentKind::custom: {
      auto built = build_custom_experiment(config);
      if (std::holds_alternative<BuiltConstrainedExperiment>(built)) {
        return constrained_bounds(std::get<BuiltConstrainedExperiment>(built));
      }
      const auto& unconstrained = std::get<BuiltUnconstrainedExperiment>(built);
      Json out;
      out["mode"] = "unconstrained";
      out["beta"] = json_number(unconstrained.initial.beta);
      out["beta_limit"] = json_number(
          beta_bound(unconstrained.config.epsilon, unconstrained.config.gamma,
                     unconstrained.problem.objective().curvature,
                     resolve_xbar(config, unconstrained.problem.actions())));
      return out;
    }
  }
  throw ValidationError("unreachable experiment kind");
}

Json experiment_oracle(const Config& config, const std::optional<Vector>& lambda) {
  const ExperimentKind kind = experiment_kind(config);
  if (kind == ExperimentKind::fig_q) {
    throw ValidationError(
        "the tracking experiment has no reference problem; 'oracle' applies to "
        "exp_example, privacy and custom configs");
  }

  OracleOptions options;
  options.tolerance = config.get_double("solver.oracle_tolerance", 1e-8);

  const ProblemInstance* problem = nullptr;
  RunHooks hooks;
  std::optional<BuiltConstrainedExperiment> constrained;
  std::optional<BuiltUnconstrainedExperiment> unconstrained;
  if (kind == ExperimentKind::exp_example) {
    constrained = build_exp_example(config);
  } else if (kind == ExperimentKind::privacy) {
    constrained = build_privacy_example(config);
  } else {
    auto built = build_custom_experiment(config);
    if (std::holds_alternative<BuiltConstrainedExperiment>(built)) {
      constrained = std::get<BuiltConstrainedExperiment>(std::move(built));
    } else {
      unconstrained = std::get<BuiltUnconstrainedExperiment>(std::move(built));
    }
  }
  if (constrained) {
    problem = &constrained->problem;
    hooks = constrained->hooks;
  } else {
    problem = &unconstrained->problem;
  }

  Json out;
  if (constrained && constrained->params.f_star) {
    out["f_star"] = json_number(*constrained->params.f_star);
    out["f_star_source"] = "configuration";
  } else {
    const ReferenceSolution primal = reference_primal(*problem, options);
    out["f_star"] = json_number(primal.value);
    out["f_star_source"] = "reference_solve";
    out["argpoint"] = json_vector(primal.argpoint);
    out["tolerance_achieved"] = json_number(primal.tolerance_achieved);
    if (primal.multipliers.size() > 0) {
      out["multipliers"] = json_vector(primal.multipliers);
    }
  }

  if (lambda) {
    if (!problem->constrained()) {
      throw ValidationError("q(lambda) requires a constrained problem");
    }
    if (lambda->size() != problem->m()) {
      throw ValidationError("--lambda must supply " +
                            std::to_string(problem->m()) + " values");
    }
    if ((lambda->array() < 0.0).any()) {
      throw ValidationError("--lambda values must be nonnegative");
    }
    const double q = hooks.dual_value
                         ? hooks.dual_value(*lambda)
                         : reference_dual(*problem, *lambda, options).value;
    out["q_lambda"] = json_number(q);
    out["lambda"] = json_vector(*lambda);
  }
  return out;
}

}  // namespace mwopt
