// Configuration parsing, CSV round trips, action-set geometry, problem
// validation and curvature arithmetic.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "mwopt/action_set.hpp"
#include "mwopt/config.hpp"
#include "mwopt/csv.hpp"
#include "mwopt/problem.hpp"
#include "mwopt/rng.hpp"
#include "mwopt/types.hpp"

using namespace mwopt;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("config: sections, types, defaults and overrides") {
  Config config = Config::parse_string(
      "# comment\n"
      "[solver]\n"
      "alpha = 1.5e-3   # trailing comment\n"
      "iterations = 1000\n"
      "strict = true\n"
      "mode = direct\n"
      "cap = auto\n"
      "weights = 1, 2.5, -3\n",
      "<test>");

  CHECK(config.get_double("solver.alpha") == doctest::Approx(1.5e-3));
  CHECK(config.get_int("solver.iterations") == 1000);
  CHECK(config.get_bool("solver.strict", false) == true);
  CHECK(config.get_string("solver.mode") == "direct");
  CHECK_FALSE(config.get_auto_double("solver.cap").has_value());
  CHECK_FALSE(config.get_auto_double("solver.missing").has_value());
  CHECK(config.get_double("solver.missing", 7.0) == 7.0);
  const Vector w = config.get_vector("solver.weights");
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 2.5);
  CHECK(w[2] == -3.0);

  config.apply_override("solver.alpha=2.0");
  CHECK(config.get_double("solver.alpha") == 2.0);
  config.apply_override("fresh.key=value");
  CHECK(config.get_string("fresh.key") == "value");

  CHECK_THROWS_AS((void)config.get_double("solver.mode"), ValidationError);
  CHECK_THROWS_AS((void)config.get_double("solver.nope"), ValidationError);
  CHECK_THROWS_AS(config.apply_override("no_equals_sign"), ValidationError);
  CHECK_THROWS_AS(Config::parse_string("[unterminated\n", "<t>"),
                  ValidationError);
  CHECK_THROWS_AS(Config::parse_string("key_without_section = 1\n[]\n", "<t>"),
                  ValidationError);
}

TEST_CASE("config: vector parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_vector("1, oops, 3", "field"), ValidationError);
  CHECK_THROWS_AS(parse_vector("", "field"), ValidationError);
  const Vector v = parse_vector(" 4 ", "field");
  REQUIRE(v.size() == 1);
  CHECK(v[0] == 4.0);
}

TEST_CASE("csv: doubles survive a write/read round trip bit-exactly") {
  Rng rng(20240817);
  for (int i = 0; i < 200; ++i) {
    double x = (rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform(-12, 12));
    if (i == 0) x = 0.1;
    if (i == 1) x = -0.0;
    if (i == 2) x = 1e-300;
    const std::string text = format_double(x);
    const double back = std::strtod(text.c_str(), nullptr);
    CHECK(back == x);
  }
}

TEST_CASE("csv: writer emits schema, header and rows; loader validates") {
  const auto path = temp_file("mwopt_csv_test.csv");
  {
    CsvWriter csv(path.string(), "test_schema_v1", {"b1", "b2"});
    csv.write_row({0.5, 1.0});
    csv.write_row({0.25, -2.0});
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# schema: test_schema_v1");
  std::getline(in, line);
  CHECK(line == "b1,b2");
  in.close();

  const auto rows = load_arrivals_csv(path.string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == 0.5);
  CHECK(rows[0][1] == 1.0);
  CHECK(rows[1][1] == -2.0);

  const auto bad = temp_file("mwopt_csv_bad.csv");
  {
    std::ofstream out(bad);
    out << "x1,x2\n1,2\n";
  }
  CHECK_THROWS_AS(load_arrivals_csv(bad.string()), ValidationError);
  std::filesystem::remove(path);
  std::filesystem::remove(bad);
}

TEST_CASE("action sets: geometry of corners, diameter and norms") {
  // Two points at distance 2 on the line: the enclosing-ball diameter is 2.
  ActionSet pair({Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)});
  CHECK(diameter(pair) == doctest::Approx(2.0));
  CHECK(max_point_norm(pair) == doctest::Approx(1.0));

  // A single point at norm 5: diameter convention is twice the largest norm.
  ActionSet single({vec2(3.0, 4.0)});
  CHECK(diameter(single) == doctest::Approx(10.0));
  CHECK(max_point_norm(single) == doctest::Approx(5.0));

  // Corners of [0, s]^3 with s = 1/sqrt(1.8).
  const double s = 1.0 / std::sqrt(1.8);
  ActionSet cube = box_corners(3, 0.0, s);
  REQUIRE(cube.size() == 8);
  CHECK(max_point_norm(cube) == doctest::Approx(s * std::sqrt(3.0)));
  CHECK(diameter(cube) == doctest::Approx(2.0 * s * std::sqrt(3.0)));
  // Bit j of the index selects the upper value of coordinate j.
  CHECK(cube.point(0).isZero());
  CHECK(cube.point(5)[0] == s);
  CHECK(cube.point(5)[1] == 0.0);
  CHECK(cube.point(5)[2] == s);

  CHECK_THROWS_AS(ActionSet(std::vector<Vector>{}), ValidationError);
  CHECK_THROWS_AS(ActionSet({vec2(0, 0), vec3(0, 0, 0)}), ValidationError);
}

TEST_CASE("problem: interior point must be strictly feasible and in the hull") {
  ConvexFunctionSpec f = make_linear(vec2(1.0, 1.0));
  ConstraintVector g;
  g.components.push_back(make_linear(vec2(-1.0, 0.0), 0.5));  // 0.5 - z1 <= 0

  ActionSet square = box_corners(2, 0.0, 1.0);

  ProblemInstance ok(f, g, square, vec2(0.75, 0.25));
  CHECK(ok.constrained());
  CHECK(ok.m() == 1);
  CHECK(ok.dimension() == 2);
  CHECK(ok.constraint_values(vec2(0.5, 0.0))[0] == doctest::Approx(0.0));

  // g(0.5, x) = 0 exactly: not strictly feasible.
  ConstraintVector g2;
  g2.components.push_back(make_linear(vec2(-1.0, 0.0), 0.5));
  CHECK_THROWS_AS(ProblemInstance(f, g2, square, vec2(0.5, 0.5)),
                  ValidationError);

  // Outside the hull.
  ConstraintVector g3;
  g3.components.push_back(make_linear(vec2(-1.0, 0.0), 0.5));
  CHECK_THROWS_AS(ProblemInstance(f, g3, square, vec2(1.5, 0.5)),
                  ValidationError);

  // Explicit weights must reproduce the point.
  ConstraintVector g4;
  g4.components.push_back(make_linear(vec2(-1.0, 0.0), 0.5));
  std::vector<double> right{0.25, 0.25, 0.25, 0.25};  // mean of corners = (.5,.5)
  CHECK_THROWS_AS(
      ProblemInstance(f, g4, square, vec2(0.75, 0.25), right),
      ValidationError);
  std::vector<double> exact{0.25, 0.5, 0.0, 0.25};  // -> (0.75, 0.25)
  ProblemInstance with_weights(f, g4, square, vec2(0.75, 0.25), exact);
  CHECK(with_weights.interior_point().isApprox(vec2(0.75, 0.25)));

  ProblemInstance unconstrained(f, square);
  CHECK_FALSE(unconstrained.constrained());
  CHECK(unconstrained.m() == 0);
  CHECK_THROWS_AS(unconstrained.constraint_values(vec2(0, 0)), ValidationError);
}

TEST_CASE("problem: largest constraint magnitude over vertices and probes") {
  ActionSet square = box_corners(2, 0.0, 1.0);
  ConvexFunctionSpec f = make_linear(vec2(0.0, 0.0));

  //  g = z1 - 1: magnitudes over corners are {1, 0} -> 1.
  ConstraintVector g;
  g.components.push_back(make_linear(vec2(1.0, 0.0), -1.0));
  ProblemInstance p(f, g, square, vec2(0.25, 0.25));
  CHECK(max_constraint_magnitude(p) == doctest::Approx(1.0));

  // The exp_example geometry: floors b_j = s j / 12 on [0, s]^3; the largest
  // magnitude is s * 11/12, attained by |b_1 - s| at a far corner.
  const double s = 1.0 / std::sqrt(1.8);
  ActionSet cube = box_corners(3, 0.0, s);
  ConstraintVector floors;
  for (int j = 1; j <= 3; ++j) {
    Vector c = Vector::Zero(3);
    c[j - 1] = -1.0;
    floors.components.push_back(make_linear(c, s * j / 12.0));
  }
  ProblemInstance q(f, floors, cube, Vector::Constant(3, s));
  CHECK(max_constraint_magnitude(q) == doctest::Approx(s * 11.0 / 12.0));
  CHECK(max_constraint_magnitude(q) == doctest::Approx(0.68324435).epsilon(1e-6));
}

TEST_CASE("problem: lagrangian curvature combines objective and constraints") {
  CHECK(lagrangian_curvature(0.0, Vector::Zero(3), 5.0) == 0.0);
  CHECK(lagrangian_curvature(0.6, Vector::Zero(3), 0.7) == doctest::Approx(0.6));
  Vector mu_g = vec2(0.5, 0.0);
  CHECK(lagrangian_curvature(0.1, mu_g, 2.0) == doctest::Approx(1.1));
  // Unbounded cap is harmless when every constraint is linear.
  CHECK(lagrangian_curvature(0.5, Vector::Zero(2),
                             std::numeric_limits<double>::infinity()) == 0.5);
  // Unbounded cap with curved constraints has no finite constant.
  CHECK(std::isinf(lagrangian_curvature(
      0.5, vec2(0.1, 0.0), std::numeric_limits<double>::infinity())));
}

TEST_CASE("rng: deterministic, seed-separated, in-range") {
  Rng a(42), b(42), c(43);
  bool all_equal = true;
  bool any_differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform01();
    all_equal = all_equal && (x == b.uniform01());
    any_differs = any_differs || (x != c.uniform01());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_differs);

  Rng d(7);
  for (int i = 0; i < 100; ++i) {
    const double u = d.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
    CHECK(d.uniform_index(5) < 5);
  }
}
