#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gje/solver.hpp"
#include "helpers.hpp"

using namespace gje;
using namespace gje::testing;

namespace {

TargetDensity uniform_1d(int grid = 512) {
  return TargetDensity::make(box1(0, 1), [](const Vec&) { return 1.0; }, grid);
}

SemiDiscreteProblem two_point_problem(const GeneratorSpec& gen, double m0, double m1) {
  SemiDiscreteProblem prob;
  prob.gen = &gen;
  prob.points = {v1(0.0), v1(1.0)};
  prob.masses = {m0, m1};
  prob.target = uniform_1d();
  prob.pin_height = 0.0;
  double sum = m0 + m1;
  for (double& m : prob.masses) m *= prob.target.total / sum;
  return prob;
}

// Closed-form heights for classical 1-D problems with a uniform unit
// target: sorted points, cell boundaries at the prescribed cumulative
// masses, consecutive height differences b_k (x_{k+1} - x_k), anchored at
// the pin. Independent of the solver's descent loop.
std::vector<double> classical_1d_oracle(const std::vector<Vec>& points,
                                        const std::vector<double>& masses, double pin_height) {
  const int n = static_cast<int>(points.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return points[a][0] < points[b][0]; });
  double total = std::accumulate(masses.begin(), masses.end(), 0.0);

  std::vector<double> u(n, 0.0);
  double cum = 0.0;
  for (int k = 0; k + 1 < n; ++k) {
    cum += masses[order[k]] / total;
    u[order[k + 1]] = u[order[k]] + cum * (points[order[k + 1]][0] - points[order[k]][0]);
  }
  double shift = pin_height - u[0];
  for (double& h : u) h += shift;
  return u;
}

}  // namespace

TEST_CASE("two equal point masses split the interval at one half") {
  ClassicalGenerator gen(1);
  SemiDiscreteProblem prob = two_point_problem(gen, 0.5, 0.5);
  SolveState st = solve(prob);
  CHECK(st.converged);
  CHECK(st.residual <= prob.tol_mass);
  // boundary between the dual pieces sits at y = u1, so u1 = 0.5
  CHECK(st.heights[0] == doctest::Approx(0.0));
  CHECK(st.heights[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(st.mu[0] == doctest::Approx(prob.masses[0]).epsilon(1e-5));
}

TEST_CASE("asymmetric masses move the boundary to the prescribed quantile") {
  ClassicalGenerator gen(1);
  SemiDiscreteProblem prob = two_point_problem(gen, 0.3, 0.7);
  SolveState st = solve(prob);
  CHECK(st.converged);
  CHECK(st.heights[1] == doctest::Approx(0.3).epsilon(1e-5));
}

TEST_CASE("multi-point 1-D solve matches the closed-form oracle") {
  ClassicalGenerator gen(1);
  SemiDiscreteProblem prob;
  prob.gen = &gen;
  prob.points = {v1(0.1), v1(0.35), v1(0.6), v1(0.85), v1(0.95)};
  prob.masses = {0.15, 0.2, 0.3, 0.25, 0.1};
  prob.target = uniform_1d();
  prob.pin_height = 0.25;
  double sum = std::accumulate(prob.masses.begin(), prob.masses.end(), 0.0);
  for (double& m : prob.masses) m *= prob.target.total / sum;

  SolveState st = solve(prob);
  CHECK(st.converged);
  std::vector<double> oracle = classical_1d_oracle(prob.points, prob.masses, prob.pin_height);
  for (int i = 0; i < prob.size(); ++i)
    CHECK(std::abs(st.heights[i] - oracle[i]) <= 1e-5);
  for (int i = 0; i < prob.size(); ++i)
    CHECK(std::abs(st.mu[i] - prob.masses[i]) <= prob.tol_mass * prob.target.total);
}

TEST_CASE("four corner points with quarter masses get centered quadrants") {
  ClassicalGenerator gen(2);
  SemiDiscreteProblem prob;
  prob.gen = &gen;
  prob.points = {v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)};
  prob.masses = {0.25, 0.25, 0.25, 0.25};
  prob.target = TargetDensity::make(Box::unit(2), [](const Vec&) { return 1.0; }, 256);
  prob.pin_height = 0.0;
  for (double& m : prob.masses) m *= prob.target.total;

  SolveState st = solve(prob);
  CHECK(st.converged);
  // hand-derived power diagram: u = (0, 0.5, 0.5, 1) gives quadrant cells
  std::vector<double> expect = {0.0, 0.5, 0.5, 1.0};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(st.heights[i] - expect[i]) <= 1e-4);
}

TEST_CASE("initial state parks all mass in the pin cell") {
  ClassicalGenerator gen(1);
  SemiDiscreteProblem prob = two_point_problem(gen, 0.5, 0.5);
  SolveState st = init_state(prob);
  CHECK(st.mu[0] == doctest::Approx(prob.target.total).epsilon(1e-9));
  CHECK(st.heights[0] == prob.pin_height);
}

TEST_CASE("descent sweeps only lower heights") {
  ClassicalGenerator gen(1);
  SemiDiscreteProblem prob = two_point_problem(gen, 0.4, 0.6);
  SolveState st = init_state(prob);
  std::vector<double> before = st.heights;
  for (int k = 0; k < 5; ++k) {
    descend(prob, st);
    for (int i = 1; i < prob.size(); ++i) CHECK(st.heights[i] <= before[i] + 1e-12);
    before = st.heights;
  }
  for (size_t k = 1; k < st.height_sum_trace.size(); ++k)
    CHECK(st.height_sum_trace[k] <= st.height_sum_trace[k - 1] + 1e-12);
}

TEST_CASE("validation rejects inconsistent problems") {
  ClassicalGenerator gen(1);
  SemiDiscreteProblem prob = two_point_problem(gen, 0.5, 0.5);
  prob.masses[0] = -0.1;
  CHECK_THROWS_AS(prob.validate(), ConfigError);

  SemiDiscreteProblem unbalanced = two_point_problem(gen, 0.5, 0.5);
  unbalanced.masses = {10.0, 10.0};
  CHECK_THROWS_AS(unbalanced.validate(), ConfigError);
}

TEST_CASE("refined partitions converge to the pinned quadratic potential") {
  ClassicalGenerator gen(1);
  TargetDensity target = uniform_1d();
  // off-center pin: centered sample points make every level exact, which
  // would defeat the strict-decrease check
  Vec pin_x = v1(0.2);
  double pin_height = 0.0;
  RefinedSolve rs = refine_and_solve(
      gen, box1(0, 1), [](const Vec&) { return 1.0; }, {2, 4, 8}, pin_x, pin_height, target);
  REQUIRE(rs.states.size() == 3);

  // continuum solution: Du = x, u = x^2/2 + c with u(pin) = 0
  double c = pin_height - 0.5 * pin_x[0] * pin_x[0];
  std::vector<double> sup_err;
  for (size_t l = 0; l < rs.states.size(); ++l) {
    CHECK(rs.states[l].converged);
    double worst = 0;
    for (int i = 0; i < rs.problems[l].size(); ++i) {
      double xi = rs.problems[l].points[i][0];
      worst = std::max(worst, std::abs(rs.states[l].heights[i] - (0.5 * xi * xi + c)));
    }
    sup_err.push_back(worst);
  }
  CHECK(sup_err[1] < sup_err[0]);
  CHECK(sup_err[2] < sup_err[1]);
  CHECK(sup_err[2] <= 1.0 / 8.0);  // Lipschitz modulus of u over one cell
}

TEST_CASE("focus containment holds on solved-style hinge pairs") {
  ClassicalGenerator gen(1);
  PiecewiseGConvex u, v;
  u.orientation = v.orientation = Orientation::Primal;
  u.domain = v.domain = box1(0, 1);
  u.pieces = {{v1(0.0), 0.0}, {v1(1.0), 0.3}};
  v.pieces = {{v1(0.0), 0.0}, {v1(1.0), 0.5}};

  ContainmentReport rep = aleksandrov_mccann_check(gen, u, v, 512);
  CHECK(rep.strictly_above > 0);
  CHECK(rep.violations == 0);

  // negative control: an absurd matching tolerance marks every focus as
  // captured, so points with u <= v must get flagged
  ContainmentReport neg = aleksandrov_mccann_check(gen, u, v, 512, 1e6);
  CHECK(neg.violations > 0);
}

TEST_CASE("comparison principle probe distinguishes applicable pairs") {
  ClassicalGenerator gen(1);
  TargetDensity target = uniform_1d();

  PiecewiseGConvex u, v;
  u.orientation = v.orientation = Orientation::Primal;
  u.domain = v.domain = box1(0, 1);
  // u carries a full-mass atom, v a half-mass atom
  u.pieces = {{v1(0.0), 0.05}, {v1(1.0), 0.55}};
  v.pieces = {{v1(0.1), 0.0}, {v1(0.9), 0.4}};

  ComparisonReport rep = comparison_check(gen, u, v, target, 512);
  CHECK(rep.applicable);
  CHECK(rep.boundary_ok);
  CHECK(rep.conclusion_holds);

  // equal-mass pair: the strict dominance hypothesis fails
  PiecewiseGConvex w = u;
  for (auto& piece : w.pieces) piece.z += 0.01;
  ComparisonReport na = comparison_check(gen, u, w, target, 512);
  CHECK(!na.applicable);
}

TEST_CASE("two pinned solves of the same problem agree") {
  ClassicalGenerator gen(1);
  SemiDiscreteProblem prob = two_point_problem(gen, 0.35, 0.65);
  SolveState a = solve(prob);
  SemiDiscreteProblem prob2 = prob;
  prob2.delta_start = 5e-2;  // different initialization path
  SolveState b = solve(prob2);
  for (int i = 0; i < prob.size(); ++i) CHECK(std::abs(a.heights[i] - b.heights[i]) <= 1e-4);
}
