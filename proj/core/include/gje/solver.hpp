#pragma once

// Semi-discrete second boundary value problem: prescribe cell masses for
// finitely many source points, pin the zeroth height, and descend the
// remaining heights until every cell carries its prescribed mass.

#include "gje/measure.hpp"

namespace gje {

struct SemiDiscreteProblem {
  const GeneratorSpec* gen = nullptr;
  std::vector<Vec> points;      // x_0 .. x_N; x_0 carries the pinned height
  std::vector<double> masses;   // prescribed f_i > 0, balanced against the target
  TargetDensity target;
  double pin_height = 0.0;      // u_0
  double tol_mass = 1e-6;       // relative mass residual
  int max_outer = 10000;
  double delta_start = 1e-3;    // initial lift, times the height scale
  double tie_tol = 1e-9;

  int size() const { return static_cast<int>(points.size()); }
  void validate() const;  // throws ConfigError / PinOutOfRange
};

struct SolveState {
  std::vector<double> heights;
  std::vector<double> mu;        // current cell masses
  double residual = 0.0;         // max_i |mu_i - f_i| / total mass
  int outer_iterations = 0;
  bool converged = false;
  std::vector<double> height_sum_trace;  // descent functional per sweep
};

// Dual piecewise function carried by a state.
PiecewiseGConvex dual_function(const SemiDiscreteProblem& prob, const SolveState& state);

// Heights start at sup_y g(x_i, y, g*(x_0, y, u_0)) plus a small lift, so
// the pin cell initially carries all mass and every height is admissible.
SolveState init_state(const SemiDiscreteProblem& prob);

// One sweep: for each deficient cell, in order of descending deficit,
// bisect its height down until the cell mass reaches the prescription from
// below. Lowering one height only shrinks the other cells, so admissibility
// (mu_i <= f_i) is preserved.
void descend(const SemiDiscreteProblem& prob, SolveState& state);

// Sweeps until the residual drops below tol_mass. Throws NoConvergence
// after max_outer sweeps.
SolveState solve(const SemiDiscreteProblem& prob);

// Partition the source box into level^n cells, integrate the source
// density for the prescriptions, keep the pin location as the sample point
// of its cell, and solve. One state per level.
struct RefinedSolve {
  std::vector<SemiDiscreteProblem> problems;
  std::vector<SolveState> states;
};
RefinedSolve refine_and_solve(const GeneratorSpec& gen, const Box& source,
                              const std::function<double(const Vec&)>& source_density,
                              const std::vector<int>& levels, const Vec& pin_x,
                              double pin_height, const TargetDensity& target,
                              double tol_mass = 1e-6, int max_outer = 10000);

// Containment test behind the uniqueness argument: on the set {u > v} the
// focus image of u captures that of v. Violations are grid points x with
// Yv(x) in Yu({u > v}) but u(x) <= v(x).
struct ContainmentReport {
  int strictly_above = 0;   // grid points with u > v
  int captured = 0;         // grid points whose Yv value lies in Yu({u > v})
  int violations = 0;       // captured but not strictly above
  double sup_diff = 0.0;    // max |u - v|
};
ContainmentReport aleksandrov_mccann_check(const GeneratorSpec& gen,
                                           const PiecewiseGConvex& u,
                                           const PiecewiseGConvex& v, int grid_per_dim,
                                           double match_tol = 1e-6);

// Comparison principle probe: if u <= v on the boundary and the measure of
// u strictly dominates that of v, then u <= v inside. NOT-APPLICABLE when
// the strict dominance hypothesis fails.
struct ComparisonReport {
  bool applicable = false;
  bool boundary_ok = false;
  double max_interior_excess = 0.0;  // max (u - v) over interior grid
  bool conclusion_holds = false;
};
ComparisonReport comparison_check(const GeneratorSpec& gen, const PiecewiseGConvex& u,
                                  const PiecewiseGConvex& v, const TargetDensity& target,
                                  int grid_per_dim, double tol = 1e-9);

}  // namespace gje
