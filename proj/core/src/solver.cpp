#include "gje/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gje {

void SemiDiscreteProblem::validate() const {
  if (!gen) throw ConfigError("semi-discrete problem: no generator");
  if (points.empty()) throw ConfigError("semi-discrete problem: no points");
  if (points.size() != masses.size())
    throw ConfigError("semi-discrete problem: points/masses size mismatch");
  for (double m : masses)
    if (!(m > 0.0)) throw ConfigError("semi-discrete problem: masses must be positive");
  if (!gen->heights.contains(pin_height))
    throw PinOutOfRange("pin height " + format_double(pin_height) +
                        " outside the admissible interval");
  double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (std::abs(total - target.total) > 1e-6 * std::max(1.0, target.total))
    throw ConfigError("semi-discrete problem: masses sum to " + format_double(total) +
                      " but the target carries " + format_double(target.total));
}

PiecewiseGConvex dual_function(const SemiDiscreteProblem& prob, const SolveState& state) {
  PiecewiseGConvex v;
  v.orientation = Orientation::Dual;
  v.domain = prob.target.domain;
  v.tie_tol = prob.tie_tol;
  for (int i = 0; i < prob.size(); ++i) v.pieces.push_back({prob.points[i], state.heights[i]});
  return v;
}

namespace {

std::vector<double> masses_of(const SemiDiscreteProblem& prob, const SolveState& state) {
  return cell_masses(*prob.gen, dual_function(prob, state), prob.target);
}

double residual_of(const SemiDiscreteProblem& prob, const std::vector<double>& mu) {
  double r = 0.0;
  for (int i = 0; i < prob.size(); ++i) r = std::max(r, std::abs(mu[i] - prob.masses[i]));
  return r / prob.target.total;
}

}  // namespace

SolveState init_state(const SemiDiscreteProblem& prob) {
  prob.validate();
  const GeneratorSpec& gen = *prob.gen;
  const int N = prob.size();
  double height_scale = std::max(1.0, std::abs(prob.pin_height));
  double lift = prob.delta_start * height_scale;

  SolveState st;
  st.heights.assign(N, prob.pin_height);
  for (int i = 1; i < N; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& y : prob.target.nodes) {
      double z = gen.g_star(prob.points[0], y, prob.pin_height);
      best = std::max(best, gen.value(prob.points[i], y, z));
    }
    double ui = best + lift;
    if (!gen.heights.contains(ui))
      throw PinOutOfRange("initial height " + format_double(ui) + " for point " +
                          std::to_string(i) + " leaves the admissible interval");
    st.heights[i] = ui;
  }
  st.mu = masses_of(prob, st);
  st.residual = residual_of(prob, st.mu);
  return st;
}

void descend(const SemiDiscreteProblem& prob, SolveState& state) {
  const GeneratorSpec& gen = *prob.gen;
  const int N = prob.size();
  const double total = prob.target.total;
  // Per-cell slack: the pin cell absorbs every other cell's slack, so it
  // must be divided out for the global residual to reach tol_mass.
  const double tol_abs = 0.25 * prob.tol_mass * total / std::max(1, N - 1);
  double height_scale = std::max(1.0, std::abs(prob.pin_height));

  state.mu = masses_of(prob, state);

  // cells with no mass first, then by descending deficit
  std::vector<int> order;
  for (int i = 1; i < N; ++i) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    bool ea = state.mu[a] <= 0.0, eb = state.mu[b] <= 0.0;
    if (ea != eb) return ea;
    return prob.masses[a] - state.mu[a] > prob.masses[b] - state.mu[b];
  });

  for (int i : order) {
    double fi = prob.masses[i];
    double mui = state.mu[i];
    if (fi - mui <= tol_abs) continue;

    auto mass_at = [&](double ui) {
      double save = state.heights[i];
      state.heights[i] = ui;
      double m = masses_of(prob, state)[i];
      state.heights[i] = save;
      return m;
    };

    // bracket: lower until the cell overshoots its prescription
    double u_hi = state.heights[i];
    double step = prob.delta_start * height_scale;
    double u_lo = u_hi;
    bool bracketed = false;
    for (int k = 0; k < 60; ++k) {
      u_lo = std::max(u_hi - step, gen.heights.lo);
      if (mass_at(u_lo) >= fi) {
        bracketed = true;
        break;
      }
      if (u_lo <= gen.heights.lo) break;
      step *= 2.0;
    }
    if (!bracketed) {
      // the admissible interval caps the descent; take the floor
      state.heights[i] = u_lo;
      state.mu = masses_of(prob, state);
      continue;
    }

    // monotone bisection: mass decreases in the height
    for (int k = 0; k < 40; ++k) {
      double mid = 0.5 * (u_lo + u_hi);
      double m = mass_at(mid);
      if (m > fi)
        u_lo = mid;
      else
        u_hi = mid;
      if (k >= 8 && fi - mass_at(u_hi) <= tol_abs) break;
    }
    state.heights[i] = u_hi;  // admissible side: mu_i <= f_i
    state.mu = masses_of(prob, state);
  }

  state.residual = residual_of(prob, state.mu);
  state.height_sum_trace.push_back(
      std::accumulate(state.heights.begin(), state.heights.end(), 0.0));
  ++state.outer_iterations;
}

SolveState solve(const SemiDiscreteProblem& prob) {
  SolveState st = init_state(prob);
  for (int sweep = 0; sweep < prob.max_outer; ++sweep) {
    descend(prob, st);
    if (st.residual <= prob.tol_mass) {
      st.converged = true;
      return st;
    }
  }
  throw NoConvergence("semi-discrete solve: residual " + format_double(st.residual) +
                      " after " + std::to_string(prob.max_outer) + " sweeps");
}

RefinedSolve refine_and_solve(const GeneratorSpec& gen, const Box& source,
                              const std::function<double(const Vec&)>& source_density,
                              const std::vector<int>& levels, const Vec& pin_x,
                              double pin_height, const TargetDensity& target, double tol_mass,
                              int max_outer) {
  const int n = source.dim();
  RefinedSolve out;
  for (int L : levels) {
    if (L < 1) throw ConfigError("refine_and_solve: level must be >= 1");
    SemiDiscreteProblem prob;
    prob.gen = &gen;
    prob.target = target;
    prob.pin_height = pin_height;
    prob.tol_mass = tol_mass;
    prob.max_outer = max_outer;

    // cell masses by per-cell tensor midpoint quadrature
    const int sub = 8;
    std::vector<int> idx(n, 0);
    std::vector<Vec> pts;
    std::vector<double> ms;
    int pin_cell = -1;
    while (true) {
      Box cell;
      cell.lo = Vec(n);
      cell.hi = Vec(n);
      for (int i = 0; i < n; ++i) {
        double w = (source.hi[i] - source.lo[i]) / L;
        cell.lo[i] = source.lo[i] + w * idx[i];
        cell.hi[i] = cell.lo[i] + w;
      }
      double m = 0.0;
      std::vector<int> sidx(n, 0);
      double subvol = cell.volume() / std::pow(sub, n);
      while (true) {
        Vec x(n);
        for (int i = 0; i < n; ++i)
          x[i] = cell.lo[i] + (cell.hi[i] - cell.lo[i]) * (sidx[i] + 0.5) / sub;
        m += subvol * source_density(x);
        int c = 0;
        while (c < n && ++sidx[c] == sub) sidx[c++] = 0;
        if (c == n) break;
      }
      Vec point = cell.center();
      if (pin_cell < 0 && cell.contains(pin_x, 1e-12)) {
        pin_cell = static_cast<int>(pts.size());
        point = pin_x;
      }
      pts.push_back(point);
      ms.push_back(m);
      int c = 0;
      while (c < n && ++idx[c] == L) idx[c++] = 0;
      if (c == n) break;
    }
    if (pin_cell < 0) throw ConfigError("refine_and_solve: pin point outside the source box");
    std::swap(pts[0], pts[pin_cell]);
    std::swap(ms[0], ms[pin_cell]);

    // balance against the target mass
    double total = std::accumulate(ms.begin(), ms.end(), 0.0);
    for (double& m : ms) m *= target.total / total;

    prob.points = std::move(pts);
    prob.masses = std::move(ms);
    out.states.push_back(solve(prob));
    out.problems.push_back(std::move(prob));
  }
  return out;
}

// Containment / comparison ----------------------------------------------------

namespace {

std::vector<Vec> box_grid(const Box& b, int per_dim) {
  std::vector<Vec> pts;
  const int n = b.dim();
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i)
      x[i] = per_dim == 1 ? b.center()[i]
                          : b.lo[i] + (b.hi[i] - b.lo[i]) * idx[i] / (per_dim - 1);
    pts.push_back(x);
    int c = 0;
    while (c < n && ++idx[c] == per_dim) idx[c++] = 0;
    if (c == n) break;
  }
  return pts;
}

// active focus points of a primal piecewise function at x
std::vector<Vec> focuses(const GeneratorSpec& gen, const PiecewiseGConvex& u, const Vec& x) {
  std::vector<Vec> out;
  for (int i : active_set(gen, u, x).indices) out.push_back(u.pieces[i].y);
  return out;
}

}  // namespace

ContainmentReport aleksandrov_mccann_check(const GeneratorSpec& gen, const PiecewiseGConvex& u,
                                           const PiecewiseGConvex& v, int grid_per_dim,
                                           double match_tol) {
  if (u.orientation != Orientation::Primal || v.orientation != Orientation::Primal)
    throw Error("aleksandrov_mccann_check: expected primal functions");

  ContainmentReport rep;
  std::vector<Vec> grid = box_grid(u.domain, grid_per_dim);

  // collect the focus image of u over {u > v}
  std::vector<Vec> image;
  std::vector<std::uint8_t> above(grid.size(), 0);
  for (size_t k = 0; k < grid.size(); ++k) {
    double du = eval(gen, u, grid[k]);
    double dv = eval(gen, v, grid[k]);
    rep.sup_diff = std::max(rep.sup_diff, std::abs(du - dv));
    if (du > dv + 1e-12) {
      above[k] = 1;
      ++rep.strictly_above;
      for (const Vec& y : focuses(gen, u, grid[k])) image.push_back(y);
    }
  }

  auto in_image = [&](const Vec& y) {
    for (const Vec& q : image)
      if ((q - y).norm() <= match_tol) return true;
    return false;
  };

  for (size_t k = 0; k < grid.size(); ++k) {
    bool captured = false;
    for (const Vec& y : focuses(gen, v, grid[k]))
      if (in_image(y)) {
        captured = true;
        break;
      }
    if (captured) {
      ++rep.captured;
      if (!above[k]) ++rep.violations;
    }
  }
  return rep;
}

ComparisonReport comparison_check(const GeneratorSpec& gen, const PiecewiseGConvex& u,
                                  const PiecewiseGConvex& v, const TargetDensity& target,
                                  int grid_per_dim, double tol) {
  if (u.orientation != Orientation::Primal || v.orientation != Orientation::Primal)
    throw Error("comparison_check: expected primal functions");
  ComparisonReport rep;

  // strict measure dominance: every atom mass of u exceeds the matching
  // atom mass of v, and u carries strictly more total atomic mass
  std::vector<MeasureAtom> au = ma_measure_atoms(gen, u, target);
  std::vector<MeasureAtom> av = ma_measure_atoms(gen, v, target);
  double tu = 0.0, tv = 0.0;
  for (const auto& a : au) tu += a.mass;
  for (const auto& a : av) tv += a.mass;
  rep.applicable = tu > tv + tol;
  if (!rep.applicable) return rep;

  // boundary hypothesis and interior conclusion on the grid
  std::vector<Vec> grid = box_grid(u.domain, grid_per_dim);
  rep.boundary_ok = true;
  rep.max_interior_excess = -std::numeric_limits<double>::infinity();
  for (const Vec& x : grid) {
    bool boundary = false;
    for (int i = 0; i < u.domain.dim(); ++i)
      if (std::abs(x[i] - u.domain.lo[i]) < 1e-12 || std::abs(x[i] - u.domain.hi[i]) < 1e-12)
        boundary = true;
    double d = eval(gen, u, x) - eval(gen, v, x);
    if (boundary) {
      if (d > tol) rep.boundary_ok = false;
    } else {
      rep.max_interior_excess = std::max(rep.max_interior_excess, d);
    }
  }
  rep.conclusion_holds = rep.boundary_ok && rep.max_interior_excess <= tol;
  return rep;
}

}  // namespace gje
