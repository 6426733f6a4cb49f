#include "gje/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gje {

namespace {

std::vector<double> flow_masses(const SemiDiscreteProblem& prob,
                                const std::vector<double>& heights) {
  PiecewiseGConvex v;
  v.orientation = Orientation::Dual;
  v.domain = prob.target.domain;
  v.tie_tol = prob.tie_tol;
  for (int i = 0; i < prob.size(); ++i) v.pieces.push_back({prob.points[i], heights[i]});
  std::vector<double> mu = cell_masses(*prob.gen, v, prob.target);
  double floor = kMassFloorRel * prob.target.total;
  for (double& m : mu) m = std::max(m, floor);
  return mu;
}

double flow_residual(const SemiDiscreteProblem& prob, const std::vector<double>& mu) {
  double r = 0.0;
  for (int i = 0; i < prob.size(); ++i)
    r = std::max(r, std::abs(std::log(mu[i] / prob.masses[i])));
  return r;
}

}  // namespace

FlowState flow_init(const SemiDiscreteProblem& prob, std::vector<double> heights) {
  if (static_cast<int>(heights.size()) != prob.size())
    throw ConfigError("flow_init: heights size mismatch");
  FlowState st;
  st.heights = std::move(heights);
  st.mu = flow_masses(prob, st.heights);
  st.residual = flow_residual(prob, st.mu);
  return st;
}

void flow_step(const SemiDiscreteProblem& prob, FlowState& state, double dt) {
  const int N = prob.size();
  if (state.mu.empty()) state.mu = flow_masses(prob, state.heights);
  double r0 = flow_residual(prob, state.mu);
  if (dt <= 0.0) dt = r0 > 1e-14 ? 0.1 / r0 : 0.1;

  for (int attempt = 0; attempt < 20; ++attempt) {
    std::vector<double> trial = state.heights;
    for (int i = 0; i < N; ++i)
      trial[i] += dt * std::log(state.mu[i] / prob.masses[i]);
    std::vector<double> mu = flow_masses(prob, trial);
    double r = flow_residual(prob, mu);
    if (r <= 1.1 * r0 || r0 <= 1e-14) {
      state.heights = std::move(trial);
      state.mu = std::move(mu);
      state.residual = r;
      state.t += dt;
      state.dt = dt;
      ++state.steps;
      return;
    }
    dt *= 0.5;
  }
  throw NoConvergence("flow_step: step size collapsed without residual control");
}

FlowTrajectory run_flow(const SemiDiscreteProblem& prob, std::vector<double> init_heights,
                        double tol, int max_steps, int snapshot_every) {
  FlowTrajectory traj;
  FlowState st = flow_init(prob, init_heights);
  traj.snapshots.push_back(st);
  for (int k = 0; k < max_steps && st.residual > tol; ++k) {
    flow_step(prob, st);
    if ((k + 1) % std::max(1, snapshot_every) == 0 || st.residual <= tol)
      traj.snapshots.push_back(st);
  }
  traj.converged = st.residual <= tol;
  if (traj.snapshots.back().steps != st.steps) traj.snapshots.push_back(st);
  traj.min_shift = std::numeric_limits<double>::infinity();
  traj.max_shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < prob.size(); ++i) {
    double s = st.heights[i] - init_heights[i];
    traj.min_shift = std::min(traj.min_shift, s);
    traj.max_shift = std::max(traj.max_shift, s);
  }
  return traj;
}

}  // namespace gje
