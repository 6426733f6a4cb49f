#pragma once

// Discrete parabolic flow on heights: du_i/dt = log(mu_i / f_i). The flow
// preserves total mass balance in the limit and keeps intersecting its
// initial data; its stationary points are the semi-discrete solutions with
// the height gauge fixed by the initial condition.

#include "gje/solver.hpp"

namespace gje {

struct FlowState {
  std::vector<double> heights;
  std::vector<double> mu;
  double t = 0.0;
  double dt = 0.0;        // last accepted step
  double residual = 0.0;  // max_i |log(mu_i / f_i)|
  int steps = 0;
};

// Floor applied to cell masses before taking logs, relative to total mass.
inline constexpr double kMassFloorRel = 1e-12;

FlowState flow_init(const SemiDiscreteProblem& prob, std::vector<double> heights);

// One explicit step. dt <= 0 picks 0.1 / residual. The step is halved (up
// to 20 times) whenever the residual grows by more than 10%.
void flow_step(const SemiDiscreteProblem& prob, FlowState& state, double dt = 0.0);

struct FlowTrajectory {
  std::vector<FlowState> snapshots;
  bool converged = false;
  // shift range of the final heights against the initial ones; the
  // intersection property asks for 0 inside [min_shift, max_shift]
  double min_shift = 0.0;
  double max_shift = 0.0;
};

FlowTrajectory run_flow(const SemiDiscreteProblem& prob, std::vector<double> init_heights,
                        double tol, int max_steps, int snapshot_every = 1);

}  // namespace gje
