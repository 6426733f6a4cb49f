// Microbenchmarks for the hot paths: the damped Newton (y,z) inversion,
// cell-mass evaluation per engine, and one full solver sweep.

#include <benchmark/benchmark.h>

#include <numeric>

#include "gje/solver.hpp"

using namespace gje;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

TargetDensity uniform(const Box& b, int grid) {
  return TargetDensity::make(b, [](const Vec&) { return 1.0; }, grid);
}

PiecewiseGConvex random_dual(Rng& rng, int n, int pieces) {
  PiecewiseGConvex v;
  v.orientation = Orientation::Dual;
  v.domain = Box::unit(n);
  for (int i = 0; i < pieces; ++i)
    v.pieces.push_back({random_in_box(rng, Box::unit(n)), 0.1 * (i % 3)});
  return v;
}

void bm_solve_yz(benchmark::State& state) {
  PerturbedGenerator gen(2, 0.1);
  Rng rng(7);
  std::vector<JetPoint> jets;
  for (int i = 0; i < 64; ++i) {
    JetPoint jet;
    jet.x = random_in_box(rng, Box::unit(2));
    jet.u = 0.1;
    jet.p = 0.5 * random_in_box(rng, Box::unit(2));
    jets.push_back(jet);
  }
  size_t k = 0;
  for (auto _ : state) {
    YZSolution sol = solve_yz(gen, jets[k++ % jets.size()]);
    benchmark::DoNotOptimize(sol.y);
  }
}
BENCHMARK(bm_solve_yz);

void bm_cell_masses_interval(benchmark::State& state) {
  ClassicalGenerator gen(1);
  Rng rng(11);
  PiecewiseGConvex v = random_dual(rng, 1, static_cast<int>(state.range(0)));
  TargetDensity target = uniform(Box::unit(1), 512);
  for (auto _ : state) {
    std::vector<double> m = cell_masses(gen, v, target);
    benchmark::DoNotOptimize(m.data());
  }
}
BENCHMARK(bm_cell_masses_interval)->Arg(4)->Arg(16)->Arg(64);

void bm_cell_masses_polygon(benchmark::State& state) {
  ClassicalGenerator gen(2);
  Rng rng(13);
  PiecewiseGConvex v = random_dual(rng, 2, static_cast<int>(state.range(0)));
  TargetDensity target = uniform(Box::unit(2), 128);
  for (auto _ : state) {
    std::vector<double> m = cell_masses(gen, v, target);
    benchmark::DoNotOptimize(m.data());
  }
}
BENCHMARK(bm_cell_masses_polygon)->Arg(4)->Arg(16);

void bm_cell_masses_nodes(benchmark::State& state) {
  PerturbedGenerator gen(2, 0.1);
  Rng rng(17);
  PiecewiseGConvex v = random_dual(rng, 2, static_cast<int>(state.range(0)));
  TargetDensity target = uniform(Box::unit(2), 64);
  for (auto _ : state) {
    std::vector<double> m = cell_masses(gen, v, target);
    benchmark::DoNotOptimize(m.data());
  }
}
BENCHMARK(bm_cell_masses_nodes)->Arg(4)->Arg(16);

void bm_solver_sweep(benchmark::State& state) {
  ClassicalGenerator gen(1);
  int n = static_cast<int>(state.range(0));
  SemiDiscreteProblem prob;
  prob.gen = &gen;
  for (int i = 0; i < n; ++i) {
    prob.points.push_back(v1((i + 0.5) / n));
    prob.masses.push_back(1.0);
  }
  prob.target = uniform(Box::unit(1), 512);
  double sum = std::accumulate(prob.masses.begin(), prob.masses.end(), 0.0);
  for (double& m : prob.masses) m *= prob.target.total / sum;
  SolveState init = init_state(prob);
  for (auto _ : state) {
    SolveState st = init;
    descend(prob, st);
    benchmark::DoNotOptimize(st.heights.data());
  }
}
BENCHMARK(bm_solver_sweep)->Arg(8)->Arg(32);

void bm_solve_four_corners(benchmark::State& state) {
  ClassicalGenerator gen(2);
  SemiDiscreteProblem prob;
  prob.gen = &gen;
  prob.points = {v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)};
  prob.masses = {0.25, 0.25, 0.25, 0.25};
  prob.target = uniform(Box::unit(2), 128);
  for (auto _ : state) {
    SolveState st = solve(prob);
    benchmark::DoNotOptimize(st.heights.data());
  }
}
BENCHMARK(bm_solve_four_corners);

}  // namespace

BENCHMARK_MAIN();
