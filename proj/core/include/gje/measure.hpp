#pragma once

// The measure side: quadrature descriptions of the target density f*, cell
// decompositions of the target induced by a dual piecewise function, and
// the atomic measure carried by a primal piecewise function.

#include <functional>

#include "gje/gconvex.hpp"

namespace gje {

struct TargetDensity {
  Box domain;                               // bounding box of the target
  std::vector<Vec> polygon;                 // optional 2-D region (CCW); empty = box
  std::function<double(const Vec&)> density;  // f* > 0 on the region

  std::vector<Vec> nodes;
  std::vector<double> weights;  // includes the density factor
  double total = 0.0;

  bool inside(const Vec& y) const;

  // Tensor midpoint grid for n <= 2; Monte Carlo for n >= 3.
  static TargetDensity make(const Box& domain, std::function<double(const Vec&)> density,
                            int grid_per_dim = 256, std::uint64_t mc_seed = 0xC0FFEE,
                            int mc_samples = 1000000);
  static TargetDensity make_polygon(std::vector<Vec> polygon,
                                    std::function<double(const Vec&)> density,
                                    int grid_per_dim = 256);
};

// Decomposition of the target into cells C_i = {y : piece i attains the max}.
struct CellDecomposition {
  std::vector<int> assignment;   // per quadrature node, argmax piece
  std::vector<std::uint8_t> tied;  // per quadrature node, >= 2 pieces tie
  double tie_fraction = 0.0;
  std::vector<double> masses;    // per piece, integral of f* over the cell
  std::string engine;            // "interval" | "polygon" | "nodes"

  // exact engines only: per-piece cell geometry
  std::vector<std::vector<std::pair<double, double>>> intervals;  // 1-D
  std::vector<std::vector<Vec>> polygons;                          // 2-D
};

// Masses only. Picks the most accurate engine available: exact interval
// splitting in 1-D, halfplane clipping when dual comparisons are affine in
// 2-D, quadrature-node assignment otherwise.
std::vector<double> cell_masses(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                                const TargetDensity& target);

CellDecomposition cell_decomposition(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                                     const TargetDensity& target);

// Atom of the measure mu_{u,f*} carried at a tie point of a primal
// function: mass = integral of f*(Y(x,u,p)) |det D_p Y| over the
// subdifferential hull.
struct MeasureAtom {
  Vec x;
  double mass = 0.0;
  std::vector<int> active;
  std::vector<Vec> hull;
};

std::vector<MeasureAtom> ma_measure_atoms(const GeneratorSpec& gen,
                                          const PiecewiseGConvex& primal,
                                          const TargetDensity& target);

// Measure of sample boxes: the sum of atom masses located inside each box.
std::vector<double> weak_convergence_probe(const std::vector<MeasureAtom>& atoms,
                                           const std::vector<Box>& probes);

// Integral of f* over a convex polygon (fan triangulation, degree-5 rule).
double polygon_integral(const std::vector<Vec>& poly,
                        const std::function<double(const Vec&)>& f);

double polygon_area(const std::vector<Vec>& poly);

// Clip a convex polygon by the halfplane {y : a.y + b >= 0}.
std::vector<Vec> clip_halfplane(const std::vector<Vec>& poly, const Vec& a, double b);

}  // namespace gje
