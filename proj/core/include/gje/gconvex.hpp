#pragma once

// Piecewise g-convex functions: finite maxima of g-affine pieces, their
// subdifferentials, tie structure, and the g / g* transforms between the
// source and target domains.

#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "gje/generator.hpp"

namespace gje {

// One g-affine piece. For a primal function the fields are the focus y and
// level z of x -> g(x,y,z); for a dual function they hold the focus x and
// height u of y -> g*(x,y,u).
struct GAffine {
  Vec y;
  double z = 0.0;
};

enum class Orientation { Primal, Dual };

struct PiecewiseGConvex {
  Orientation orientation = Orientation::Primal;
  std::vector<GAffine> pieces;
  Box domain;           // where the function is evaluated
  double tie_tol = 1e-9;  // relative tie tolerance

  int dim() const { return domain.dim(); }
};

double eval(const GeneratorSpec& gen, const PiecewiseGConvex& fn, const Vec& x);

// Value of a single piece at a point.
double piece_value(const GeneratorSpec& gen, const PiecewiseGConvex& fn, int i, const Vec& x);

// Indices of pieces within the relative tie tolerance of the max.
struct ActiveSet {
  double value = 0.0;
  std::vector<int> indices;
};
ActiveSet active_set(const GeneratorSpec& gen, const PiecewiseGConvex& fn, const Vec& x);

// Slopes of the active pieces and their convex hull. For primal functions
// the slope of piece (y_i, z_i) at x is g_x(x, y_i, z_i); for dual
// functions, g*_y. Hull vertices are exact for n = 1 (interval endpoints)
// and n = 2 (counterclockwise polygon); for n >= 3 the slopes themselves
// are returned as hull points.
struct Subdifferential {
  double value = 0.0;
  std::vector<int> active;
  std::vector<Vec> slopes;
  std::vector<Vec> hull;
};
Subdifferential subdifferential(const GeneratorSpec& gen, const PiecewiseGConvex& fn,
                                const Vec& x);

// Image of the subdifferential hull vertices under p -> Y(x, u(x), p).
std::vector<Vec> y_image(const GeneratorSpec& gen, const PiecewiseGConvex& fn, const Vec& x);

// Points where at least min_active pieces tie and are globally active.
// Exact to root-finding tolerance in 1-D (pairwise crossings) and 2-D
// (triple intersections refined by Newton from grid seeds).
std::vector<Vec> tie_points(const GeneratorSpec& gen, const PiecewiseGConvex& fn,
                            int min_active);

// v(y) = sup_x g*(x, y, u(x)) over the primal domain, represented by pieces
// at grid points plus the primal tie points (which make the transform exact
// at vertices). Pieces never active on the probe grid are pruned.
PiecewiseGConvex g_star_transform(const GeneratorSpec& gen, const PiecewiseGConvex& primal,
                                  const Box& target_domain, int grid_per_dim);

// u(x) = sup_y g(x, y, v(y)); mirror image of g_star_transform.
PiecewiseGConvex g_transform(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                             const Box& source_domain, int grid_per_dim);

// Counterclockwise convex hull of 2-D points (monotone chain); collinear
// points are dropped.
std::vector<Vec> convex_hull_2d(std::vector<Vec> pts);

void to_json(nlohmann::json& j, const PiecewiseGConvex& fn);
void from_json(const nlohmann::json& j, PiecewiseGConvex& fn);

}  // namespace gje
