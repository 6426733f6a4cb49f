#pragma once

// Geometry induced by a generating function: g-segments and their duals,
// the quasiconvexity and maximum-principle checks along them, the
// normalized coordinate frame (q, p, z-bar), cones over sections, and
// section convexity diagnostics.

#include "gje/gconvex.hpp"

namespace gje {

// Point x_theta on the g-segment joining x0 to x1 with respect to the focus
// (y0, z0): (g_y/g_z)(x_theta, y0, z0) interpolates linearly. Solved by
// Newton with the exact Jacobian E/g_z.
Vec g_segment_point(const GeneratorSpec& gen, const Vec& x0, const Vec& x1, const Vec& y0,
                    double z0, double theta);

// Velocity of the segment at x_theta: xdot_i = g_z E^{m,i} q_m where q is
// the coordinate difference of the endpoints.
Vec g_segment_velocity(const GeneratorSpec& gen, const Vec& x_theta, const Vec& y0, double z0,
                       const Vec& q);

// Point y_theta on the g*-segment joining y0 to y1 with respect to (x0, u0):
// g_x(x0, y_theta, g*(x0, y_theta, u0)) interpolates linearly.
Vec g_star_segment_point(const GeneratorSpec& gen, const Vec& x0, const Vec& y0, const Vec& y1,
                         double u0, double theta);

// Maximum principle along a g*-segment: with z_theta = g*(x0, y_theta, u0),
//   g(x, y_theta, z_theta) <= max{ g(x, y0, z0), g(x, y1, z1) }.
// Reports the largest signed violation over an x grid and a theta grid.
struct LoeperReport {
  double max_violation = -std::numeric_limits<double>::infinity();
  Vec argmax_x;
  double argmax_theta = 0.0;
};
LoeperReport loeper_check(const GeneratorSpec& gen, const Vec& x0, double u0, const Vec& y0,
                          const Vec& y1, const Box& x_region, int x_grid, int theta_grid);

// Quantitative quasiconvexity along the g-segment x_theta from x0 to x1
// with respect to (y0, z0), z_i = g*(x0, y_i, u0):
//   g(x_th, y1, z1) - g(x_th, y0, z0) <= M theta [g(x1,y1,z1) - g(x1,y0,z0)]_+
struct QuasiconvexityReport {
  double m_required = 0.0;   // smallest M making all samples pass
  double max_excess = 0.0;   // largest lhs when rhs vanishes (should be <= 0)
  int samples = 0;
};
QuasiconvexityReport quasiconvexity_check(const GeneratorSpec& gen, const Vec& x0, double u0,
                                          const Vec& x1, const Vec& y0, const Vec& y1,
                                          int theta_grid);

// Normalized frame centered at a support of height u0 touched at (x0, y0),
// lifted to height u0 + h. Coordinates q(x), p(y) are chosen so that
//   gbar(q, 0, 0) = gbar(0, p, 0) = 0,  gbar_z(0,0,0) = -1,
//   gbar(q,p,z) = q.p - z + higher order.
class TransformFrame {
 public:
  static TransformFrame make(const GeneratorSpec& gen, const Vec& x0, const Vec& y0, double u0,
                             double h);

  Vec q_of_x(const Vec& x) const;
  Vec x_of_q(const Vec& q) const;  // Newton inverse
  Vec p_of_y(const Vec& y) const;
  Vec y_of_p(const Vec& p) const;  // Newton inverse

  double gbar(const Vec& q, const Vec& p, double z) const;

  Mat q_jacobian(const Vec& x) const;  // dq/dx, finite differences
  double z_base() const { return zstar_; }
  int dim() const { return x0_.size(); }
  const Vec& x0() const { return x0_; }
  const Vec& y0() const { return y0_; }
  double u0() const { return u0_; }
  double h() const { return h_; }

  // Smallest C with |gbar - (q.p - z)| <= C (|q|^2|p|^2 + |z|(|q|^2+|q||p|+|p|^2) + z^2)
  // over random samples in the given radii.
  struct ExpansionReport {
    double c_bound = 0.0;
    double max_abs_residual = 0.0;
  };
  ExpansionReport expansion_check(double radius_q, double radius_p, double radius_z,
                                  int samples, std::uint64_t seed) const;

  // max over a grid of ||dq/dx|| and ||(dq/dx)^{-1}||: the measure
  // distortion constant between x and q coordinates.
  double jacobian_distortion(const Box& x_region, int grid_per_dim) const;

 private:
  const GeneratorSpec* gen_ = nullptr;
  Vec x0_, y0_;
  double u0_ = 0.0, h_ = 0.0, zstar_ = 0.0;
  Vec Q0_;       // (g_y/g_z)(x0, y0, z*)
  double gz0_ = 0.0;
  Vec gx0_;      // g_x(x0, y0, z*)
  Mat pnorm_;    // cross-derivative normalization, p = pnorm * p_raw

  Vec p_raw(const Vec& y) const;
  double gbar_tilde(const Vec& x, const Vec& y, double z) const;
};

// Cone over a convex region D (polygon in q coordinates, interval in 1-D)
// with vertex at q = 0 and height drop h, compared against the classical
// cone of the same region.
struct GConeReport {
  double vertex_value = 0.0;
  std::vector<Vec> directions;
  std::vector<double> radial;            // subgradient extent per direction
  std::vector<double> radial_classical;  // h / support function of D
  double measure = 0.0;                  // |subgradient at the vertex|
  double measure_classical = 0.0;
  double rstar_measure = 0.0;            // h^n * |R*| of the enclosing rectangle
  double inclusion_ratio = 0.0;          // max radial / radial_classical
  int inclusion_violations = 0;          // directions with ratio > 2
  double lower_constant = 0.0;           // measure / rstar_measure
};
GConeReport g_cone_subgradient(const TransformFrame& frame, const std::vector<Vec>& region,
                               double h, int directions, int boundary_samples);

// Section {u < g(., y0, z0 - h)} of a primal function below a lifted
// support, with its image under the frame q-map and a convexity defect
// measured by midpoint membership on an occupancy grid.
struct SectionReport {
  std::vector<Vec> points_x;
  std::vector<Vec> points_q;
  Vec contact_x;
  int occupied_cells = 0;
  double max_defect_cells = 0.0;  // worst midpoint distance to the section, in cells
  int pairs_tested = 0;
};
SectionReport section(const GeneratorSpec& gen, const PiecewiseGConvex& u, const Vec& y0,
                      double z0, double h, int grid_per_dim);

}  // namespace gje
