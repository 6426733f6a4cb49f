#pragma once

// Generating functions g(x,y,z) and the local algebra around them: the
// (y,z) inversion from a first-order jet, the dual function g*, and the
// structure matrices E, A, B used by the transformed second-order problem.

#include <memory>
#include <string>

#include "gje/common.hpp"
#include "gje/expression.hpp"

namespace gje {

// First-order jet (x, u, Du) of a scalar function.
struct JetPoint {
  Vec x;
  double u = 0.0;
  Vec p;
};

// Result of inverting the jet relations g(x,y,z) = u, g_x(x,y,z) = p.
struct YZSolution {
  Vec y;
  double z = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

// E_ij = g_{i,j} - g_z^{-1} g_{i,z} g_{,j} and A = g_xx, evaluated on the
// solved (y,z). B scales det E by the prescribed Jacobian density.
struct StructureMatrices {
  Mat E;
  Mat A;
  double det_E = 0.0;
  Vec y;
  double z = 0.0;
  double B(double psi) const { return det_E * psi; }
};

// Residuals of the three dual derivative identities
//   g*_y = -g_y/g_z,  g*_x = -g_x/g_z,  g*_u = 1/g_z
// evaluated at a point (x, y, u) with z = g*(x,y,u).
struct DualIdentityResiduals {
  double r_y = 0.0;
  double r_x = 0.0;
  double r_u = 0.0;
  double max() const { return std::max({r_y, r_x, r_u}); }
};

class GeneratorSpec {
 public:
  Box domain_x;        // closure of U
  Box domain_y;        // closure of V
  Interval heights;    // admissible height interval J
  Interval z_range;    // z interval, uniform over (x,y)
  bool claims_A3w = false;
  bool claims_A4w = false;
  double h_fd = 1e-4;  // step for finite-difference fallbacks

  virtual ~GeneratorSpec() = default;

  virtual std::string name() const = 0;
  int dim() const { return domain_x.dim(); }

  virtual double value(const Vec& x, const Vec& y, double z) const = 0;

  // First derivatives; defaults are central differences of value().
  virtual Vec gx(const Vec& x, const Vec& y, double z) const;
  virtual Vec gy(const Vec& x, const Vec& y, double z) const;
  virtual double gz(const Vec& x, const Vec& y, double z) const;

  // Second derivatives; defaults are central differences of the first.
  virtual Mat gxx(const Vec& x, const Vec& y, double z) const;  // D_{x_i x_j}
  virtual Mat gxy(const Vec& x, const Vec& y, double z) const;  // D_{x_i y_j}
  virtual Vec gxz(const Vec& x, const Vec& y, double z) const;  // D_{x_i z}
  virtual Vec gyz(const Vec& x, const Vec& y, double z) const;  // D_{y_j z}

  // Dual generating function: the unique z with g(x,y,z) = u. Default is a
  // safeguarded Newton/bisection root find on z_range (g_z < 0 makes the
  // map monotone). Throws OutOfRange if u is not attained on z_range.
  virtual double g_star(const Vec& x, const Vec& y, double u) const;

  // -g_y/g_z evaluated at z = g*(x,y,u); equals D_y g*.
  Vec g_star_y(const Vec& x, const Vec& y, double u) const;

  // True when differences g*(x0,y,u0) - g*(x1,y,u1) are affine in y, which
  // lets cell boundaries be handled as halfplanes.
  virtual bool dual_comparisons_affine() const { return false; }

  // Starting point for the (y,z) Newton solve.
  virtual void initial_guess(const JetPoint& jet, Vec& y, double& z) const;
};

// Damped Newton on the (n+1)-dimensional system
//   F(y,z) = (g(x,y,z) - u, g_x(x,y,z) - p).
// Throws NoConvergence when the residual does not reach tol in max_iter
// steps, OutOfRange when iterates leave the generator's y/z box by a wide
// margin.
YZSolution solve_yz(const GeneratorSpec& gen, const JetPoint& jet, double tol = 1e-10,
                    int max_iter = 50);

double dual_g_star(const GeneratorSpec& gen, const Vec& x, const Vec& y, double u);

DualIdentityResiduals dual_derivative_identities(const GeneratorSpec& gen, const Vec& x,
                                                 const Vec& y, double u);

StructureMatrices structure_matrices(const GeneratorSpec& gen, const JetPoint& jet,
                                     double tol = 1e-10, int max_iter = 50);

// Built-in generating functions --------------------------------------------

// g(x,y,z) = x.y - z
class ClassicalGenerator : public GeneratorSpec {
 public:
  explicit ClassicalGenerator(int n);
  std::string name() const override { return "classical"; }
  double value(const Vec& x, const Vec& y, double z) const override { return x.dot(y) - z; }
  Vec gx(const Vec&, const Vec& y, double) const override { return y; }
  Vec gy(const Vec& x, const Vec&, double) const override { return x; }
  double gz(const Vec&, const Vec&, double) const override { return -1.0; }
  Mat gxx(const Vec&, const Vec&, double) const override { return Mat::Zero(dim(), dim()); }
  Mat gxy(const Vec&, const Vec&, double) const override { return Mat::Identity(dim(), dim()); }
  Vec gxz(const Vec&, const Vec&, double) const override { return Vec::Zero(dim()); }
  Vec gyz(const Vec&, const Vec&, double) const override { return Vec::Zero(dim()); }
  double g_star(const Vec& x, const Vec& y, double u) const override { return x.dot(y) - u; }
  bool dual_comparisons_affine() const override { return true; }
  void initial_guess(const JetPoint& jet, Vec& y, double& z) const override;
};

// g(x,y,z) = -|x-y|^2/2 - z; the sign convention keeps g_z = -1, so the
// solved slope relation is y = x + p.
class QuadraticGenerator : public GeneratorSpec {
 public:
  explicit QuadraticGenerator(int n);
  std::string name() const override { return "quadratic"; }
  double value(const Vec& x, const Vec& y, double z) const override {
    return -0.5 * (x - y).squaredNorm() - z;
  }
  Vec gx(const Vec& x, const Vec& y, double) const override { return y - x; }
  Vec gy(const Vec& x, const Vec& y, double) const override { return x - y; }
  double gz(const Vec&, const Vec&, double) const override { return -1.0; }
  Mat gxx(const Vec&, const Vec&, double) const override { return -Mat::Identity(dim(), dim()); }
  Mat gxy(const Vec&, const Vec&, double) const override { return Mat::Identity(dim(), dim()); }
  Vec gxz(const Vec&, const Vec&, double) const override { return Vec::Zero(dim()); }
  Vec gyz(const Vec&, const Vec&, double) const override { return Vec::Zero(dim()); }
  double g_star(const Vec& x, const Vec& y, double u) const override {
    return -0.5 * (x - y).squaredNorm() - u;
  }
  bool dual_comparisons_affine() const override { return true; }
  void initial_guess(const JetPoint& jet, Vec& y, double& z) const override;
};

// g(x,y,z) = x.y - z + z * x^T A y, a genuinely z-coupled perturbation of
// the classical case. Requires x^T A y < 1 on the domains so g_z < 0.
class PerturbedGenerator : public GeneratorSpec {
 public:
  PerturbedGenerator(int n, const Mat& a);
  PerturbedGenerator(int n, double a);  // a * Identity
  std::string name() const override { return "perturbed"; }
  const Mat& coupling() const { return a_; }

  double value(const Vec& x, const Vec& y, double z) const override {
    return x.dot(y) - z + z * x.dot(a_ * y);
  }
  Vec gx(const Vec&, const Vec& y, double z) const override { return y + z * (a_ * y); }
  Vec gy(const Vec& x, const Vec&, double z) const override {
    return x + z * (a_.transpose() * x);
  }
  double gz(const Vec& x, const Vec& y, double) const override { return -1.0 + x.dot(a_ * y); }
  Mat gxx(const Vec&, const Vec&, double) const override { return Mat::Zero(dim(), dim()); }
  Mat gxy(const Vec&, const Vec&, double z) const override {
    return Mat::Identity(dim(), dim()) + z * a_;
  }
  Vec gxz(const Vec&, const Vec& y, double) const override { return a_ * y; }
  Vec gyz(const Vec& x, const Vec&, double) const override { return a_.transpose() * x; }
  double g_star(const Vec& x, const Vec& y, double u) const override;
  void initial_guess(const JetPoint& jet, Vec& y, double& z) const override;

 private:
  Mat a_;
};

// User-defined generator from an expression over x, y (vectors) and z.
// All derivatives fall back to finite differences.
class ExpressionGenerator : public GeneratorSpec {
 public:
  ExpressionGenerator(int n, Expression expr, ExprEnv params = {});
  std::string name() const override { return "expression"; }
  double value(const Vec& x, const Vec& y, double z) const override;
  void initial_guess(const JetPoint& jet, Vec& y, double& z) const override;

 private:
  Expression expr_;
  ExprEnv params_;
};

}  // namespace gje
