#include "gje/generator.hpp"

#include <cmath>

namespace gje {

namespace {

double step_for(double h, double coord) { return h * std::max(1.0, std::abs(coord)); }

}  // namespace

Vec GeneratorSpec::gx(const Vec& x, const Vec& y, double z) const {
  Vec d(dim());
  for (int i = 0; i < dim(); ++i) {
    double h = step_for(h_fd, x[i]);
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    d[i] = (value(xp, y, z) - value(xm, y, z)) / (2 * h);
  }
  return d;
}

Vec GeneratorSpec::gy(const Vec& x, const Vec& y, double z) const {
  Vec d(dim());
  for (int j = 0; j < dim(); ++j) {
    double h = step_for(h_fd, y[j]);
    Vec yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    d[j] = (value(x, yp, z) - value(x, ym, z)) / (2 * h);
  }
  return d;
}

double GeneratorSpec::gz(const Vec& x, const Vec& y, double z) const {
  double h = step_for(h_fd, z);
  return (value(x, y, z + h) - value(x, y, z - h)) / (2 * h);
}

Mat GeneratorSpec::gxx(const Vec& x, const Vec& y, double z) const {
  Mat d(dim(), dim());
  for (int j = 0; j < dim(); ++j) {
    double h = step_for(h_fd, x[j]);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    d.col(j) = (gx(xp, y, z) - gx(xm, y, z)) / (2 * h);
  }
  return Mat(0.5 * (d + d.transpose()));
}

Mat GeneratorSpec::gxy(const Vec& x, const Vec& y, double z) const {
  Mat d(dim(), dim());
  for (int j = 0; j < dim(); ++j) {
    double h = step_for(h_fd, y[j]);
    Vec yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    d.col(j) = (gx(x, yp, z) - gx(x, ym, z)) / (2 * h);
  }
  return d;
}

Vec GeneratorSpec::gxz(const Vec& x, const Vec& y, double z) const {
  double h = step_for(h_fd, z);
  return (gx(x, y, z + h) - gx(x, y, z - h)) / (2 * h);
}

Vec GeneratorSpec::gyz(const Vec& x, const Vec& y, double z) const {
  double h = step_for(h_fd, z);
  return (gy(x, y, z + h) - gy(x, y, z - h)) / (2 * h);
}

double GeneratorSpec::g_star(const Vec& x, const Vec& y, double u) const {
  // g is strictly decreasing in z, so bracket on z_range then polish.
  double lo = z_range.lo, hi = z_range.hi;
  double flo = value(x, y, lo), fhi = value(x, y, hi);
  double scale = std::max({1.0, std::abs(flo), std::abs(fhi)});
  if (u > flo + 1e-9 * scale || u < fhi - 1e-9 * scale)
    throw OutOfRange("g_star: height " + format_double(u) + " not attained on z range");
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double f = value(x, y, z) - u;
    if (std::abs(f) <= 1e-14 * scale) return z;
    if (f > 0)
      lo = z;  // g(z) too large, move z up
    else
      hi = z;
    double dz = gz(x, y, z);
    double zn = (dz < -1e-14) ? z - f / dz : 0.5 * (lo + hi);
    if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
    if (std::abs(zn - z) <= 1e-15 * std::max(1.0, std::abs(z))) return zn;
    z = zn;
  }
  return z;
}

Vec GeneratorSpec::g_star_y(const Vec& x, const Vec& y, double u) const {
  double z = g_star(x, y, u);
  return Vec(-gy(x, y, z) / gz(x, y, z));
}

void GeneratorSpec::initial_guess(const JetPoint&, Vec& y, double& z) const {
  y = domain_y.center();
  z = z_range.mid();
}

YZSolution solve_yz(const GeneratorSpec& gen, const JetPoint& jet, double tol, int max_iter) {
  const int n = gen.dim();
  Vec y;
  double z;
  gen.initial_guess(jet, y, z);

  double scale = std::max({1.0, std::abs(jet.u), jet.p.norm()});
  Box ybig = gen.domain_y;
  Vec pad = 2.0 * ybig.extent().cwiseMax(1.0);
  ybig.lo -= pad;
  ybig.hi += pad;
  double zpad = 2.0 * std::max(1.0, gen.z_range.length());

  auto residual = [&](const Vec& yy, double zz) {
    Vec F(n + 1);
    F[0] = gen.value(jet.x, yy, zz) - jet.u;
    F.tail(n) = gen.gx(jet.x, yy, zz) - jet.p;
    return F;
  };

  Vec F = residual(y, z);
  YZSolution out;
  for (int it = 0; it < max_iter; ++it) {
    double r = F.norm();
    if (r <= tol * scale) {
      out.y = y;
      out.z = z;
      out.iterations = it;
      out.residual = r;
      return out;
    }
    Mat J(n + 1, n + 1);
    J.row(0).head(n) = gen.gy(jet.x, y, z).transpose();
    J(0, n) = gen.gz(jet.x, y, z);
    J.block(1, 0, n, n) = gen.gxy(jet.x, y, z);
    J.block(1, n, n, 1) = gen.gxz(jet.x, y, z);

    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible())
      throw NoConvergence("solve_yz: singular Jacobian at iteration " + std::to_string(it));
    Vec step = lu.solve(-F);

    double lambda = 1.0;
    for (int bt = 0; bt < 40; ++bt) {
      Vec yt = y + lambda * step.head(n);
      double zt = z + lambda * step[n];
      Vec Ft = residual(yt, zt);
      if (Ft.norm() <= (1.0 - 0.25 * lambda) * r) {
        y = yt;
        z = zt;
        F = Ft;
        break;
      }
      lambda *= 0.5;
      if (bt == 39)
        throw NoConvergence("solve_yz: line search stalled, residual " + format_double(r));
    }
    if (!ybig.contains(y) || z < gen.z_range.lo - zpad || z > gen.z_range.hi + zpad)
      throw OutOfRange("solve_yz: iterate left the admissible (y,z) region");
  }
  throw NoConvergence("solve_yz: residual " + format_double(F.norm()) + " after " +
                      std::to_string(max_iter) + " iterations");
}

double dual_g_star(const GeneratorSpec& gen, const Vec& x, const Vec& y, double u) {
  return gen.g_star(x, y, u);
}

DualIdentityResiduals dual_derivative_identities(const GeneratorSpec& gen, const Vec& x,
                                                 const Vec& y, double u) {
  const int n = gen.dim();
  const double z = gen.g_star(x, y, u);
  const double dz = gen.gz(x, y, z);
  Vec rhs_y = -gen.gy(x, y, z) / dz;
  Vec rhs_x = -gen.gx(x, y, z) / dz;
  double rhs_u = 1.0 / dz;

  DualIdentityResiduals r;
  for (int j = 0; j < n; ++j) {
    double h = step_for(gen.h_fd, y[j]);
    Vec yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    double d = (gen.g_star(x, yp, u) - gen.g_star(x, ym, u)) / (2 * h);
    r.r_y = std::max(r.r_y, std::abs(d - rhs_y[j]));
  }
  for (int i = 0; i < n; ++i) {
    double h = step_for(gen.h_fd, x[i]);
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    double d = (gen.g_star(xp, y, u) - gen.g_star(xm, y, u)) / (2 * h);
    r.r_x = std::max(r.r_x, std::abs(d - rhs_x[i]));
  }
  {
    double h = step_for(gen.h_fd, u);
    double d = (gen.g_star(x, y, u + h) - gen.g_star(x, y, u - h)) / (2 * h);
    r.r_u = std::abs(d - rhs_u);
  }
  return r;
}

StructureMatrices structure_matrices(const GeneratorSpec& gen, const JetPoint& jet, double tol,
                                     int max_iter) {
  const int n = gen.dim();
  YZSolution yz = solve_yz(gen, jet, tol, max_iter);
  StructureMatrices s;
  s.y = yz.y;
  s.z = yz.z;
  double dz = gen.gz(jet.x, yz.y, yz.z);
  Vec dgy = gen.gy(jet.x, yz.y, yz.z);
  Vec dxz = gen.gxz(jet.x, yz.y, yz.z);
  s.E = gen.gxy(jet.x, yz.y, yz.z) - (dxz / dz) * dgy.transpose();
  s.A = gen.gxx(jet.x, yz.y, yz.z);
  s.det_E = s.E.determinant();
  (void)n;
  return s;
}

// Built-ins ------------------------------------------------------------------

namespace {

void default_domains(GeneratorSpec& g, int n) {
  g.domain_x = Box::unit(n);
  g.domain_y = Box::unit(n);
  g.heights = {-10.0, 10.0};
  g.z_range = {-25.0, 25.0};
}

}  // namespace

ClassicalGenerator::ClassicalGenerator(int n) {
  default_domains(*this, n);
  claims_A3w = true;
  claims_A4w = true;
}

void ClassicalGenerator::initial_guess(const JetPoint& jet, Vec& y, double& z) const {
  y = jet.p;
  z = jet.x.dot(jet.p) - jet.u;
}

QuadraticGenerator::QuadraticGenerator(int n) {
  default_domains(*this, n);
  claims_A3w = true;
  claims_A4w = true;
}

void QuadraticGenerator::initial_guess(const JetPoint& jet, Vec& y, double& z) const {
  y = jet.x + jet.p;
  z = -0.5 * jet.p.squaredNorm() - jet.u;
}

PerturbedGenerator::PerturbedGenerator(int n, const Mat& a) : a_(a) {
  default_domains(*this, n);
  // g_z = -1 + x^T a y must stay negative; x^T a y is bilinear so it peaks
  // at box corners.
  double smax = 0.0;
  for (int cx = 0; cx < (1 << n); ++cx)
    for (int cy = 0; cy < (1 << n); ++cy) {
      Vec x(n), y(n);
      for (int i = 0; i < n; ++i) {
        x[i] = (cx >> i) & 1 ? domain_x.hi[i] : domain_x.lo[i];
        y[i] = (cy >> i) & 1 ? domain_y.hi[i] : domain_y.lo[i];
      }
      smax = std::max(smax, x.dot(a_ * y));
    }
  if (smax >= 0.9)
    throw ConfigError("perturbed generator: coupling too large, x^T a y reaches " +
                      format_double(smax));
}

PerturbedGenerator::PerturbedGenerator(int n, double a)
    : PerturbedGenerator(n, Mat(a * Mat::Identity(n, n))) {}

double PerturbedGenerator::g_star(const Vec& x, const Vec& y, double u) const {
  double s = x.dot(a_ * y);
  if (std::abs(1.0 - s) < 1e-12) throw OutOfRange("perturbed g_star: degenerate g_z");
  return (x.dot(y) - u) / (1.0 - s);
}

void PerturbedGenerator::initial_guess(const JetPoint& jet, Vec& y, double& z) const {
  y = jet.p;
  z = jet.x.dot(jet.p) - jet.u;
}

ExpressionGenerator::ExpressionGenerator(int n, Expression expr, ExprEnv params)
    : expr_(std::move(expr)), params_(std::move(params)) {
  default_domains(*this, n);
}

double ExpressionGenerator::value(const Vec& x, const Vec& y, double z) const {
  ExprEnv env = params_;
  env["x"] = ExprValue(x);
  env["y"] = ExprValue(y);
  env["z"] = ExprValue(z);
  return expr_.eval(env);
}

void ExpressionGenerator::initial_guess(const JetPoint& jet, Vec& y, double& z) const {
  // Classical-shaped guess works for mild perturbations of x.y - z; the
  // damped Newton absorbs the rest.
  y = jet.p;
  z = jet.x.dot(jet.p) - jet.u;
}

}  // namespace gje
