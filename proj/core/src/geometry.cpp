#include "gje/geometry.hpp"

#include <cmath>
#include <limits>

namespace gje {

namespace {

// Segment coordinate map Q(x) = (g_y/g_z)(x, y0, z0) and its Jacobian
// dQ_j/dx_i = E_ij / g_z.
Vec seg_coord(const GeneratorSpec& gen, const Vec& x, const Vec& y0, double z0) {
  return Vec(gen.gy(x, y0, z0) / gen.gz(x, y0, z0));
}

Mat seg_jacobian(const GeneratorSpec& gen, const Vec& x, const Vec& y0, double z0) {
  double dz = gen.gz(x, y0, z0);
  Vec dgy = gen.gy(x, y0, z0);
  Vec dxz = gen.gxz(x, y0, z0);
  Mat E = gen.gxy(x, y0, z0) - (dxz / dz) * dgy.transpose();
  // row j, col i = E_ij / g_z
  return Mat(E.transpose() / dz);
}

Vec newton_nd(const std::function<Vec(const Vec&)>& F, const std::function<Mat(const Vec&)>& J,
              Vec x, double tol, int max_iter, const char* what) {
  for (int it = 0; it < max_iter; ++it) {
    Vec f = F(x);
    if (f.norm() <= tol) return x;
    Eigen::FullPivLU<Mat> lu(J(x));
    if (!lu.isInvertible()) throw NoConvergence(std::string(what) + ": singular Jacobian");
    Vec step = lu.solve(-f);
    double lambda = 1.0;
    for (int bt = 0; bt < 30; ++bt) {
      Vec xt = x + lambda * step;
      if (F(xt).norm() <= (1.0 - 0.25 * lambda) * f.norm()) {
        x = xt;
        break;
      }
      lambda *= 0.5;
      if (bt == 29) throw NoConvergence(std::string(what) + ": line search stalled");
    }
  }
  throw NoConvergence(std::string(what) + ": no convergence");
}

}  // namespace

Vec g_segment_point(const GeneratorSpec& gen, const Vec& x0, const Vec& x1, const Vec& y0,
                    double z0, double theta) {
  Vec Q0 = seg_coord(gen, x0, y0, z0);
  Vec Q1 = seg_coord(gen, x1, y0, z0);
  Vec target = Q0 + theta * (Q1 - Q0);
  double scale = std::max(1.0, (Q1 - Q0).norm());
  return newton_nd(
      [&](const Vec& x) { return Vec(seg_coord(gen, x, y0, z0) - target); },
      [&](const Vec& x) { return seg_jacobian(gen, x, y0, z0); },
      Vec(x0 + theta * (x1 - x0)), 1e-12 * scale, 60, "g_segment_point");
}

Vec g_segment_velocity(const GeneratorSpec& gen, const Vec& x_theta, const Vec& y0, double z0,
                       const Vec& q) {
  double dz = gen.gz(x_theta, y0, z0);
  Vec dgy = gen.gy(x_theta, y0, z0);
  Vec dxz = gen.gxz(x_theta, y0, z0);
  Mat E = gen.gxy(x_theta, y0, z0) - (dxz / dz) * dgy.transpose();
  return Vec(dz * E.inverse().transpose() * q);
}

Vec g_star_segment_point(const GeneratorSpec& gen, const Vec& x0, const Vec& y0, const Vec& y1,
                         double u0, double theta) {
  auto P = [&](const Vec& y) { return gen.gx(x0, y, gen.g_star(x0, y, u0)); };
  Vec P0 = P(y0), P1 = P(y1);
  Vec target = P0 + theta * (P1 - P0);
  double scale = std::max(1.0, (P1 - P0).norm());
  auto J = [&](const Vec& y) {
    // dP_i/dy_j = g_{i,j} - g_{i,z} g_{,j} / g_z = E_ij at (x0, y, g*)
    double z = gen.g_star(x0, y, u0);
    double dz = gen.gz(x0, y, z);
    Vec dgy = gen.gy(x0, y, z);
    Vec dxz = gen.gxz(x0, y, z);
    return Mat(gen.gxy(x0, y, z) - (dxz / dz) * dgy.transpose());
  };
  return newton_nd([&](const Vec& y) { return Vec(P(y) - target); }, J,
                   Vec(y0 + theta * (y1 - y0)), 1e-12 * scale, 60, "g_star_segment_point");
}

LoeperReport loeper_check(const GeneratorSpec& gen, const Vec& x0, double u0, const Vec& y0,
                          const Vec& y1, const Box& x_region, int x_grid, int theta_grid) {
  double z0 = gen.g_star(x0, y0, u0);
  double z1 = gen.g_star(x0, y1, u0);
  LoeperReport rep;
  rep.argmax_x = x0;

  const int n = x_region.dim();
  std::vector<int> idx(n, 0);
  std::vector<Vec> xs;
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i)
      x[i] = x_grid == 1 ? x_region.center()[i]
                         : x_region.lo[i] + (x_region.hi[i] - x_region.lo[i]) * idx[i] / (x_grid - 1);
    xs.push_back(x);
    int c = 0;
    while (c < n && ++idx[c] == x_grid) idx[c++] = 0;
    if (c == n) break;
  }

  for (int t = 0; t <= theta_grid; ++t) {
    double theta = double(t) / theta_grid;
    Vec yt = g_star_segment_point(gen, x0, y0, y1, u0, theta);
    double zt = gen.g_star(x0, yt, u0);
    for (const Vec& x : xs) {
      double lhs = gen.value(x, yt, zt);
      double rhs = std::max(gen.value(x, y0, z0), gen.value(x, y1, z1));
      double v = lhs - rhs;
      if (v > rep.max_violation) {
        rep.max_violation = v;
        rep.argmax_x = x;
        rep.argmax_theta = theta;
      }
    }
  }
  return rep;
}

QuasiconvexityReport quasiconvexity_check(const GeneratorSpec& gen, const Vec& x0, double u0,
                                          const Vec& x1, const Vec& y0, const Vec& y1,
                                          int theta_grid) {
  double z0 = gen.g_star(x0, y0, u0);
  double z1 = gen.g_star(x0, y1, u0);
  double rhs = gen.value(x1, y1, z1) - gen.value(x1, y0, z0);
  double rhs_plus = std::max(rhs, 0.0);

  QuasiconvexityReport rep;
  for (int t = 1; t <= theta_grid; ++t) {
    double theta = double(t) / theta_grid;
    Vec xt = g_segment_point(gen, x0, x1, y0, z0, theta);
    double lhs = gen.value(xt, y1, z1) - gen.value(xt, y0, z0);
    ++rep.samples;
    if (rhs_plus > 1e-14) {
      rep.m_required = std::max(rep.m_required, lhs / (theta * rhs_plus));
    } else {
      rep.max_excess = std::max(rep.max_excess, lhs);
    }
  }
  return rep;
}

// TransformFrame --------------------------------------------------------------

double TransformFrame::gbar_tilde(const Vec& x, const Vec& y, double z) const {
  const GeneratorSpec& g = *gen_;
  double ratio = gz0_ / g.gz(x, y0_, zstar_);
  double zs = g.g_star(x0_, y, u0_ + h_ - z);
  return ratio * (g.value(x, y, zs) - g.value(x, y0_, zstar_));
}

Vec TransformFrame::q_of_x(const Vec& x) const {
  return Vec(gz0_ * (seg_coord(*gen_, x, y0_, zstar_) - Q0_));
}

Vec TransformFrame::p_raw(const Vec& y) const {
  double zs = gen_->g_star(x0_, y, u0_ + h_);
  return Vec(gen_->gx(x0_, y, zs) - gx0_);
}

Vec TransformFrame::p_of_y(const Vec& y) const { return Vec(pnorm_ * p_raw(y)); }

Vec TransformFrame::x_of_q(const Vec& q) const {
  double scale = std::max(1.0, q.norm());
  double h = 1e-6 * std::max(1.0, x0_.cwiseAbs().maxCoeff());
  auto J = [&](const Vec& x) {
    Mat Jm(dim(), dim());
    for (int c = 0; c < dim(); ++c) {
      Vec xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      Jm.col(c) = (q_of_x(xp) - q_of_x(xm)) / (2 * h);
    }
    return Jm;
  };
  return newton_nd([&](const Vec& x) { return Vec(q_of_x(x) - q); }, J, x0_, 1e-12 * scale, 60,
                   "x_of_q");
}

Vec TransformFrame::y_of_p(const Vec& p) const {
  double scale = std::max(1.0, p.norm());
  double h = 1e-6 * std::max(1.0, y0_.cwiseAbs().maxCoeff());
  auto J = [&](const Vec& y) {
    Mat Jm(dim(), dim());
    for (int c = 0; c < dim(); ++c) {
      Vec yp = y, ym = y;
      yp[c] += h;
      ym[c] -= h;
      Jm.col(c) = (p_of_y(yp) - p_of_y(ym)) / (2 * h);
    }
    return Jm;
  };
  return newton_nd([&](const Vec& y) { return Vec(p_of_y(y) - p); }, J, y0_, 1e-12 * scale, 60,
                   "y_of_p");
}

double TransformFrame::gbar(const Vec& q, const Vec& p, double z) const {
  return gbar_tilde(x_of_q(q), y_of_p(p), z);
}

Mat TransformFrame::q_jacobian(const Vec& x) const {
  double h = 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff());
  Mat Jm(dim(), dim());
  for (int c = 0; c < dim(); ++c) {
    Vec xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    Jm.col(c) = (q_of_x(xp) - q_of_x(xm)) / (2 * h);
  }
  return Jm;
}

TransformFrame TransformFrame::make(const GeneratorSpec& gen, const Vec& x0, const Vec& y0,
                                    double u0, double h) {
  TransformFrame f;
  f.gen_ = &gen;
  f.x0_ = x0;
  f.y0_ = y0;
  f.u0_ = u0;
  f.h_ = h;
  f.zstar_ = gen.g_star(x0, y0, u0 + h);
  f.gz0_ = gen.gz(x0, y0, f.zstar_);
  f.Q0_ = seg_coord(gen, x0, y0, f.zstar_);
  f.gx0_ = gen.gx(x0, y0, f.zstar_);
  f.pnorm_ = Mat::Identity(f.dim(), f.dim());

  // Normalize the q-p cross derivative to the identity so the expansion
  // starts with q.p. Measured on the raw p coordinate by central
  // differences through the Newton inverses.
  const int n = f.dim();
  double hq = 1e-4, hp = 1e-4;
  Mat C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec qp = Vec::Zero(n), pp = Vec::Zero(n);
      qp[i] = hq;
      pp[j] = hp;
      double vpp = f.gbar(qp, pp, 0.0);
      double vpm = f.gbar(qp, Vec(-pp), 0.0);
      double vmp = f.gbar(Vec(-qp), pp, 0.0);
      double vmm = f.gbar(Vec(-qp), Vec(-pp), 0.0);
      C(i, j) = (vpp - vpm - vmp + vmm) / (4 * hq * hp);
    }
  Eigen::FullPivLU<Mat> lu(C);
  if (!lu.isInvertible())
    throw Error("transform frame: degenerate cross derivative at the base point");
  f.pnorm_ = C;
  return f;
}

TransformFrame::ExpansionReport TransformFrame::expansion_check(double radius_q, double radius_p,
                                                                double radius_z, int samples,
                                                                std::uint64_t seed) const {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ExpansionReport rep;
  for (int s = 0; s < samples; ++s) {
    Vec q(dim()), p(dim());
    for (int i = 0; i < dim(); ++i) {
      q[i] = radius_q * u(rng);
      p[i] = radius_p * u(rng);
    }
    double z = radius_z * u(rng);
    double r = gbar(q, p, z) - (q.dot(p) - z);
    double qn = q.norm(), pn = p.norm(), zn = std::abs(z);
    double gauge = qn * qn * pn * pn + zn * (qn * qn + qn * pn + pn * pn) + zn * zn;
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(r));
    if (gauge > 1e-14) rep.c_bound = std::max(rep.c_bound, std::abs(r) / gauge);
  }
  return rep;
}

double TransformFrame::jacobian_distortion(const Box& x_region, int grid_per_dim) const {
  const int n = dim();
  std::vector<int> idx(n, 0);
  double worst = 1.0;
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i)
      x[i] = grid_per_dim == 1
                 ? x_region.center()[i]
                 : x_region.lo[i] + (x_region.hi[i] - x_region.lo[i]) * idx[i] / (grid_per_dim - 1);
    Mat J = q_jacobian(x);
    Eigen::JacobiSVD<Mat> svd(J);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(n - 1);
    if (smin < 1e-14) throw Error("jacobian_distortion: singular q map");
    worst = std::max({worst, smax, 1.0 / smin});
    int c = 0;
    while (c < n && ++idx[c] == grid_per_dim) idx[c++] = 0;
    if (c == n) break;
  }
  return worst;
}

// Cone ------------------------------------------------------------------------

GConeReport g_cone_subgradient(const TransformFrame& frame, const std::vector<Vec>& region,
                               double h, int directions, int boundary_samples) {
  const int n = frame.dim();
  if (region.empty()) throw Error("g_cone_subgradient: empty region");

  // boundary samples of the region, in q coordinates
  std::vector<Vec> boundary;
  if (n == 1) {
    double lo = region[0][0], hi = region[0][0];
    for (const Vec& v : region) {
      lo = std::min(lo, v[0]);
      hi = std::max(hi, v[0]);
    }
    boundary = {Vec::Constant(1, lo), Vec::Constant(1, hi)};
  } else {
    size_t m = region.size();
    int per_edge = std::max(1, boundary_samples / static_cast<int>(m));
    for (size_t i = 0; i < m; ++i) {
      const Vec& a = region[i];
      const Vec& b = region[(i + 1) % m];
      for (int k = 0; k < per_edge; ++k)
        boundary.push_back(Vec(a + (double(k) / per_edge) * (b - a)));
    }
  }

  GConeReport rep;
  if (n == 1) {
    rep.directions = {Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  } else {
    for (int d = 0; d < directions; ++d) {
      double th = 2 * M_PI * d / directions;
      Vec w(2);
      w << std::cos(th), std::sin(th);
      rep.directions.push_back(w);
    }
  }

  // support function of the region per direction -> classical cone radius
  auto support = [&](const Vec& w) {
    double s = -std::numeric_limits<double>::infinity();
    for (const Vec& v : region) s = std::max(s, w.dot(v));
    return s;
  };

  auto admissible = [&](const Vec& p) {
    for (const Vec& qb : boundary)
      if (frame.gbar(qb, p, h) > 1e-12 * std::max(1.0, h)) return false;
    return true;
  };

  Vec q0 = Vec::Zero(n);
  rep.vertex_value = frame.gbar(q0, Vec::Zero(n), h);

  for (const Vec& w : rep.directions) {
    double s = support(w);
    double rk = s > 1e-12 ? h / s : 1e6;
    rep.radial_classical.push_back(rk);

    // admissible radius along w by bisection up to 4x the classical radius
    double lo = 0.0, hi = 4.0 * rk;
    if (!admissible(Vec(hi * w))) {
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (admissible(Vec(mid * w)))
          lo = mid;
        else
          hi = mid;
      }
    } else {
      lo = hi;
    }
    double tmax = lo;

    // restrict to supports that actually touch the vertex value
    double tol_v = 1e-6 * std::max(1.0, std::abs(rep.vertex_value));
    double r = 0.0;
    const int tscan = 64;
    for (int k = tscan; k >= 1; --k) {
      double t = tmax * k / tscan;
      if (frame.gbar(q0, Vec(t * w), h) >= rep.vertex_value - tol_v) {
        r = t;
        break;
      }
    }
    rep.radial.push_back(r);
  }

  // measures
  if (n == 1) {
    rep.measure = rep.radial[0] + rep.radial[1];
    rep.measure_classical = rep.radial_classical[0] + rep.radial_classical[1];
  } else {
    double dth = 2 * M_PI / rep.directions.size();
    for (size_t d = 0; d < rep.directions.size(); ++d) {
      rep.measure += 0.5 * dth * rep.radial[d] * rep.radial[d];
      rep.measure_classical += 0.5 * dth * rep.radial_classical[d] * rep.radial_classical[d];
    }
  }

  // enclosing rectangle -> R* measure
  double rstar = 1.0;
  for (int i = 0; i < n; ++i) {
    double a = -std::numeric_limits<double>::infinity();
    double b = -std::numeric_limits<double>::infinity();
    for (const Vec& v : region) {
      a = std::max(a, v[i]);
      b = std::max(b, -v[i]);
    }
    if (a <= 0 || b <= 0) throw Error("g_cone_subgradient: region must contain 0 strictly");
    rstar *= (1.0 / a + 1.0 / b);
  }
  rep.rstar_measure = std::pow(h, n) * rstar;
  rep.lower_constant = rep.measure / rep.rstar_measure;

  for (size_t d = 0; d < rep.directions.size(); ++d) {
    double ratio = rep.radial[d] / std::max(rep.radial_classical[d], 1e-300);
    rep.inclusion_ratio = std::max(rep.inclusion_ratio, ratio);
    if (ratio > 2.0 + 1e-9) ++rep.inclusion_violations;
  }
  return rep;
}

// Sections --------------------------------------------------------------------

SectionReport section(const GeneratorSpec& gen, const PiecewiseGConvex& u, const Vec& y0,
                      double z0, double h, int grid_per_dim) {
  if (u.orientation != Orientation::Primal) throw Error("section: expected a primal function");
  const int n = u.dim();
  const Box& dom = u.domain;

  // contact point of the support: argmin of u - g(., y0, z0)
  Vec contact = dom.center();
  double best_gap = std::numeric_limits<double>::infinity();

  std::vector<Vec> sect_x;
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i)
      x[i] = grid_per_dim == 1
                 ? dom.center()[i]
                 : dom.lo[i] + (dom.hi[i] - dom.lo[i]) * idx[i] / (grid_per_dim - 1);
    double gap = eval(gen, u, x) - gen.value(x, y0, z0);
    if (gap < best_gap) {
      best_gap = gap;
      contact = x;
    }
    if (eval(gen, u, x) < gen.value(x, y0, z0 - h)) sect_x.push_back(x);
    int c = 0;
    while (c < n && ++idx[c] == grid_per_dim) idx[c++] = 0;
    if (c == n) break;
  }

  SectionReport rep;
  rep.contact_x = contact;
  rep.points_x = sect_x;
  if (sect_x.empty()) return rep;

  // frame q-map at the lifted support level
  double zs = z0 - h;
  double gzc = gen.gz(contact, y0, zs);
  Vec Qc = seg_coord(gen, contact, y0, zs);
  for (const Vec& x : sect_x)
    rep.points_q.push_back(Vec(gzc * (seg_coord(gen, x, y0, zs) - Qc)));

  // occupancy grid in q space
  Vec qlo = rep.points_q[0], qhi = rep.points_q[0];
  for (const Vec& q : rep.points_q) {
    qlo = qlo.cwiseMin(q);
    qhi = qhi.cwiseMax(q);
  }
  Vec ext = (qhi - qlo).cwiseMax(1e-12);
  const int occ = 2 * grid_per_dim;
  auto cell_of = [&](const Vec& q) {
    Eigen::VectorXi c(n);
    for (int i = 0; i < n; ++i) {
      int v = static_cast<int>(std::floor((q[i] - qlo[i]) / ext[i] * occ));
      c[i] = std::clamp(v, 0, occ - 1);
    }
    return c;
  };
  std::vector<std::uint8_t> occupied(static_cast<size_t>(std::pow(occ, n)), 0);
  auto flat = [&](const Eigen::VectorXi& c) {
    size_t f = 0;
    for (int i = 0; i < n; ++i) f = f * occ + c[i];
    return f;
  };
  for (const Vec& q : rep.points_q) occupied[flat(cell_of(q))] = 1;
  rep.occupied_cells = 0;
  for (auto o : occupied) rep.occupied_cells += o;

  // midpoint membership over sample pairs (deterministic stride cap)
  size_t m = rep.points_q.size();
  size_t stride = 1;
  while ((m / stride) * (m / stride) > 400000) ++stride;
  auto defect_of = [&](const Vec& q) {
    Eigen::VectorXi c = cell_of(q);
    for (int radius = 0; radius <= 4; ++radius) {
      // scan the square shell of the given radius
      std::vector<int> lo(n), hi(n);
      bool any = false;
      std::vector<int> it(n);
      for (int i = 0; i < n; ++i) {
        lo[i] = std::max(0, c[i] - radius);
        hi[i] = std::min(occ - 1, c[i] + radius);
        it[i] = lo[i];
      }
      while (true) {
        Eigen::VectorXi cc(n);
        for (int i = 0; i < n; ++i) cc[i] = it[i];
        if (occupied[flat(cc)]) {
          any = true;
          break;
        }
        int k = 0;
        while (k < n && ++it[k] > hi[k]) it[k++] = lo[k];
        if (k == n) break;
      }
      if (any) return double(radius);
    }
    return 5.0;
  };
  for (size_t a = 0; a < m; a += stride)
    for (size_t b = a + stride; b < m; b += stride) {
      Vec mid = 0.5 * (rep.points_q[a] + rep.points_q[b]);
      rep.max_defect_cells = std::max(rep.max_defect_cells, defect_of(mid));
      ++rep.pairs_tested;
    }
  return rep;
}

}  // namespace gje
