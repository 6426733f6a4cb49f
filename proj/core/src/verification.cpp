#include "gje/verification.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace gje {

namespace {

// Sample an admissible jet by drawing (x, y, height) inside the domains
// (shrunk for finite-difference headroom) and inverting through g*.
struct JetSample {
  Vec x, y;
  double z = 0.0, u = 0.0;
  Vec p;
};

Box shrink(const Box& b, double f) {
  Box s = b;
  Vec m = f * b.extent();
  s.lo += m;
  s.hi -= m;
  return s;
}

JetSample sample_jet(const GeneratorSpec& gen, Rng& rng) {
  Box bx = shrink(gen.domain_x, 0.05);
  Box by = shrink(gen.domain_y, 0.05);
  JetSample s;
  s.x = random_in_box(rng, bx);
  s.y = random_in_box(rng, by);
  // keep heights well inside J so perturbed jets stay admissible
  std::uniform_real_distribution<double> uu(0.25, 0.75);
  s.u = gen.heights.lo + uu(rng) * gen.heights.length();
  s.z = gen.g_star(s.x, s.y, s.u);
  s.p = gen.gx(s.x, s.y, s.z);
  return s;
}

double form_A(const GeneratorSpec& gen, const JetSample& s, const Vec& xi, const Vec& p) {
  JetPoint jet{s.x, s.u, p};
  StructureMatrices sm = structure_matrices(gen, jet);
  return xi.dot(sm.A * xi);
}

// phi''(0) for phi(t) = xi^T A(x, u, p + t eta) xi, Richardson-extrapolated
// central second difference.
double dpp_form(const GeneratorSpec& gen, const JetSample& s, const Vec& xi, const Vec& eta,
                double h) {
  double f0 = form_A(gen, s, xi, s.p);
  auto d2 = [&](double hh) {
    double fp = form_A(gen, s, xi, Vec(s.p + hh * eta));
    double fm = form_A(gen, s, xi, Vec(s.p - hh * eta));
    return (fp - 2 * f0 + fm) / (hh * hh);
  };
  double a = d2(h), b = d2(0.5 * h);
  return (4 * b - a) / 3;
}

void note_worst(ConditionReport& rep, double form, const JetSample& s) {
  if (rep.samples == 0 || form < rep.min_form) {
    rep.worst_x = s.x;
    rep.worst_y = s.y;
    rep.worst_z = s.z;
  }
  rep.min_form = rep.samples == 0 ? form : std::min(rep.min_form, form);
  rep.max_form = rep.samples == 0 ? form : std::max(rep.max_form, form);
  ++rep.samples;
}

}  // namespace

ConditionReport check_A3w(const GeneratorSpec& gen, int samples, std::uint64_t seed, double h,
                          double threshold) {
  ConditionReport rep;
  rep.condition = "A3w";
  rep.threshold = threshold;
  const int n = gen.dim();
  if (n < 2) {  // no nontrivial orthogonal pairs
    rep.passed = true;
    return rep;
  }
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    JetSample s;
    Vec xi = random_direction(rng, n);
    Vec eta = random_direction(rng, n);
    eta -= eta.dot(xi) * xi;
    if (eta.norm() < 1e-8) {
      ++rep.skipped;
      continue;
    }
    eta.normalize();
    try {
      s = sample_jet(gen, rng);
      double form = dpp_form(gen, s, xi, eta, h);
      note_worst(rep, form, s);
    } catch (const Error&) {
      ++rep.skipped;
    }
  }
  rep.passed = rep.samples > 0 && rep.min_form >= -threshold;
  return rep;
}

ConditionReport check_A3w_relaxed(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                                  double C, double h, double threshold) {
  ConditionReport rep;
  rep.condition = "A3w-relaxed";
  rep.threshold = threshold;
  const int n = gen.dim();
  Rng rng(seed);
  bool all_ok = true;
  double c_required = 0.0;
  for (int k = 0; k < samples; ++k) {
    Vec xi = random_direction(rng, n);
    Vec eta = random_direction(rng, n);
    try {
      JetSample s = sample_jet(gen, rng);
      double form = dpp_form(gen, s, xi, eta, h);
      note_worst(rep, form, s);
      double gauge = std::abs(xi.dot(eta));  // unit vectors
      if (form < -C * gauge - threshold) all_ok = false;
      if (form < 0 && gauge > 1e-12) c_required = std::max(c_required, -form / gauge);
    } catch (const Error&) {
      ++rep.skipped;
    }
  }
  rep.extra = c_required;
  rep.passed = rep.samples > 0 && all_ok;
  return rep;
}

ConditionReport check_A3w_star(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                               double h, double threshold) {
  ConditionReport rep;
  rep.condition = "A3w-star";
  rep.threshold = threshold;
  const int n = gen.dim();
  if (n < 2) {
    rep.passed = true;
    return rep;
  }
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    Vec xi = random_direction(rng, n);
    Vec eta = random_direction(rng, n);
    eta -= eta.dot(xi) * xi;
    if (eta.norm() < 1e-8) {
      ++rep.skipped;
      continue;
    }
    eta.normalize();
    try {
      JetSample s = sample_jet(gen, rng);
      JetPoint jet{s.x, s.u, s.p};
      StructureMatrices sm = structure_matrices(gen, jet);
      double gz = gen.gz(s.x, sm.y, sm.z);
      Vec xi_p = sm.E.inverse() * xi;        // contraction directions
      Vec eta_p = sm.E.transpose() * eta;    // p-direction; xi_p . eta_p = xi . eta = 0
      double form = -gz * dpp_form(gen, s, xi_p, eta_p, h);
      note_worst(rep, form, s);
    } catch (const Error&) {
      ++rep.skipped;
    }
  }
  rep.passed = rep.samples > 0 && rep.min_form >= -threshold;
  return rep;
}

ConditionReport check_A1_local(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                               double threshold) {
  ConditionReport rep;
  rep.condition = "A1_local";
  rep.threshold = threshold;
  rep.extra = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    try {
      JetSample s = sample_jet(gen, rng);
      StructureMatrices sm = structure_matrices(gen, JetPoint{s.x, s.u, s.p});
      Eigen::JacobiSVD<Mat> svd(sm.E);
      double smax = svd.singularValues()(0);
      double smin = svd.singularValues()(sm.E.rows() - 1);
      double form = smax > 0 ? smin / smax : 0.0;
      note_worst(rep, form, s);
      rep.extra = std::min(rep.extra, std::abs(sm.det_E));
    } catch (const Error&) {
      ++rep.skipped;
    }
  }
  // nondegeneracy wants the inverse condition number bounded away from 0
  rep.passed = rep.samples > 0 && rep.min_form >= threshold;
  return rep;
}

ConditionReport check_A4w(const GeneratorSpec& gen, int samples, std::uint64_t seed, double h,
                          double threshold) {
  ConditionReport rep;
  rep.condition = "A4w";
  rep.threshold = threshold;
  const int n = gen.dim();
  Rng rng(seed);
  for (int k = 0; k < samples; ++k) {
    Vec xi = random_direction(rng, n);
    try {
      JetSample s = sample_jet(gen, rng);
      auto at = [&](double du) {
        JetPoint jet{s.x, s.u + du, s.p};
        StructureMatrices sm = structure_matrices(gen, jet);
        return xi.dot(sm.A * xi);
      };
      double form = (at(h) - at(-h)) / (2 * h);
      note_worst(rep, form, s);
    } catch (const Error&) {
      ++rep.skipped;
    }
  }
  rep.passed = rep.samples > 0 && rep.min_form >= -threshold;
  return rep;
}

ConditionReport check_A5(const GeneratorSpec& gen, int grid_per_dim, int height_samples) {
  ConditionReport rep;
  rep.condition = "A5";
  const int n = gen.dim();
  double worst = 0.0;
  std::vector<int> ix(n, 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i)
      x[i] = grid_per_dim == 1 ? gen.domain_x.center()[i]
                               : gen.domain_x.lo[i] +
                                     (gen.domain_x.hi[i] - gen.domain_x.lo[i]) * ix[i] /
                                         (grid_per_dim - 1);
    std::vector<int> iy(n, 0);
    while (true) {
      Vec y(n);
      for (int i = 0; i < n; ++i)
        y[i] = grid_per_dim == 1 ? gen.domain_y.center()[i]
                                 : gen.domain_y.lo[i] +
                                       (gen.domain_y.hi[i] - gen.domain_y.lo[i]) * iy[i] /
                                           (grid_per_dim - 1);
      for (int k = 0; k < height_samples; ++k) {
        double u = gen.heights.lo +
                   gen.heights.length() * (k + 0.5) / height_samples;
        try {
          double z = gen.g_star(x, y, u);
          double gx = gen.gx(x, y, z).norm();
          double gsy = gen.g_star_y(x, y, u).norm();
          double v = std::max(gx, gsy);
          if (rep.samples == 0 || v > worst) {
            worst = v;
            rep.worst_x = x;
            rep.worst_y = y;
            rep.worst_z = z;
          }
          ++rep.samples;
        } catch (const OutOfRange&) {
          ++rep.skipped;
        }
      }
      int c = 0;
      while (c < n && ++iy[c] == grid_per_dim) iy[c++] = 0;
      if (c == n) break;
    }
    int c = 0;
    while (c < n && ++ix[c] == grid_per_dim) ix[c++] = 0;
    if (c == n) break;
  }
  rep.extra = 1.1 * worst;  // headroom over the sampled maximum
  rep.min_form = worst;
  rep.max_form = worst;
  rep.passed = rep.samples > 0 && std::isfinite(worst);
  return rep;
}

MaxPrincipleReport small_ball_max_principle(
    const std::function<Mat(const Vec&)>& a, const std::function<Vec(const Vec&)>& b,
    const std::function<double(const Vec&)>& c, const Vec& center, double r,
    const std::function<double(const Vec&)>& u, int grid_per_dim, double tol) {
  const int n = center.size();
  MaxPrincipleReport rep;
  rep.r_limit = std::numeric_limits<double>::infinity();
  rep.max_interior = -std::numeric_limits<double>::infinity();

  Box bb;
  bb.lo = center.array() - r;
  bb.hi = center.array() + r;
  std::vector<int> idx(n, 0);
  std::vector<Vec> inside;
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i)
      x[i] = grid_per_dim == 1
                 ? center[i]
                 : bb.lo[i] + (bb.hi[i] - bb.lo[i]) * idx[i] / (grid_per_dim - 1);
    if ((x - center).norm() <= r) {
      inside.push_back(x);
      Mat A = a(x);
      Vec B = b(x);
      double C = std::max(c(x), 0.0);
      for (int i = 0; i < n; ++i) {
        double aii = A(i, i);
        if (aii <= 0) throw Error("small_ball_max_principle: a^{ii} must be positive");
        double bi = std::abs(B[i]);
        if (bi > 1e-300) rep.r_limit = std::min(rep.r_limit, aii / (2 * bi));
        if (C > 1e-300) rep.r_limit = std::min(rep.r_limit, std::sqrt(aii / (2 * C)));
      }
    }
    int k = 0;
    while (k < n && ++idx[k] == grid_per_dim) idx[k++] = 0;
    if (k == n) break;
  }
  if (r > rep.r_limit)
    throw RadiusTooLarge("ball radius " + format_double(r) + " exceeds the admissible " +
                         format_double(rep.r_limit));
  for (const Vec& x : inside) rep.max_interior = std::max(rep.max_interior, u(x));
  rep.passed = rep.max_interior <= tol;
  return rep;
}

}  // namespace gje
