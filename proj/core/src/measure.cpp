#include "gje/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gje {

namespace {

// 8-point Gauss-Legendre on [-1, 1].
const double kGLx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                        0.7966664774136267,  0.9602898564975363};
const double kGLw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                        0.2223810344533745, 0.1012285362903763};

double gauss_1d(double a, double b, const std::function<double(double)>& f, int panels = 8) {
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    double pa = a + (b - a) * p / panels, pb = a + (b - a) * (p + 1) / panels;
    double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
    for (int k = 0; k < 8; ++k) s += half * kGLw[k] * f(mid + half * kGLx[k]);
  }
  return s;
}

bool point_in_polygon(const std::vector<Vec>& poly, const Vec& y) {
  bool in = false;
  size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((poly[i][1] > y[1]) != (poly[j][1] > y[1]) &&
        y[0] < (poly[j][0] - poly[i][0]) * (y[1] - poly[i][1]) / (poly[j][1] - poly[i][1]) +
                   poly[i][0])
      in = !in;
  }
  return in;
}

}  // namespace

bool TargetDensity::inside(const Vec& y) const {
  if (!domain.contains(y, 1e-12)) return false;
  if (!polygon.empty()) return point_in_polygon(polygon, y);
  return true;
}

TargetDensity TargetDensity::make(const Box& domain, std::function<double(const Vec&)> density,
                                  int grid_per_dim, std::uint64_t mc_seed, int mc_samples) {
  TargetDensity t;
  t.domain = domain;
  t.density = density ? std::move(density) : [](const Vec&) { return 1.0; };
  const int n = domain.dim();
  if (n <= 2) {
    std::vector<int> idx(n, 0);
    double cellw = domain.volume() / std::pow(grid_per_dim, n);
    while (true) {
      Vec y(n);
      for (int i = 0; i < n; ++i)
        y[i] = domain.lo[i] + (domain.hi[i] - domain.lo[i]) * (idx[i] + 0.5) / grid_per_dim;
      t.nodes.push_back(y);
      t.weights.push_back(cellw * t.density(y));
      int c = 0;
      while (c < n && ++idx[c] == grid_per_dim) idx[c++] = 0;
      if (c == n) break;
    }
  } else {
    Rng rng(mc_seed);
    double w = domain.volume() / mc_samples;
    for (int s = 0; s < mc_samples; ++s) {
      Vec y = random_in_box(rng, domain);
      t.nodes.push_back(y);
      t.weights.push_back(w * t.density(y));
    }
  }
  for (double w : t.weights) t.total += w;
  return t;
}

TargetDensity TargetDensity::make_polygon(std::vector<Vec> polygon,
                                          std::function<double(const Vec&)> density,
                                          int grid_per_dim) {
  if (polygon.size() < 3) throw ConfigError("target polygon needs at least 3 vertices");
  Box bb;
  bb.lo = polygon[0];
  bb.hi = polygon[0];
  for (const Vec& v : polygon) {
    bb.lo = bb.lo.cwiseMin(v);
    bb.hi = bb.hi.cwiseMax(v);
  }
  TargetDensity t;
  t.domain = bb;
  t.polygon = std::move(polygon);
  t.density = density ? std::move(density) : [](const Vec&) { return 1.0; };
  double cellw = bb.volume() / (static_cast<double>(grid_per_dim) * grid_per_dim);
  for (int ix = 0; ix < grid_per_dim; ++ix)
    for (int iy = 0; iy < grid_per_dim; ++iy) {
      Vec y(2);
      y[0] = bb.lo[0] + (bb.hi[0] - bb.lo[0]) * (ix + 0.5) / grid_per_dim;
      y[1] = bb.lo[1] + (bb.hi[1] - bb.lo[1]) * (iy + 0.5) / grid_per_dim;
      if (!point_in_polygon(t.polygon, y)) continue;
      t.nodes.push_back(y);
      t.weights.push_back(cellw * t.density(y));
    }
  for (double w : t.weights) t.total += w;
  return t;
}

// Polygon helpers -------------------------------------------------------------

std::vector<Vec> clip_halfplane(const std::vector<Vec>& poly, const Vec& a, double b) {
  std::vector<Vec> out;
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec& cur = poly[i];
    const Vec& nxt = poly[(i + 1) % n];
    double dc = a.dot(cur) + b, dn = a.dot(nxt) + b;
    if (dc >= 0) out.push_back(cur);
    if ((dc >= 0) != (dn >= 0)) {
      double t = dc / (dc - dn);
      out.push_back(Vec(cur + t * (nxt - cur)));
    }
  }
  return out;
}

double polygon_area(const std::vector<Vec>& poly) {
  double s = 0.0;
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec& p = poly[i];
    const Vec& q = poly[(i + 1) % n];
    s += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(s);
}

double polygon_integral(const std::vector<Vec>& poly,
                        const std::function<double(const Vec&)>& f) {
  if (poly.size() < 3) return 0.0;
  // degree-5 rule on each fan triangle
  static const double s15 = std::sqrt(15.0);
  const double a1 = (6.0 - s15) / 21.0, w1 = (155.0 - s15) / 1200.0;
  const double a2 = (6.0 + s15) / 21.0, w2 = (155.0 + s15) / 1200.0;
  double total = 0.0;
  for (size_t i = 1; i + 1 < poly.size(); ++i) {
    const Vec &A = poly[0], &B = poly[i], &C = poly[i + 1];
    double area =
        0.5 * std::abs((B[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (B[1] - A[1]));
    if (area < 1e-16) continue;
    auto at = [&](double l0, double l1, double l2) { return Vec(l0 * A + l1 * B + l2 * C); };
    double s = (9.0 / 40.0) * f(at(1.0 / 3, 1.0 / 3, 1.0 / 3));
    s += w1 * (f(at(1 - 2 * a1, a1, a1)) + f(at(a1, 1 - 2 * a1, a1)) + f(at(a1, a1, 1 - 2 * a1)));
    s += w2 * (f(at(1 - 2 * a2, a2, a2)) + f(at(a2, 1 - 2 * a2, a2)) + f(at(a2, a2, 1 - 2 * a2)));
    total += area * (s / (9.0 / 40.0 + 3 * w1 + 3 * w2));
  }
  return total;
}

// Cell masses -----------------------------------------------------------------

namespace {

// 1-D: locate cell boundaries by argmax scan plus bisection, integrate f*
// piece by piece. Works for any generator and reaches root-finder accuracy.
void masses_interval(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                     const TargetDensity& target, CellDecomposition& cd) {
  const int N = static_cast<int>(dual.pieces.size());
  const double lo = target.domain.lo[0], hi = target.domain.hi[0];
  const int scan = std::max(1024, 64 * N);

  auto argmax_at = [&](double t) {
    Vec y = Vec::Constant(1, t);
    int best = 0;
    double bv = piece_value(gen, dual, 0, y);
    for (int i = 1; i < N; ++i) {
      double v = piece_value(gen, dual, i, y);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    return best;
  };

  std::vector<double> cuts = {lo};
  std::vector<int> owner;
  int prev = argmax_at(lo);
  for (int k = 1; k <= scan; ++k) {
    double t = lo + (hi - lo) * k / scan;
    int cur = argmax_at(t);
    if (cur != prev) {
      double a = lo + (hi - lo) * (k - 1) / scan, b = t;
      auto diff = [&](double s) {
        Vec y = Vec::Constant(1, s);
        return piece_value(gen, dual, prev, y) - piece_value(gen, dual, cur, y);
      };
      for (int it = 0; it < 80; ++it) {
        double m = 0.5 * (a + b);
        if (diff(m) >= 0)
          a = m;
        else
          b = m;
      }
      owner.push_back(prev);
      cuts.push_back(0.5 * (a + b));
      prev = cur;
    }
  }
  owner.push_back(prev);
  cuts.push_back(hi);

  cd.masses.assign(N, 0.0);
  cd.intervals.assign(N, {});
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    double m = gauss_1d(cuts[s], cuts[s + 1],
                        [&](double t) { return target.density(Vec::Constant(1, t)); });
    cd.masses[owner[s]] += m;
    cd.intervals[owner[s]].emplace_back(cuts[s], cuts[s + 1]);
  }
  cd.engine = "interval";
}

// 2-D with affine dual comparisons: each cell is the base region clipped by
// the halfplanes {g*_i >= g*_j}.
void masses_polygon(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                    const TargetDensity& target, CellDecomposition& cd) {
  const int N = static_cast<int>(dual.pieces.size());
  std::vector<Vec> base = target.polygon;
  if (base.empty()) {
    base = {target.domain.lo, Vec(2), target.domain.hi, Vec(2)};
    base[1] << target.domain.hi[0], target.domain.lo[1];
    base[3] << target.domain.lo[0], target.domain.hi[1];
  }

  // Affine difference d_ij(y) = g*_i(y) - g*_j(y): recover (a, b) from three
  // evaluations.
  Vec ref = target.domain.center();
  auto halfplane = [&](int i, int j, Vec& a, double& b) {
    auto d = [&](const Vec& y) {
      return piece_value(gen, dual, i, y) - piece_value(gen, dual, j, y);
    };
    a.resize(2);
    double d0 = d(ref);
    for (int k = 0; k < 2; ++k) {
      Vec yp = ref, ym = ref;
      double h = 0.5 * std::max(1.0, target.domain.extent()[k]);
      yp[k] += h;
      ym[k] -= h;
      a[k] = (d(yp) - d(ym)) / (2 * h);
    }
    b = d0 - a.dot(ref);
  };

  cd.masses.assign(N, 0.0);
  cd.polygons.assign(N, {});
  for (int i = 0; i < N; ++i) {
    std::vector<Vec> poly = base;
    for (int j = 0; j < N && !poly.empty(); ++j) {
      if (j == i) continue;
      Vec a;
      double b;
      halfplane(i, j, a, b);
      poly = clip_halfplane(poly, a, b);
    }
    cd.polygons[i] = poly;
    if (poly.size() >= 3) cd.masses[i] = polygon_integral(poly, target.density);
  }
  cd.engine = "polygon";
}

void masses_nodes(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                  const TargetDensity& target, CellDecomposition& cd) {
  const int N = static_cast<int>(dual.pieces.size());
  cd.masses.assign(N, 0.0);
  for (size_t k = 0; k < target.nodes.size(); ++k) {
    int best = 0;
    double bv = piece_value(gen, dual, 0, target.nodes[k]);
    for (int i = 1; i < N; ++i) {
      double v = piece_value(gen, dual, i, target.nodes[k]);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    cd.masses[best] += target.weights[k];
  }
  cd.engine = "nodes";
}

}  // namespace

std::vector<double> cell_masses(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                                const TargetDensity& target) {
  if (dual.orientation != Orientation::Dual)
    throw Error("cell_masses: expected a dual function");
  if (dual.pieces.empty()) throw Error("cell_masses: no pieces");
  CellDecomposition cd;
  const int n = target.domain.dim();
  if (n == 1)
    masses_interval(gen, dual, target, cd);
  else if (n == 2 && gen.dual_comparisons_affine() && target.polygon.empty())
    masses_polygon(gen, dual, target, cd);
  else
    masses_nodes(gen, dual, target, cd);
  return cd.masses;
}

CellDecomposition cell_decomposition(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                                     const TargetDensity& target) {
  if (dual.orientation != Orientation::Dual)
    throw Error("cell_decomposition: expected a dual function");
  if (dual.pieces.empty()) throw Error("cell_decomposition: no pieces");
  CellDecomposition cd;
  const int n = target.domain.dim();
  const int N = static_cast<int>(dual.pieces.size());

  // Node assignment with tie flags.
  cd.assignment.resize(target.nodes.size());
  cd.tied.assign(target.nodes.size(), 0);
  size_t tie_count = 0;
  for (size_t k = 0; k < target.nodes.size(); ++k) {
    std::vector<double> vals(N);
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int i = 0; i < N; ++i) {
      vals[i] = piece_value(gen, dual, i, target.nodes[k]);
      if (vals[i] > best) {
        best = vals[i];
        arg = i;
      }
    }
    cd.assignment[k] = arg;
    double tol = dual.tie_tol * std::max(1.0, std::abs(best));
    int near = 0;
    for (int i = 0; i < N; ++i)
      if (vals[i] >= best - tol) ++near;
    if (near >= 2) {
      cd.tied[k] = 1;
      ++tie_count;
    }
  }
  cd.tie_fraction = target.nodes.empty() ? 0.0 : double(tie_count) / target.nodes.size();

  if (n == 1)
    masses_interval(gen, dual, target, cd);
  else if (n == 2 && gen.dual_comparisons_affine() && target.polygon.empty())
    masses_polygon(gen, dual, target, cd);
  else {
    cd.masses.assign(N, 0.0);
    for (size_t k = 0; k < target.nodes.size(); ++k)
      cd.masses[cd.assignment[k]] += target.weights[k];
    cd.engine = "nodes";
  }
  return cd;
}

// Atoms -----------------------------------------------------------------------

std::vector<MeasureAtom> ma_measure_atoms(const GeneratorSpec& gen,
                                          const PiecewiseGConvex& primal,
                                          const TargetDensity& target) {
  if (primal.orientation != Orientation::Primal)
    throw Error("ma_measure_atoms: expected a primal function");
  const int n = primal.dim();
  const int min_active = n + 1;  // full-dimensional subdifferential hull
  std::vector<MeasureAtom> atoms;

  for (const Vec& xv : tie_points(gen, primal, min_active)) {
    Subdifferential sd = subdifferential(gen, primal, xv);
    MeasureAtom atom;
    atom.x = xv;
    atom.active = sd.active;
    atom.hull = sd.hull;

    auto integrand = [&](const Vec& p) {
      JetPoint jet{xv, sd.value, p};
      StructureMatrices sm = structure_matrices(gen, jet);
      if (!target.inside(sm.y)) return 0.0;
      return target.density(sm.y) / std::abs(sm.det_E);
    };

    if (n == 1) {
      double lo = sd.hull.front()[0], hi = sd.hull.back()[0];
      atom.mass = gauss_1d(lo, hi, [&](double p) { return integrand(Vec::Constant(1, p)); });
    } else if (n == 2) {
      atom.mass = polygon_integral(sd.hull, integrand);
    } else {
      throw Error("ma_measure_atoms: only n <= 2 supported");
    }
    atoms.push_back(std::move(atom));
  }
  return atoms;
}

std::vector<double> weak_convergence_probe(const std::vector<MeasureAtom>& atoms,
                                           const std::vector<Box>& probes) {
  std::vector<double> out(probes.size(), 0.0);
  for (size_t k = 0; k < probes.size(); ++k)
    for (const MeasureAtom& a : atoms)
      if (probes[k].contains(a.x)) out[k] += a.mass;
  return out;
}

}  // namespace gje
