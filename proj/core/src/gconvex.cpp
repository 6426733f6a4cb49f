#include "gje/gconvex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

namespace gje {

double piece_value(const GeneratorSpec& gen, const PiecewiseGConvex& fn, int i, const Vec& x) {
  const GAffine& pc = fn.pieces[i];
  if (fn.orientation == Orientation::Primal) return gen.value(x, pc.y, pc.z);
  return gen.g_star(pc.y, x, pc.z);
}

double eval(const GeneratorSpec& gen, const PiecewiseGConvex& fn, const Vec& x) {
  if (fn.pieces.empty()) throw Error("eval: function has no pieces");
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(fn.pieces.size()); ++i)
    best = std::max(best, piece_value(gen, fn, i, x));
  return best;
}

ActiveSet active_set(const GeneratorSpec& gen, const PiecewiseGConvex& fn, const Vec& x) {
  ActiveSet a;
  std::vector<double> vals(fn.pieces.size());
  double best = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < fn.pieces.size(); ++i) {
    vals[i] = piece_value(gen, fn, static_cast<int>(i), x);
    best = std::max(best, vals[i]);
  }
  double tol = fn.tie_tol * std::max(1.0, std::abs(best));
  a.value = best;
  for (size_t i = 0; i < fn.pieces.size(); ++i)
    if (vals[i] >= best - tol) a.indices.push_back(static_cast<int>(i));
  return a;
}

namespace {

Vec piece_slope(const GeneratorSpec& gen, const PiecewiseGConvex& fn, int i, const Vec& x) {
  const GAffine& pc = fn.pieces[i];
  if (fn.orientation == Orientation::Primal) return gen.gx(x, pc.y, pc.z);
  // dual slope: D_y g*(x_i, y, u_i) = -g_y/g_z at z = g*
  return gen.g_star_y(pc.y, x, pc.z);
}

}  // namespace

std::vector<Vec> convex_hull_2d(std::vector<Vec> pts) {
  if (pts.size() < 3) return pts;
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec& a, const Vec& b) { return (a - b).norm() < 1e-13; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Vec> h(2 * pts.size());
  size_t k = 0;
  for (const Vec& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross(h[k - 2], h[k - 1], *it) <= 0) --k;
    h[k++] = *it;
  }
  h.resize(k - 1);
  return h;
}

Subdifferential subdifferential(const GeneratorSpec& gen, const PiecewiseGConvex& fn,
                                const Vec& x) {
  Subdifferential s;
  ActiveSet a = active_set(gen, fn, x);
  s.value = a.value;
  s.active = a.indices;
  for (int i : a.indices) s.slopes.push_back(piece_slope(gen, fn, i, x));
  const int n = fn.dim();
  if (n == 1) {
    double lo = s.slopes.front()[0], hi = lo;
    for (const Vec& p : s.slopes) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
    s.hull = {Vec::Constant(1, lo), Vec::Constant(1, hi)};
  } else if (n == 2) {
    s.hull = convex_hull_2d(s.slopes);
  } else {
    s.hull = s.slopes;
  }
  return s;
}

std::vector<Vec> y_image(const GeneratorSpec& gen, const PiecewiseGConvex& fn, const Vec& x) {
  if (fn.orientation != Orientation::Primal)
    throw Error("y_image: expected a primal function");
  Subdifferential s = subdifferential(gen, fn, x);
  std::vector<Vec> img;
  for (const Vec& p : s.hull) {
    JetPoint jet{x, s.value, p};
    img.push_back(solve_yz(gen, jet).y);
  }
  return img;
}

// Tie points ------------------------------------------------------------------

namespace {

bool globally_active(const GeneratorSpec& gen, const PiecewiseGConvex& fn, const Vec& x,
                     int i) {
  ActiveSet a = active_set(gen, fn, x);
  return std::find(a.indices.begin(), a.indices.end(), i) != a.indices.end();
}

void push_unique(std::vector<Vec>& pts, const Vec& x, double tol = 1e-8) {
  for (const Vec& q : pts)
    if ((q - x).norm() < tol) return;
  pts.push_back(x);
}

std::vector<Vec> tie_points_1d(const GeneratorSpec& gen, const PiecewiseGConvex& fn) {
  std::vector<Vec> out;
  const int N = static_cast<int>(fn.pieces.size());
  const int scan = 512;
  double lo = fn.domain.lo[0], hi = fn.domain.hi[0];
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      auto d = [&](double t) {
        Vec x = Vec::Constant(1, t);
        return piece_value(gen, fn, i, x) - piece_value(gen, fn, j, x);
      };
      double prev = d(lo);
      for (int k = 1; k <= scan; ++k) {
        double t = lo + (hi - lo) * k / scan;
        double cur = d(t);
        if ((prev <= 0) != (cur <= 0)) {
          double a = lo + (hi - lo) * (k - 1) / scan, b = t, fa = prev;
          for (int it = 0; it < 80; ++it) {
            double m = 0.5 * (a + b), fm = d(m);
            if ((fa <= 0) == (fm <= 0)) {
              a = m;
              fa = fm;
            } else {
              b = m;
            }
          }
          Vec x = Vec::Constant(1, 0.5 * (a + b));
          if (globally_active(gen, fn, x, i) && globally_active(gen, fn, x, j))
            push_unique(out, x);
        }
        prev = cur;
      }
    }
  return out;
}

std::vector<Vec> tie_points_2d(const GeneratorSpec& gen, const PiecewiseGConvex& fn) {
  std::vector<Vec> out;
  const int N = static_cast<int>(fn.pieces.size());
  const int scan = 48;
  // Grid seeds: at each node record the top three pieces and the tie gap.
  struct Seed {
    Vec x;
    int i, j, k;
    double gap;
  };
  std::vector<Seed> seeds;
  for (int ix = 0; ix <= scan; ++ix)
    for (int iy = 0; iy <= scan; ++iy) {
      Vec x(2);
      x[0] = fn.domain.lo[0] + (fn.domain.hi[0] - fn.domain.lo[0]) * ix / scan;
      x[1] = fn.domain.lo[1] + (fn.domain.hi[1] - fn.domain.lo[1]) * iy / scan;
      std::vector<std::pair<double, int>> v;
      for (int i = 0; i < N; ++i) v.emplace_back(piece_value(gen, fn, i, x), i);
      std::sort(v.rbegin(), v.rend());
      if (v.size() < 3) continue;
      seeds.push_back({x, v[0].second, v[1].second, v[2].second, v[0].first - v[2].first});
    }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
    return a.gap < b.gap;
  });
  if (seeds.size() > 64) seeds.resize(64);

  double hscale = 1e-6 * std::max(1.0, fn.domain.extent().maxCoeff());
  for (const Seed& sd : seeds) {
    // Newton on (g_i - g_j, g_i - g_k) = 0 with finite-difference Jacobian.
    Vec x = sd.x;
    auto F = [&](const Vec& xx) {
      Vec f(2);
      double vi = piece_value(gen, fn, sd.i, xx);
      f[0] = vi - piece_value(gen, fn, sd.j, xx);
      f[1] = vi - piece_value(gen, fn, sd.k, xx);
      return f;
    };
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      Vec f = F(x);
      if (f.norm() < 1e-12 * std::max(1.0, std::abs(eval(gen, fn, x)))) {
        ok = true;
        break;
      }
      Mat J(2, 2);
      for (int c = 0; c < 2; ++c) {
        Vec xp = x, xm = x;
        xp[c] += hscale;
        xm[c] -= hscale;
        J.col(c) = (F(xp) - F(xm)) / (2 * hscale);
      }
      Eigen::FullPivLU<Mat> lu(J);
      if (!lu.isInvertible()) break;
      Vec step = lu.solve(-f);
      if (step.norm() > fn.domain.extent().norm()) break;
      x += step;
    }
    if (!ok || !fn.domain.contains(x, 1e-9)) continue;
    if (globally_active(gen, fn, x, sd.i) && globally_active(gen, fn, x, sd.j) &&
        globally_active(gen, fn, x, sd.k))
      push_unique(out, x);
  }
  return out;
}

}  // namespace

std::vector<Vec> tie_points(const GeneratorSpec& gen, const PiecewiseGConvex& fn,
                            int min_active) {
  if (fn.pieces.size() < 2) return {};
  std::vector<Vec> raw =
      fn.dim() == 1 ? tie_points_1d(gen, fn)
      : fn.dim() == 2
          ? tie_points_2d(gen, fn)
          : throw Error("tie_points: only n <= 2 supported");
  std::vector<Vec> out;
  for (const Vec& x : raw)
    if (static_cast<int>(active_set(gen, fn, x).indices.size()) >= min_active)
      out.push_back(x);
  return out;
}

// Transforms ------------------------------------------------------------------

namespace {

std::vector<Vec> grid_points(const Box& b, int per_dim) {
  std::vector<Vec> pts;
  const int n = b.dim();
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i)
      x[i] = per_dim == 1 ? b.center()[i]
                          : b.lo[i] + (b.hi[i] - b.lo[i]) * idx[i] / (per_dim - 1);
    pts.push_back(x);
    int c = 0;
    while (c < n && ++idx[c] == per_dim) idx[c++] = 0;
    if (c == n) break;
  }
  return pts;
}

// Shared body of both transforms: build candidate anchor points, make one
// piece per candidate, prune pieces never active on the probe grid.
PiecewiseGConvex transform(const GeneratorSpec& gen, const PiecewiseGConvex& src,
                           const Box& dst_domain, int grid_per_dim, Orientation dst_orient) {
  PiecewiseGConvex dst;
  dst.orientation = dst_orient;
  dst.domain = dst_domain;
  dst.tie_tol = src.tie_tol;

  std::vector<Vec> anchors = grid_points(src.domain, grid_per_dim);
  if (src.pieces.size() >= 2 && src.dim() <= 2)
    for (const Vec& x : tie_points(gen, src, 2)) push_unique(anchors, x, 1e-12);

  for (const Vec& a : anchors) dst.pieces.push_back({a, eval(gen, src, a)});

  // Prune: keep pieces that achieve the max somewhere on a probe grid.
  std::vector<bool> keep(dst.pieces.size(), false);
  for (const Vec& q : grid_points(dst_domain, grid_per_dim)) {
    ActiveSet as = active_set(gen, dst, q);
    for (int i : as.indices) keep[i] = true;
  }
  PiecewiseGConvex pruned = dst;
  pruned.pieces.clear();
  for (size_t i = 0; i < dst.pieces.size(); ++i)
    if (keep[i]) pruned.pieces.push_back(dst.pieces[i]);
  return pruned.pieces.empty() ? dst : pruned;
}

}  // namespace

PiecewiseGConvex g_star_transform(const GeneratorSpec& gen, const PiecewiseGConvex& primal,
                                  const Box& target_domain, int grid_per_dim) {
  if (primal.orientation != Orientation::Primal)
    throw Error("g_star_transform: expected a primal function");
  return transform(gen, primal, target_domain, grid_per_dim, Orientation::Dual);
}

PiecewiseGConvex g_transform(const GeneratorSpec& gen, const PiecewiseGConvex& dual,
                             const Box& source_domain, int grid_per_dim) {
  if (dual.orientation != Orientation::Dual)
    throw Error("g_transform: expected a dual function");
  return transform(gen, dual, source_domain, grid_per_dim, Orientation::Primal);
}

// JSON ------------------------------------------------------------------------

void to_json(nlohmann::json& j, const PiecewiseGConvex& fn) {
  j = nlohmann::json::object();
  j["orientation"] = fn.orientation == Orientation::Primal ? "primal" : "dual";
  j["tie_tol"] = fn.tie_tol;
  j["domain"] = {{"lo", std::vector<double>(fn.domain.lo.begin(), fn.domain.lo.end())},
                 {"hi", std::vector<double>(fn.domain.hi.begin(), fn.domain.hi.end())}};
  auto arr = nlohmann::json::array();
  for (const GAffine& p : fn.pieces)
    arr.push_back({{"y", std::vector<double>(p.y.begin(), p.y.end())}, {"z", p.z}});
  j["pieces"] = arr;
}

void from_json(const nlohmann::json& j, PiecewiseGConvex& fn) {
  std::string o = j.at("orientation").get<std::string>();
  if (o == "primal")
    fn.orientation = Orientation::Primal;
  else if (o == "dual")
    fn.orientation = Orientation::Dual;
  else
    throw ConfigError("piecewise function: orientation must be primal or dual");
  fn.tie_tol = j.value("tie_tol", 1e-9);
  auto lo = j.at("domain").at("lo").get<std::vector<double>>();
  auto hi = j.at("domain").at("hi").get<std::vector<double>>();
  if (lo.size() != hi.size() || lo.empty())
    throw ConfigError("piecewise function: bad domain");
  fn.domain.lo = Eigen::Map<const Vec>(lo.data(), lo.size());
  fn.domain.hi = Eigen::Map<const Vec>(hi.data(), hi.size());
  fn.pieces.clear();
  for (const auto& pj : j.at("pieces")) {
    GAffine p;
    auto y = pj.at("y").get<std::vector<double>>();
    if (y.size() != lo.size()) throw ConfigError("piecewise function: piece dim mismatch");
    p.y = Eigen::Map<const Vec>(y.data(), y.size());
    p.z = pj.at("z").get<double>();
    fn.pieces.push_back(p);
  }
  if (fn.pieces.empty()) throw ConfigError("piecewise function: no pieces");
}

}  // namespace gje
