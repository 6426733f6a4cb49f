#pragma once

// Shared small types: axis-aligned boxes, error taxonomy, deterministic RNG
// helpers and numeric formatting used across the library.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gje {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Axis-aligned box in R^n.
struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& x, double slack = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    return true;
  }

  Vec center() const { return 0.5 * (lo + hi); }
  Vec extent() const { return hi - lo; }
  double volume() const { return (hi - lo).prod(); }
  double diameter() const { return (hi - lo).norm(); }

  Vec clamp(const Vec& x) const {
    Vec y = x;
    for (int i = 0; i < dim(); ++i) y[i] = std::min(std::max(y[i], lo[i]), hi[i]);
    return y;
  }

  static Box unit(int n) {
    Box b;
    b.lo = Vec::Zero(n);
    b.hi = Vec::Ones(n);
    return b;
  }

  static Box centered(int n, double half) {
    Box b;
    b.lo = Vec::Constant(n, -half);
    b.hi = Vec::Constant(n, half);
    return b;
  }
};

// Closed interval, used for admissible heights and the z-range.
struct Interval {
  double lo = 0.0, hi = 0.0;
  bool contains(double t, double slack = 0.0) const { return t >= lo - slack && t <= hi + slack; }
  double length() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

// Error taxonomy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& msg) : Error(msg) {}
};
struct OutOfRange : Error {
  explicit OutOfRange(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};
struct PinOutOfRange : Error {
  explicit PinOutOfRange(const std::string& msg) : Error(msg) {}
};
struct RadiusTooLarge : Error {
  explicit RadiusTooLarge(const std::string& msg) : Error(msg) {}
};
struct StrictCheckFailure : Error {
  explicit StrictCheckFailure(const std::string& msg) : Error(msg) {}
};

using Rng = std::mt19937_64;

inline Vec random_in_box(Rng& rng, const Box& b) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = b.lo[i] + u(rng) * (b.hi[i] - b.lo[i]);
  return x;
}

// Unit vector uniform on the sphere.
inline Vec random_direction(Rng& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

// 17 significant digits: round-trips a double exactly in decimal.
std::string format_double(double v);

// Runs fn(i) for i in [0, count). Single-threaded for threads <= 1.
void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace gje
