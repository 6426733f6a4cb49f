#include <doctest.h>

#include <nlohmann/json.hpp>

#include "gje/gconvex.hpp"
#include "helpers.hpp"

using namespace gje;
using namespace gje::testing;

namespace {

PiecewiseGConvex hinge_1d() {
  // max(0, x - 0.5) on [0,1] under the classical generator
  PiecewiseGConvex fn;
  fn.orientation = Orientation::Primal;
  fn.domain = box1(0, 1);
  fn.pieces = {{v1(0.0), 0.0}, {v1(1.0), 0.5}};
  return fn;
}

}  // namespace

TEST_CASE("piecewise evaluation and tie structure of a 1-D hinge") {
  ClassicalGenerator gen(1);
  PiecewiseGConvex fn = hinge_1d();

  CHECK(eval(gen, fn, v1(0.25)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(eval(gen, fn, v1(0.75)) == doctest::Approx(0.25).epsilon(1e-15));

  ActiveSet below = active_set(gen, fn, v1(0.2));
  CHECK(below.indices == std::vector<int>{0});
  ActiveSet at = active_set(gen, fn, v1(0.5));
  CHECK(at.indices.size() == 2);

  Subdifferential sd = subdifferential(gen, fn, v1(0.5));
  REQUIRE(sd.hull.size() == 2);
  CHECK(sd.hull.front()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sd.hull.back()[0] == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<Vec> ties = tie_points(gen, fn, 2);
  REQUIRE(ties.size() == 1);
  CHECK(ties[0][0] == doctest::Approx(0.5).epsilon(1e-9));

  // Y(x, u, p) = p for the classical generator
  std::vector<Vec> img = y_image(gen, fn, v1(0.5));
  REQUIRE(img.size() == 2);
  CHECK(std::abs(img[0][0] - 0.0) + std::abs(img[1][0] - 1.0) <= 1e-8);
}

TEST_CASE("dual-orientation pieces evaluate through the dual function") {
  ClassicalGenerator gen(1);
  PiecewiseGConvex fn;
  fn.orientation = Orientation::Dual;
  fn.domain = box1(0, 1);
  fn.pieces = {{v1(0.0), 0.0}, {v1(1.0), 0.5}};  // foci x_i, heights u_i
  // g*(x_i, y, u_i) = x_i y - u_i
  CHECK(eval(gen, fn, v1(0.2)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(eval(gen, fn, v1(0.9)) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("triple tie point of a 2-D fan lies at the origin") {
  ClassicalGenerator gen(2);
  gen.domain_x = Box::centered(2, 1.0);
  PiecewiseGConvex fn;
  fn.orientation = Orientation::Primal;
  fn.domain = Box::centered(2, 1.0);
  fn.pieces = {{v2(0, 0), 0.0}, {v2(1, 0), 0.0}, {v2(0, 1), 0.0}};

  std::vector<Vec> ties = tie_points(gen, fn, 3);
  REQUIRE(ties.size() == 1);
  CHECK(ties[0].norm() <= 1e-8);

  Subdifferential sd = subdifferential(gen, fn, ties[0]);
  CHECK(sd.active.size() == 3);
  REQUIRE(sd.hull.size() == 3);
}

TEST_CASE("transform of a single piece recovers its dual exactly") {
  ClassicalGenerator gen(1);
  PiecewiseGConvex u;
  u.orientation = Orientation::Primal;
  u.domain = box1(0, 1);
  u.pieces = {{v1(0.5), 0.2}};  // u(x) = 0.5 x - 0.2

  PiecewiseGConvex v = g_star_transform(gen, u, box1(0, 1), 33);
  CHECK(v.orientation == Orientation::Dual);
  // v(y) = sup_x (x y - u(x)) = 0.2 + max(0, y - 0.5)
  CHECK(eval(gen, v, v1(0.5)) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(eval(gen, v, v1(0.9)) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(eval(gen, v, v1(0.1)) == doctest::Approx(0.2).epsilon(1e-12));

  PiecewiseGConvex u2 = g_transform(gen, v, box1(0, 1), 33);
  for (int k = 0; k <= 100; ++k) {
    Vec x = v1(k / 100.0);
    CHECK(std::abs(eval(gen, u2, x) - eval(gen, u, x)) <= 1e-10);
  }
}

TEST_CASE("double transform never exceeds the function and stays within the grid modulus") {
  ClassicalGenerator gen(2);
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    PiecewiseGConvex u;
    u.orientation = Orientation::Primal;
    u.domain = Box::unit(2);
    int pieces = 2 + (trial % 3);
    for (int i = 0; i < pieces; ++i)
      u.pieces.push_back({random_in_box(rng, Box::unit(2)), 0.2 * (i % 2)});

    const int grid = 33;
    PiecewiseGConvex v = g_star_transform(gen, u, Box::unit(2), grid);
    PiecewiseGConvex u2 = g_transform(gen, v, Box::unit(2), grid);

    // slopes are the piece foci, all in the unit box
    double lip = std::sqrt(2.0);
    double modulus = lip * (1.0 / (grid - 1)) * std::sqrt(2.0);
    for (int k = 0; k < 200; ++k) {
      Vec x = random_in_box(rng, u.domain);
      // the sup in each transform is itself sampled on the grid, so the
      // error is two-sided
      double d = eval(gen, u2, x) - eval(gen, u, x);
      CHECK(std::abs(d) <= 2 * modulus);
    }
  }
}

TEST_CASE("convex hull of planar points is counterclockwise and minimal") {
  std::vector<Vec> pts = {v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1), v2(0.5, 0.5), v2(0.5, 0.0)};
  std::vector<Vec> hull = convex_hull_2d(pts);
  REQUIRE(hull.size() == 4);
  double area2 = 0;
  for (size_t i = 0; i < hull.size(); ++i) {
    const Vec& a = hull[i];
    const Vec& b = hull[(i + 1) % hull.size()];
    area2 += a[0] * b[1] - b[0] * a[1];
  }
  CHECK(area2 == doctest::Approx(2.0).epsilon(1e-12));  // CCW orientation, area 1
}

TEST_CASE("piecewise functions round-trip through JSON") {
  PiecewiseGConvex fn = hinge_1d();
  fn.tie_tol = 3e-9;
  nlohmann::json j = fn;
  auto back = j.get<PiecewiseGConvex>();
  CHECK(back.orientation == fn.orientation);
  CHECK(back.tie_tol == fn.tie_tol);
  REQUIRE(back.pieces.size() == fn.pieces.size());
  for (size_t i = 0; i < fn.pieces.size(); ++i) {
    CHECK((back.pieces[i].y - fn.pieces[i].y).norm() == 0.0);
    CHECK(back.pieces[i].z == fn.pieces[i].z);
  }
  CHECK((back.domain.lo - fn.domain.lo).norm() == 0.0);
  CHECK((back.domain.hi - fn.domain.hi).norm() == 0.0);
}
