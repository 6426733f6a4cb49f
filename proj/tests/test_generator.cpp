#include <doctest.h>

#include "gje/generator.hpp"
#include "helpers.hpp"

using namespace gje;
using namespace gje::testing;

namespace {

// Root of g(x,y,.) = u by plain bisection on the generator's z range,
// using only value(); independent of any closed-form or Newton path.
double bisect_g_star(const GeneratorSpec& gen, const Vec& x, const Vec& y, double u) {
  double lo = gen.z_range.lo, hi = gen.z_range.hi;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (gen.value(x, y, mid) > u)
      lo = mid;  // g decreasing in z
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void widen(GeneratorSpec& gen, double half) {
  gen.domain_x = Box::centered(gen.dim(), half);
  gen.domain_y = Box::centered(gen.dim(), half);
}

}  // namespace

TEST_CASE("classical jet inversion hits the closed form") {
  ClassicalGenerator gen(2);
  widen(gen, 10.0);
  JetPoint jet{v2(1.0, 2.0), 3.0, v2(4.0, 5.0)};
  YZSolution s = solve_yz(gen, jet);
  // y = p and z = x.p - u
  CHECK(s.y[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.y[1] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(s.z == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(s.residual <= 1e-10);
}

TEST_CASE("quadratic jet inversion hits the closed form") {
  QuadraticGenerator gen(2);
  widen(gen, 10.0);
  JetPoint jet{v2(0.0, 0.0), 1.0, v2(1.0, 0.0)};
  YZSolution s = solve_yz(gen, jet);
  // y = x + p and z = -|p|^2/2 - u
  CHECK(s.y[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.y[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.z == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("perturbed generator with zero coupling reduces to classical") {
  PerturbedGenerator pert(2, 0.0);
  ClassicalGenerator cls(2);
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    Vec x = random_in_box(rng, cls.domain_x);
    Vec y = random_in_box(rng, cls.domain_y);
    double z = -2.0 + 4.0 * (k / 50.0);
    CHECK(pert.value(x, y, z) == doctest::Approx(cls.value(x, y, z)).epsilon(1e-15));
    CHECK(pert.g_star(x, y, 0.3) == doctest::Approx(cls.g_star(x, y, 0.3)).epsilon(1e-12));
  }
}

TEST_CASE("perturbed jet inversion satisfies the defining equations") {
  PerturbedGenerator gen(2, 0.1);
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    Vec x = random_in_box(rng, gen.domain_x);
    Vec y = random_in_box(rng, gen.domain_y);
    double z = -1.0 + 2.0 * (k / 100.0);
    JetPoint jet{x, gen.value(x, y, z), gen.gx(x, y, z)};
    YZSolution s = solve_yz(gen, jet);
    CHECK(std::abs(gen.value(x, s.y, s.z) - jet.u) <= 1e-9);
    CHECK((gen.gx(x, s.y, s.z) - jet.p).norm() <= 1e-9);
    CHECK((s.y - y).norm() <= 1e-7);
    CHECK(std::abs(s.z - z) <= 1e-7);
  }
}

TEST_CASE("dual function: classical closed form and bisection oracle") {
  ClassicalGenerator cls(2);
  widen(cls, 5.0);
  // g* = x.y - u: x=(1,0), y=(2,3), u=5 -> z = -3
  CHECK(dual_g_star(cls, v2(1, 0), v2(2, 3), 5.0) == doctest::Approx(-3.0).epsilon(1e-12));

  PerturbedGenerator pert(2, 0.1);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    Vec x = random_in_box(rng, pert.domain_x);
    Vec y = random_in_box(rng, pert.domain_y);
    double u = -1.0 + 2.0 * (k / 50.0);
    CHECK(pert.g_star(x, y, u) == doctest::Approx(bisect_g_star(pert, x, y, u)).epsilon(1e-10));
  }
}

TEST_CASE("dual of the dual returns z for every builtin") {
  std::vector<std::shared_ptr<GeneratorSpec>> gens = {
      std::make_shared<ClassicalGenerator>(2), std::make_shared<QuadraticGenerator>(2),
      std::make_shared<PerturbedGenerator>(2, 0.1)};
  Rng rng(17);
  for (auto& g : gens) {
    for (int k = 0; k < 200; ++k) {
      Vec x = random_in_box(rng, g->domain_x);
      Vec y = random_in_box(rng, g->domain_y);
      double z = -3.0 + 6.0 * (k / 200.0);
      double u = g->value(x, y, z);
      CHECK(std::abs(g->g_star(x, y, u) - z) <= 1e-9);
    }
  }
}

TEST_CASE("dual derivative identities hold to finite-difference accuracy") {
  std::vector<std::shared_ptr<GeneratorSpec>> gens = {
      std::make_shared<ClassicalGenerator>(2), std::make_shared<QuadraticGenerator>(2),
      std::make_shared<PerturbedGenerator>(2, 0.1)};
  Rng rng(23);
  for (auto& g : gens) {
    for (int k = 0; k < 50; ++k) {
      Vec x = random_in_box(rng, g->domain_x);
      Vec y = random_in_box(rng, g->domain_y);
      double u = g->value(x, y, -0.5 + (k / 50.0));
      DualIdentityResiduals r = dual_derivative_identities(*g, x, y, u);
      CHECK(r.max() <= 1e-6);
    }
  }
}

TEST_CASE("structure matrices: classical and quadratic closed forms") {
  ClassicalGenerator cls(2);
  widen(cls, 5.0);
  JetPoint jet{v2(0.3, 0.6), 0.1, v2(0.4, 0.9)};
  StructureMatrices sm = structure_matrices(cls, jet);
  CHECK((sm.E - Mat::Identity(2, 2)).norm() <= 1e-9);
  CHECK(sm.A.norm() <= 1e-9);
  CHECK(sm.det_E == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sm.B(2.5) == doctest::Approx(2.5).epsilon(1e-9));

  QuadraticGenerator quad(2);
  widen(quad, 5.0);
  StructureMatrices sq = structure_matrices(quad, jet);
  CHECK((sq.E - Mat::Identity(2, 2)).norm() <= 1e-9);
  CHECK((sq.A + Mat::Identity(2, 2)).norm() <= 1e-9);
}

TEST_CASE("inverse of E equals the p-derivative of the focus map") {
  PerturbedGenerator gen(2, 0.1);
  Rng rng(31);
  for (int k = 0; k < 30; ++k) {
    Vec x = random_in_box(rng, gen.domain_x);
    Vec y = random_in_box(rng, gen.domain_y);
    double z = -0.8 + 1.6 * (k / 30.0);
    JetPoint jet{x, gen.value(x, y, z), gen.gx(x, y, z)};
    StructureMatrices sm = structure_matrices(gen, jet);

    const double h = 1e-6;
    Mat dy(2, 2);
    for (int j = 0; j < 2; ++j) {
      JetPoint jp = jet, jm = jet;
      jp.p[j] += h;
      jm.p[j] -= h;
      dy.col(j) = (solve_yz(gen, jp).y - solve_yz(gen, jm).y) / (2 * h);
    }
    CHECK((sm.E.inverse() - dy).norm() <= 1e-5);
  }
}

TEST_CASE("finite-difference first derivatives are second order") {
  Expression expr = Expression::parse("dot(x,y) - z + a*exp(dot(x,y))");
  ExprEnv params;
  params["a"] = ExprValue(0.3);

  Vec x = v2(0.4, 0.7), y = v2(0.6, 0.2);
  double z = 0.3;
  auto err_at = [&](double h) {
    ExpressionGenerator g(2, expr, params);
    g.h_fd = h;
    Vec exact = y * (1.0 + 0.3 * std::exp(x.dot(y)));
    return (g.gx(x, y, z) - exact).norm();
  };
  double e1 = err_at(4e-3), e2 = err_at(2e-3);
  double order = std::log2(e1 / e2);
  CHECK(order >= 1.8);
  CHECK(order <= 2.2);
}

TEST_CASE("error taxonomy: unreachable heights and exhausted iterations") {
  ClassicalGenerator cls(2);
  CHECK_THROWS_AS(cls.GeneratorSpec::g_star(v2(0.5, 0.5), v2(0.5, 0.5), 1000.0), OutOfRange);

  PerturbedGenerator pert(2, 0.1);
  JetPoint jet{v2(0.5, 0.5), 0.3, v2(0.4, 0.2)};
  CHECK_THROWS_AS(solve_yz(pert, jet, 1e-10, 0), NoConvergence);
}

TEST_CASE("perturbed coupling must stay below the degeneracy line") {
  CHECK_THROWS_AS(PerturbedGenerator(2, 1.0), ConfigError);
}

TEST_CASE("expression generator matches its hand-written counterpart") {
  Expression expr = Expression::parse("dot(x,y) - z + a*z*dot(x,y)");
  ExprEnv params;
  params["a"] = ExprValue(0.1);
  ExpressionGenerator eg(2, expr, params);
  PerturbedGenerator pg(2, 0.1);
  Rng rng(41);
  for (int k = 0; k < 50; ++k) {
    Vec x = random_in_box(rng, pg.domain_x);
    Vec y = random_in_box(rng, pg.domain_y);
    double z = -1.0 + 2.0 * (k / 50.0);
    CHECK(eg.value(x, y, z) == doctest::Approx(pg.value(x, y, z)).epsilon(1e-14));
    CHECK((eg.gx(x, y, z) - pg.gx(x, y, z)).norm() <= 1e-7);
    CHECK(std::abs(eg.gz(x, y, z) - pg.gz(x, y, z)) <= 1e-7);
  }
}
