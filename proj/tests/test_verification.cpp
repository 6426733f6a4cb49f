#include <doctest.h>

#include "gje/verification.hpp"
#include "helpers.hpp"

using namespace gje;
using namespace gje::testing;

TEST_CASE("classical and quadratic generators certify the convexity conditions") {
  ClassicalGenerator cls(2);
  QuadraticGenerator quad(2);
  for (const GeneratorSpec* g : {static_cast<const GeneratorSpec*>(&cls),
                                 static_cast<const GeneratorSpec*>(&quad)}) {
    ConditionReport a3 = check_A3w(*g, 300, 2024);
    CHECK(a3.passed);
    CHECK(a3.min_form >= -1e-8);
    CHECK(a3.max_form <= 1e-8);  // the matrix family is affine in p, form is 0
    CHECK(a3.skipped == 0);

    ConditionReport a4 = check_A4w(*g, 300, 2024);
    CHECK(a4.passed);
    CHECK(std::abs(a4.min_form) <= 1e-8);

    ConditionReport a3s = check_A3w_star(*g, 300, 2024);
    CHECK(a3s.passed);
  }
}

TEST_CASE("local nondegeneracy surrogate certifies the builtin focus maps") {
  // classical E = I: inverse condition number exactly 1, det exactly 1
  ClassicalGenerator cls(2);
  ConditionReport cr = check_A1_local(cls, 200, 7);
  CHECK(cr.passed);
  CHECK(cr.min_form == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cr.extra == doctest::Approx(1.0).epsilon(1e-10));

  PerturbedGenerator pert(2, 0.1);
  ConditionReport pr = check_A1_local(pert, 200, 7);
  CHECK(pr.passed);
  CHECK(pr.min_form > 0.1);  // well-conditioned on the admissible box
  CHECK(pr.extra > 0.1);
}

TEST_CASE("perturbed family has an identically vanishing curvature form") {
  // g_xx = 0 for every coupling, so the A3w form is exactly zero; the
  // check must classify it as degenerate-nonnegative
  for (double a : {0.02, 0.1, 0.3}) {
    PerturbedGenerator gen(2, a);
    ConditionReport r = check_A3w(gen, 1000, 7);
    CHECK(r.passed);
    CHECK(std::abs(r.min_form) <= 1e-10);
    CHECK(std::abs(r.max_form) <= 1e-10);
  }
}

TEST_CASE("primal condition passing implies the dual condition passing") {
  std::vector<std::shared_ptr<GeneratorSpec>> gens = {
      std::make_shared<ClassicalGenerator>(2), std::make_shared<QuadraticGenerator>(2),
      std::make_shared<PerturbedGenerator>(2, 0.1)};
  for (auto& g : gens) {
    ConditionReport a3 = check_A3w(*g, 400, 11);
    ConditionReport a3s = check_A3w_star(*g, 400, 11);
    if (a3.passed) CHECK(a3s.passed);
  }
}

TEST_CASE("relaxed condition reports the certifying constant") {
  ClassicalGenerator cls(2);
  ConditionReport r = check_A3w_relaxed(cls, 200, 31, 1.0);
  CHECK(r.passed);
  CHECK(r.extra <= 1e-8);  // zero form needs no slack constant
}

TEST_CASE("condition checks are deterministic in the seed") {
  PerturbedGenerator gen(2, 0.1);
  ConditionReport a = check_A3w(gen, 200, 555);
  ConditionReport b = check_A3w(gen, 200, 555);
  CHECK(a.min_form == b.min_form);
  CHECK(a.max_form == b.max_form);
  CHECK((a.worst_x - b.worst_x).norm() == 0.0);
}

TEST_CASE("gradient bound constant matches the corner maximum") {
  ClassicalGenerator cls(2);
  ConditionReport r = check_A5(cls, 9);
  CHECK(r.passed);
  // |g_x| = |y| and |g*_y| = |x| peak at the corner (1,1)
  CHECK(r.extra == doctest::Approx(1.1 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("one-dimensional condition checks pass vacuously") {
  ClassicalGenerator cls(1);
  ConditionReport r = check_A3w(cls, 100, 1);
  CHECK(r.passed);  // no orthogonal pair exists in one dimension
}

TEST_CASE("small-ball maximum principle accepts subsolutions and rejects big radii") {
  auto a = [](const Vec&) { return Mat::Identity(2, 2).eval(); };
  auto b = [](const Vec&) { return Vec::Zero(2).eval(); };
  auto c0 = [](const Vec&) { return 0.0; };
  Vec center = v2(0.0, 0.0);
  double r = 0.3;
  // u = |x|^2 - r^2: Laplacian 4 >= 0, zero on the boundary
  auto u = [&](const Vec& x) { return x.squaredNorm() - r * r; };
  MaxPrincipleReport rep = small_ball_max_principle(a, b, c0, center, r, u, 41);
  CHECK(rep.passed);
  CHECK(rep.max_interior <= 1e-12);

  auto c_big = [](const Vec&) { return 50.0; };
  CHECK_THROWS_AS(small_ball_max_principle(a, b, c_big, center, 0.5, u, 21), RadiusTooLarge);
}
