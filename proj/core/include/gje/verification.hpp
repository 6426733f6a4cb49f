#pragma once

// Sampled verification of the structural conditions a generating function
// may claim: convexity of the matrix family A along p (orthogonal and
// relaxed forms), its dual counterpart, monotonicity in the height, the
// gradient bound, and the small-ball maximum principle utility.

#include "gje/generator.hpp"

namespace gje {

struct ConditionReport {
  std::string condition;
  int samples = 0;
  int skipped = 0;         // jets where the inversion failed
  double min_form = 0.0;
  double max_form = 0.0;
  double threshold = 0.0;  // pass when min_form >= -threshold
  bool passed = false;
  double extra = 0.0;      // condition-specific constant (C, K0)
  Vec worst_x, worst_y;
  double worst_z = 0.0;
};

// D_{pp} A contracted on orthogonal xi, eta along jets sampled inside the
// admissible set. The second derivative uses directional central
// differences with Richardson extrapolation, step h on the p component.
ConditionReport check_A3w(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                          double h = 1e-2, double threshold = 1e-8);

// Relaxed form without orthogonality: form >= -C |xi| |eta| |xi.eta|.
// extra reports the smallest C that would certify the samples.
ConditionReport check_A3w_relaxed(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                                  double C, double h = 1e-2, double threshold = 1e-8);

// Dual condition, evaluated through the conjugation identity
//   D_qq A*(xi,xi,eta,eta) = -g_z D_pp A(E^{-1} xi, ., E^T eta, .),
// which maps orthogonal dual pairs to orthogonal primal pairs exactly.
ConditionReport check_A3w_star(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                               double h = 1e-2, double threshold = 1e-8);

// Local surrogate for injectivity of the jet-to-focus map: the inverse
// condition number sigma_min(E) / sigma_max(E) over sampled jets. Global
// injectivity is not decidable by sampling; this only certifies local
// nondegeneracy. extra reports the smallest |det E| seen.
ConditionReport check_A1_local(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                               double threshold = 1e-8);

// D_u A contracted on xi, central difference in the height.
ConditionReport check_A4w(const GeneratorSpec& gen, int samples, std::uint64_t seed,
                          double h = 1e-4, double threshold = 1e-8);

// Gradient bound: extra = K0 = 1.1 * max(|g_x|, |g*_y|) over a grid of
// admissible (x, y, height) triples; passed when every sample is finite.
ConditionReport check_A5(const GeneratorSpec& gen, int grid_per_dim, int height_samples = 5);

// Maximum principle on a small ball: given coefficient fields with
// a^{ii} > 0, c possibly positive, and a function u with u = 0 on the
// boundary and a.D2u + b.Du + cu >= 0, then u <= 0 provided
//   r <= min{ inf a^{ii}/(2 sup|b|), inf sqrt(a^{ii}/(2 c_+)) }.
// Throws RadiusTooLarge when r violates that bound.
struct MaxPrincipleReport {
  double r_limit = 0.0;
  double max_interior = 0.0;
  bool passed = false;
};
MaxPrincipleReport small_ball_max_principle(
    const std::function<Mat(const Vec&)>& a, const std::function<Vec(const Vec&)>& b,
    const std::function<double(const Vec&)>& c, const Vec& center, double r,
    const std::function<double(const Vec&)>& u, int grid_per_dim, double tol = 1e-10);

}  // namespace gje
