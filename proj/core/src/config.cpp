#include "gje/config.hpp"

#include <fstream>

namespace gje {

using nlohmann::json;

Vec vec_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty numeric array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("expected a numeric array");
    v[i] = j[i].get<double>();
  }
  return v;
}

Box box_from_json(const json& j) {
  if (!j.contains("lo") || !j.contains("hi"))
    throw ConfigError("box needs 'lo' and 'hi' arrays");
  Box b;
  b.lo = vec_from_json(j["lo"]);
  b.hi = vec_from_json(j["hi"]);
  if (b.lo.size() != b.hi.size()) throw ConfigError("box lo/hi dimension mismatch");
  for (int i = 0; i < b.dim(); ++i)
    if (!(b.lo[i] < b.hi[i])) throw ConfigError("box must have lo < hi in every coordinate");
  return b;
}

std::shared_ptr<GeneratorSpec> generator_from_json(const json& j) {
  if (!j.contains("name")) throw ConfigError("generator: missing 'name'");
  std::string name = j["name"].get<std::string>();
  int dim = j.value("dim", 1);
  if (dim < 1 || dim > 3) throw ConfigError("generator: dim must be 1..3");

  std::shared_ptr<GeneratorSpec> g;
  if (name == "classical") {
    g = std::make_shared<ClassicalGenerator>(dim);
  } else if (name == "quadratic") {
    g = std::make_shared<QuadraticGenerator>(dim);
  } else if (name == "perturbed") {
    if (!j.contains("a")) throw ConfigError("perturbed generator: missing coupling 'a'");
    if (j["a"].is_number()) {
      g = std::make_shared<PerturbedGenerator>(dim, j["a"].get<double>());
    } else {
      Mat a(dim, dim);
      auto rows = j["a"];
      if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
        throw ConfigError("perturbed generator: 'a' must be a scalar or dim x dim matrix");
      for (int r = 0; r < dim; ++r) {
        Vec row = vec_from_json(rows[r]);
        if (row.size() != dim)
          throw ConfigError("perturbed generator: 'a' must be a scalar or dim x dim matrix");
        a.row(r) = row.transpose();
      }
      g = std::make_shared<PerturbedGenerator>(dim, a);
    }
  } else if (name == "expression") {
    if (!j.contains("expression"))
      throw ConfigError("expression generator: missing 'expression'");
    Expression e = Expression::parse(j["expression"].get<std::string>());
    ExprEnv params;
    if (j.contains("params"))
      for (auto& [k, v] : j["params"].items()) {
        if (v.is_number())
          params[k] = ExprValue(v.get<double>());
        else
          params[k] = ExprValue(vec_from_json(v));
      }
    g = std::make_shared<ExpressionGenerator>(dim, std::move(e), std::move(params));
  } else {
    throw ConfigError("generator: unknown name '" + name + "'");
  }

  if (j.contains("domain_x")) g->domain_x = box_from_json(j["domain_x"]);
  if (j.contains("domain_y")) g->domain_y = box_from_json(j["domain_y"]);
  if (g->domain_x.dim() != dim || g->domain_y.dim() != dim)
    throw ConfigError("generator: domain dimension mismatch");
  if (j.contains("heights")) {
    auto h = j["heights"];
    if (!h.is_array() || h.size() != 2) throw ConfigError("generator: heights must be [lo, hi]");
    g->heights = {h[0].get<double>(), h[1].get<double>()};
  }
  if (j.contains("z_range")) {
    auto zr = j["z_range"];
    if (!zr.is_array() || zr.size() != 2) throw ConfigError("generator: z_range must be [lo, hi]");
    g->z_range = {zr[0].get<double>(), zr[1].get<double>()};
  }
  g->h_fd = j.value("h_fd", 1e-4);
  g->claims_A3w = j.value("claims_A3w", g->claims_A3w);
  g->claims_A4w = j.value("claims_A4w", g->claims_A4w);
  return g;
}

ProblemConfig ProblemConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return from_json(j);
}

ProblemConfig ProblemConfig::from_json(const json& j) {
  ProblemConfig c;
  c.raw = j;
  c.seed = j.value("seed", 0ULL);
  c.threads = j.value("threads", 1);
  if (!j.contains("generator")) throw ConfigError("config: missing 'generator' section");
  c.generator = generator_from_json(j["generator"]);
  return c;
}

std::function<double(const Vec&)> ProblemConfig::density_function(const json& section,
                                                                  const std::string& key) const {
  if (!section.contains(key)) return [](const Vec&) { return 1.0; };
  const auto& d = section[key];
  if (d.is_number()) {
    double v = d.get<double>();
    if (!(v > 0)) throw ConfigError("density must be positive");
    return [v](const Vec&) { return v; };
  }
  Expression e = Expression::parse(d.get<std::string>());
  return [e](const Vec& y) {
    ExprEnv env;
    env["y"] = ExprValue(y);
    env["x"] = ExprValue(y);  // allow either variable name
    return e.eval(env);
  };
}

TargetDensity ProblemConfig::build_target() const {
  if (!raw.contains("target")) throw ConfigError("config: missing 'target' section");
  const json& t = raw["target"];
  auto f = density_function(t, "density");
  int grid = t.value("grid", 256);
  if (t.contains("polygon")) {
    std::vector<Vec> poly;
    for (const auto& v : t["polygon"]) poly.push_back(vec_from_json(v));
    return TargetDensity::make_polygon(std::move(poly), f, grid);
  }
  if (!t.contains("domain")) throw ConfigError("target: missing 'domain'");
  Box dom = box_from_json(t["domain"]);
  std::uint64_t mc_seed = t.value("mc_seed", 0xC0FFEEULL);
  int mc_samples = t.value("mc_samples", 1000000);
  return TargetDensity::make(dom, f, grid, mc_seed, mc_samples);
}

SemiDiscreteProblem ProblemConfig::build_problem(const TargetDensity& target) const {
  SemiDiscreteProblem p;
  p.gen = generator.get();
  p.target = target;
  if (!raw.contains("points") || !raw.contains("masses"))
    throw ConfigError("config: discrete problems need 'points' and 'masses'");
  for (const auto& v : raw["points"]) p.points.push_back(vec_from_json(v));
  for (const auto& m : raw["masses"]) p.masses.push_back(m.get<double>());
  if (p.points.size() != p.masses.size())
    throw ConfigError("config: points and masses must have equal length");
  if (!raw.contains("pin")) throw ConfigError("config: missing 'pin' section");
  p.pin_height = raw["pin"].value("u", 0.0);
  if (raw["pin"].contains("x")) {
    Vec px = vec_from_json(raw["pin"]["x"]);
    if (p.points.empty() || (p.points[0] - px).norm() > 1e-12)
      throw ConfigError("config: pin.x must equal points[0]");
  }
  if (raw.contains("solver")) {
    const json& s = raw["solver"];
    p.tol_mass = s.value("tol_mass", 1e-6);
    p.max_outer = s.value("max_outer", 10000);
    p.delta_start = s.value("delta_start", 1e-3);
    p.tie_tol = s.value("tie_tol", 1e-9);
  }
  // balance prescriptions against the quadrature total
  double sum = 0.0;
  for (double m : p.masses) sum += m;
  if (sum <= 0) throw ConfigError("config: masses must sum to a positive value");
  for (double& m : p.masses) m *= target.total / sum;
  return p;
}

}  // namespace gje
