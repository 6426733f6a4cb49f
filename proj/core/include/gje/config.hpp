#pragma once

// JSON problem configuration shared by the CLI subcommands. See
// docs/config.md for the schema and defaults.

#include <memory>
#include <nlohmann/json.hpp>

#include "gje/flow.hpp"
#include "gje/solver.hpp"

namespace gje {

struct ProblemConfig {
  nlohmann::json raw;
  std::uint64_t seed = 0;
  int threads = 1;
  std::shared_ptr<GeneratorSpec> generator;

  static ProblemConfig load(const std::string& path);
  static ProblemConfig from_json(const nlohmann::json& j);

  bool has(const std::string& section) const { return raw.contains(section); }

  // Builders for the optional sections; each throws ConfigError with a
  // field-specific message when its section is missing or malformed.
  TargetDensity build_target() const;
  SemiDiscreteProblem build_problem(const TargetDensity& target) const;
  std::function<double(const Vec&)> density_function(const nlohmann::json& section,
                                                     const std::string& key) const;
};

// Parse helpers shared with the CLI.
Vec vec_from_json(const nlohmann::json& j);
Box box_from_json(const nlohmann::json& j);
std::shared_ptr<GeneratorSpec> generator_from_json(const nlohmann::json& j);

}  // namespace gje
