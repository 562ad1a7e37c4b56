#pragma once

// Run configuration shared by every command, stored as JSON:
//
//   {
//     "model":  {"family": "kimura4", "states": 0, "known_p": [..]},
//     "theta":  [0.027, 0.041, 0.123, 0.128],
//     "method": "ml" | "pl" | "plM" | "ql" | "qlK",
//     "fit":    {"n_starts": 5, "grad_tol": 1e-8, "step_tol": 1e-10,
//                "max_iter": 500, "start_points": [[..], ..]},
//     "seed": 1, "n": 500, "reps": 1000,
//     "allow_periodic": false,
//     "input": "", "output": ""
//   }
//
// Every key is optional on input except model.family.

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "chainlik/estimate.hpp"
#include "chainlik/likelihood.hpp"
#include "chainlik/model_zoo.hpp"

namespace chainlik::cli {

struct RunConfig {
  ModelSpec model{Family::GeneralTwoState, 0, std::nullopt};
  std::optional<Vector> theta;
  Method method = Method::ml();
  FitOptions fit;
  std::uint64_t seed = 1;
  std::size_t n = 500;
  std::size_t reps = 1000;
  bool allow_periodic = false;
  std::string input;
  std::string output;

  /// Builds the model (InvalidSpec becomes Config) and checks theta against
  /// its dimension and domain, the method and the fit options.
  void validate() const;

  bool operator==(const RunConfig& other) const;
};

nlohmann::json to_json(const RunConfig& config);
/// Throws Config on unknown keys, wrong types or invalid values.
RunConfig config_from_json(const nlohmann::json& json);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& config, const std::string& path);

/// "0.1,0.2,0.3" -> vector; throws Config.
Vector parse_vector(const std::string& text);

}  // namespace chainlik::cli
