#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "stablewalk/chain.hpp"

namespace stablewalk {

// Raw, uncentered model specification as stored on disk. Loading and saving
// round-trip exactly; centering happens in build().
struct ModelSpec {
  double alpha = 1.5;
  TransitionMatrix transition;
  struct StateLaw {
    double weight_pos = 0.0;
    double weight_neg = 0.0;
    double cutoff = 1.0;
    double center = 0.0;
  };
  std::vector<StateLaw> states;
  int max_states = kDefaultMaxStates;

  ChainModel build() const;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

ModelSpec load_model_spec(const std::string& path);
void save_model_spec(const ModelSpec& spec, const std::string& path);

// Canonical serialized form (sorted keys, two-space indent, trailing newline).
std::string model_spec_bytes(const ModelSpec& spec);

}  // namespace stablewalk
