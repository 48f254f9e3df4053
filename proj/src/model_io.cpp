#include "stablewalk/model_io.hpp"

#include <fstream>
#include <sstream>

#include "stablewalk/errors.hpp"

namespace stablewalk {

namespace {

double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError(std::string("model: missing numeric field '") + key + "'");
  return j[key].get<double>();
}

}  // namespace

ChainModel ModelSpec::build() const {
  std::vector<ParetoIncrementLaw> laws;
  laws.reserve(states.size());
  for (const auto& s : states)
    laws.push_back({alpha, s.weight_pos, s.weight_neg, s.cutoff, s.center});
  return build_model(transition, std::move(laws), max_states);
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  j["schema"] = "stablewalk-model";
  j["version"] = 1;
  j["alpha"] = alpha;
  j["transition"] = transition;
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : states) {
    st.push_back({{"weight_pos", s.weight_pos},
                  {"weight_neg", s.weight_neg},
                  {"cutoff", s.cutoff},
                  {"center", s.center}});
  }
  j["states"] = st;
  if (max_states != kDefaultMaxStates) j["max_states"] = max_states;
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model: expected a JSON object");
  if (j.value("schema", std::string("stablewalk-model")) != "stablewalk-model")
    throw ConfigError("model: unexpected schema tag");
  if (j.value("version", 1) != 1) throw ConfigError("model: unsupported version");

  ModelSpec spec;
  spec.alpha = require_number(j, "alpha");
  if (!j.contains("transition") || !j["transition"].is_array())
    throw ConfigError("model: missing transition matrix");
  for (const auto& row : j["transition"]) {
    if (!row.is_array()) throw ConfigError("model: transition rows must be arrays");
    spec.transition.push_back(row.get<std::vector<double>>());
  }
  if (!j.contains("states") || !j["states"].is_array())
    throw ConfigError("model: missing states array");
  for (const auto& s : j["states"]) {
    ModelSpec::StateLaw law;
    law.weight_pos = require_number(s, "weight_pos");
    law.weight_neg = require_number(s, "weight_neg");
    law.cutoff = require_number(s, "cutoff");
    law.center = s.value("center", 0.0);
    spec.states.push_back(law);
  }
  spec.max_states = j.value("max_states", kDefaultMaxStates);
  return spec;
}

std::string model_spec_bytes(const ModelSpec& spec) { return spec.to_json().dump(2) + "\n"; }

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("model file " + path + " is not valid JSON: " + e.what());
  }
  return ModelSpec::from_json(j);
}

void save_model_spec(const ModelSpec& spec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out << model_spec_bytes(spec);
}

}  // namespace stablewalk
