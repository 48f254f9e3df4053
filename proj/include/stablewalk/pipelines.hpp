#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stablewalk/model_io.hpp"

namespace stablewalk {

inline constexpr const char* kToolVersion = "0.1.0";

// Serialized run outputs: (filename, bytes). Timing never appears here, only
// in the CLI manifest, so outputs are byte-stable for a fixed config+seed.
struct RunArtifacts {
  std::vector<std::pair<std::string, std::string>> files;
  nlohmann::json summary;
};

struct VerifyCheck {
  std::string name;
  std::string tolerance;
  std::string observed;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass() const;
  nlohmann::json to_json() const;
};

RunArtifacts run_stable_sample(const nlohmann::json& section, std::uint64_t seed, int workers);
RunArtifacts run_survival(const ModelSpec& spec, const nlohmann::json& section,
                          std::uint64_t seed, int workers);
RunArtifacts run_harmonic(const ModelSpec& spec, const nlohmann::json& section,
                          std::uint64_t seed, int workers);
RunArtifacts run_meander(const ModelSpec& spec, const nlohmann::json& section,
                         std::uint64_t seed, int workers);

// Consolidated invariant checks over a raw model spec; validation failures
// become failed checks rather than exceptions.
VerifyReport run_verify_checks(const nlohmann::json& raw_model,
                               const nlohmann::json& section, std::uint64_t seed,
                               int workers);

}  // namespace stablewalk
