#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "stablewalk/digest.hpp"
#include "stablewalk/errors.hpp"
#include "stablewalk/pipelines.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kConfig = 2;
constexpr int kIo = 3;
constexpr int kStatisticalAbort = 4;
}  // namespace exit_code

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir = "runs";
  bool force = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw stablewalk::IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw stablewalk::IoError("cannot write: " + path.string());
  out << bytes;
}

struct RunState {
  std::string command;
  std::string config_digest;
  std::string model_digest;
  std::uint64_t seed = 0;
  int workers = 0;
  fs::path run_dir;
  bool run_dir_known = false;
  std::vector<std::string> outputs;
};

void write_manifest(const RunState& state, const std::string& status,
                    const std::string& error, long long wall_ms) {
  if (!state.run_dir_known) return;
  std::error_code ec;
  fs::create_directories(state.run_dir, ec);
  json manifest = {{"command", state.command},
                   {"config_digest", state.config_digest},
                   {"model_digest", state.model_digest},
                   {"seed", state.seed},
                   {"workers", state.workers},
                   {"tool_version", stablewalk::kToolVersion},
                   {"wall_ms", wall_ms},
                   {"status", status},
                   {"outputs", state.outputs}};
  if (!error.empty()) manifest["error"] = error;
  std::ofstream out(state.run_dir / "manifest.json", std::ios::binary);
  if (out) out << manifest.dump(2) << "\n";
}

int run_command(const std::string& command, const CommonOpts& opts) {
  RunState state;
  state.command = command;
  auto started = std::chrono::steady_clock::now();
  auto wall_ms = [&]() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - started)
        .count();
  };

  try {
    const std::string config_bytes = read_file(opts.config_path);
    state.config_digest = stablewalk::sha256_hex(config_bytes);

    json config;
    try {
      config = json::parse(config_bytes);
    } catch (const json::exception& e) {
      throw stablewalk::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (config.contains("command") && config["command"].get<std::string>() != command)
      throw stablewalk::ConfigError("config command '" +
                                    config["command"].get<std::string>() +
                                    "' does not match subcommand '" + command + "'");

    if (opts.seed) {
      state.seed = *opts.seed;
    } else if (config.contains("seed")) {
      state.seed = config["seed"].get<std::uint64_t>();
    } else {
      throw stablewalk::ConfigError("no seed: set \"seed\" in the config or pass --seed");
    }

    if (opts.workers) {
      state.workers = *opts.workers;
    } else if (config.contains("workers")) {
      state.workers = config["workers"].get<int>();
    } else if (const char* env = std::getenv("STABLEWALK_WORKERS")) {
      state.workers = std::atoi(env);
    }

    state.run_dir = fs::path(opts.out_dir) /
                    (command + "-" + state.config_digest.substr(0, 12) + "-s" +
                     std::to_string(state.seed));
    state.run_dir_known = true;

    if (!opts.force && fs::exists(state.run_dir / "manifest.json")) {
      try {
        const json prev = json::parse(read_file((state.run_dir / "manifest.json").string()));
        if (prev.value("status", "") == "ok") {
          std::cout << state.run_dir.string() << " is up to date; use --force to re-run\n";
          return exit_code::kOk;
        }
      } catch (...) {
        // unreadable manifest: fall through and re-run
      }
    }

    json raw_model;
    stablewalk::ModelSpec spec;
    const bool needs_model = command != "stable-sample";
    if (needs_model) {
      if (!config.contains("model"))
        throw stablewalk::ConfigError("config needs a \"model\" (path or inline object)");
      if (config["model"].is_string()) {
        fs::path model_path = config["model"].get<std::string>();
        if (model_path.is_relative())
          model_path = fs::path(opts.config_path).parent_path() / model_path;
        const std::string model_bytes = read_file(model_path.string());
        state.model_digest = stablewalk::sha256_hex(model_bytes);
        try {
          raw_model = json::parse(model_bytes);
        } catch (const json::exception& e) {
          throw stablewalk::ConfigError(std::string("model file is not valid JSON: ") + e.what());
        }
      } else {
        raw_model = config["model"];
        state.model_digest = stablewalk::sha256_hex(raw_model.dump(2) + "\n");
      }
      if (command != "verify") spec = stablewalk::ModelSpec::from_json(raw_model);
    }

    auto section = [&](const char* key) -> json {
      return config.contains(key) ? config[key] : json::object();
    };

    stablewalk::RunArtifacts artifacts;
    bool checks_failed = false;
    if (command == "stable-sample") {
      artifacts = stablewalk::run_stable_sample(section("stable"), state.seed, state.workers);
    } else if (command == "survival") {
      artifacts = stablewalk::run_survival(spec, section("survival"), state.seed, state.workers);
    } else if (command == "harmonic") {
      artifacts = stablewalk::run_harmonic(spec, section("harmonic"), state.seed, state.workers);
    } else if (command == "meander") {
      artifacts = stablewalk::run_meander(spec, section("meander"), state.seed, state.workers);
    } else if (command == "verify") {
      const auto report =
          stablewalk::run_verify_checks(raw_model, section("verify"), state.seed, state.workers);
      for (const auto& check : report.checks) {
        std::cout << (check.pass ? "[pass] " : "[FAIL] ") << check.name
                  << "  tolerance=" << check.tolerance << "  observed=" << check.observed
                  << "\n";
      }
      artifacts.files.emplace_back("verify.json", report.to_json().dump(2) + "\n");
      checks_failed = !report.all_pass();
    } else {
      throw stablewalk::ConfigError("unknown command: " + command);
    }

    fs::create_directories(state.run_dir);
    for (const auto& [name, bytes] : artifacts.files) {
      write_file(state.run_dir / name, bytes);
      state.outputs.push_back(name);
    }
    write_manifest(state, checks_failed ? "checks failed" : "ok", "", wall_ms());
    std::cout << (checks_failed ? "[checks failed] " : "[ok] ") << "wrote "
              << state.outputs.size() << " file(s) to " << state.run_dir.string() << "\n";
    return checks_failed ? exit_code::kStatisticalAbort : exit_code::kOk;
  } catch (const stablewalk::ConfigError& e) {
    write_manifest(state, "config error", e.what(), wall_ms());
    std::cerr << "config error: " << e.what() << "\n";
    return exit_code::kConfig;
  } catch (const stablewalk::IoError& e) {
    write_manifest(state, "io error", e.what(), wall_ms());
    std::cerr << "io error: " << e.what() << "\n";
    return exit_code::kIo;
  } catch (const stablewalk::StatisticalAbort& e) {
    write_manifest(state, "statistical abort", e.what(), wall_ms());
    std::cerr << "statistical abort: " << e.what() << "\n";
    return exit_code::kStatisticalAbort;
  } catch (const std::exception& e) {
    write_manifest(state, "internal error", e.what(), wall_ms());
    std::cerr << "internal error: " << e.what() << "\n";
    return exit_code::kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stablewalk: Monte Carlo lab for heavy-tailed Markov walks"};
  app.require_subcommand(1);

  CommonOpts opts;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"stable-sample", "draw stable variates to CSV"},
      {"survival", "exit-time survival table and exponent fit"},
      {"harmonic", "harmonic function table, growth fit and harmonicity residuals"},
      {"meander", "conditioned walk endpoints vs discretized stable meander"},
      {"verify", "consolidated invariant checks for a model"},
  };
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts.config_path, "run config file (JSON)")->required();
    sub->add_option("--seed", opts.seed, "master seed (overrides config)");
    sub->add_option("--workers", opts.workers, "worker count (overrides config)");
    sub->add_option("--out", opts.out_dir, "output root directory");
    sub->add_flag("--force", opts.force, "re-run even if the run directory exists");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code::kConfig;
  }
  return run_command(app.get_subcommands().front()->get_name(), opts);
}
