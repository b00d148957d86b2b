#pragma once

#include <map>
#include <string>
#include <vector>

#include "toolsim/util.hpp"

namespace toolsim::cli {

// Distinct exit codes per failure class.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitRuntime = 4;

// Configuration problems found before any backend call.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Provenance trailer written beside every produced artifact. Output file
// headers carry digest() so each artifact is traceable to one manifest.
struct RunManifest {
  std::string command_line;
  std::map<std::string, std::string> config_digests;
  std::string toolset_digest;
  std::string backend_id;
  std::string started_at;
  std::vector<std::string> outputs;

  json core_json() const;
  std::string digest() const;  // over core_json
  void write(const std::string& path) const;
};

// Parses argv and runs one subcommand. Returns an exit code; never throws.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args);

// One-shot pipeline: toolset build -> corpus generate -> filter -> stats,
// stopping at the first failing stage.
int pipeline_run(const std::string& config_path, bool force, bool verbose);

}  // namespace toolsim::cli
