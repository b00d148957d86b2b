#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "toolsim/agents.hpp"

namespace toolsim::sim {

using agents::ActionRecord;
using agents::ExecutorResult;
using agents::Instruction;
using agents::InstructionStyle;

struct EpisodeConfig {
  int max_steps = 5;                 // assistant acts per episode
  int instructions_per_tool = 10;
  std::map<InstructionStyle, double> style_mix = {
      {InstructionStyle::command, 1.0 / 3.0},
      {InstructionStyle::question, 1.0 / 3.0},
      {InstructionStyle::other, 1.0 / 3.0},
  };
  std::uint64_t rng_seed = 0;
  int parallelism = 1;
  int ask_user_cap = 3;  // free user exchanges per episode
  agents::ExecutionMode execution_mode = agents::ExecutionMode::simulate;
  agents::LiveConfig live;

  void validate() const;  // throws on max_steps < 1 or proportions not summing to 1
};

json episode_config_to_json(const EpisodeConfig& config);
EpisodeConfig episode_config_from_json(const json& j);

// Digest of the semantic fields only; execution knobs such as parallelism do
// not change what gets generated and are excluded.
std::string episode_config_digest(const EpisodeConfig& config);

enum class Outcome { completed, step_limit, aborted };

std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& s);

// One ask_user exchange, kept apart from tool actions: it occurred before
// actions[position] and does not count as an interaction step.
struct UserExchange {
  std::size_t position = 0;
  std::string thought;
  std::string question;
  std::string reply;

  bool operator==(const UserExchange&) const = default;
};

struct Provenance {
  std::string backend_id;
  std::string config_digest;
  std::uint64_t episode_seed = 0;
  std::string started_at;
  // per-action [move_seq, observation_seq] from the episode's event counter
  std::vector<std::array<std::uint64_t, 2>> sequence;
  std::string abort_reason;

  bool operator==(const Provenance&) const = default;
};

// The generated triple plus artifact metadata. `actions` holds tool-directed
// records only (including erroneous ones); ask_user turns live in
// user_exchanges.
struct ToolUseInstance {
  std::string tool_name;
  Instruction instruction;
  std::vector<ActionRecord> actions;
  std::vector<UserExchange> user_exchanges;
  std::string final_thought;
  std::string final_response;
  Outcome outcome = Outcome::aborted;
  Provenance provenance;

  bool operator==(const ToolUseInstance&) const = default;
};

json instance_to_json(const ToolUseInstance& instance);
ToolUseInstance instance_from_json(const json& j);

// Canonical ReAct rendering of a stored instance: action cycles with
// observations, interleaved ask_user exchanges, and the closing
// Thought/Final Answer when the episode completed. Parse-error records
// render as their correction observation alone.
std::string render_instance_transcript(const ToolUseInstance& instance);

// Runs one episode to completion, step limit, or abort. Backend failures
// abort the episode and preserve the partial transcript; they do not throw.
// Executor warnings (e.g. a simulated result without a status tag) are
// appended to `warnings` when given.
ToolUseInstance run_episode(const registry::ToolSpec& tool, const Instruction& instruction,
                            const EpisodeConfig& config, llm::Backend& backend,
                            const PromptCatalog& prompts, const ClockFn& clock = fixed_clock(),
                            std::vector<std::string>* warnings = nullptr);

// Append-per-instance JSON Lines writer. The header line is written on open
// and every append is flushed, so a killed run loses at most the in-flight
// episode.
class CorpusWriter {
 public:
  CorpusWriter(const std::string& path, std::string config_digest,
               std::string manifest_digest = "");

  void append(const ToolUseInstance& instance);
  std::size_t written() const { return written_; }

 private:
  std::ofstream out_;
  std::size_t written_ = 0;
};

struct ToolRunReport {
  std::string tool_name;
  std::size_t drafted = 0;
  std::size_t shortfall = 0;
  std::size_t completed = 0;
  std::size_t step_limit = 0;
  std::size_t aborted = 0;
  std::string skipped_reason;  // non-empty when the whole tool was skipped
};

struct RunReport {
  std::vector<ToolRunReport> tools;
  std::vector<std::string> warnings;
  std::size_t total_instances = 0;

  json to_json() const;
};

// Per-style instruction counts for one tool: largest-remainder allocation of
// the style mix over instructions_per_tool, in fixed style order.
std::vector<std::pair<InstructionStyle, std::size_t>> allocate_style_counts(
    const EpisodeConfig& config);

// Drafts instructions and runs one episode per instruction for every tool.
// Tool failures are isolated: the tool is reported and skipped. Instances are
// appended to the writer in (tool, instruction) order as prefixes complete,
// so identical seeds and fixtures give bit-identical corpus files.
RunReport generate_raw_corpus(const std::vector<registry::ToolSpec>& toolset,
                              const EpisodeConfig& config, llm::Backend& backend,
                              const PromptCatalog& prompts, CorpusWriter& writer,
                              const ClockFn& clock = fixed_clock());

}  // namespace toolsim::sim
