#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolsim/simulation.hpp"

namespace toolsim::corpus {

using sim::Outcome;
using sim::ToolUseInstance;

struct FilterRules {
  int max_steps_kept = 5;
  bool require_relevant_call = true;
  bool drop_parse_errors = true;
};

// Fixed rule order; the first failing rule is the rejection reason.
inline constexpr const char* kRuleOutcome = "outcome";
inline constexpr const char* kRuleStepLimit = "step limit";
inline constexpr const char* kRuleRelevance = "no relevant call";
inline constexpr const char* kRuleParse = "parse error";

struct RejectionReport {
  std::map<std::string, std::size_t> counts;  // rule -> rejected instances
  // (tool, instruction digest, rule) per rejected instance
  std::vector<std::array<std::string, 3>> rejected;

  std::size_t total() const;
  json to_json() const;
};

// Function names per tool, for the relevance rule.
using ToolFunctions = std::map<std::string, std::set<std::string>>;

ToolFunctions tool_functions(const std::vector<registry::ToolSpec>& toolset);

// Keeps an instance iff it completed, is within the step budget, contains at
// least one relevant call (a listed function whose observation is not a
// validation or parse failure), and carries no terminal parse error (a
// parse_error record with no later successful call to a valid function).
std::vector<ToolUseInstance> filter_instances(const std::vector<ToolUseInstance>& raw,
                                              const FilterRules& rules,
                                              const ToolFunctions& functions,
                                              RejectionReport* report = nullptr);

struct ToolInfo {
  std::string category;
  std::size_t function_count = 0;
};

using ToolInfoMap = std::map<std::string, ToolInfo>;

ToolInfoMap tool_info(const std::vector<registry::ToolSpec>& toolset);

struct CorpusStats {
  std::size_t tool_category_count = 0;
  std::size_t tool_count = 0;
  std::size_t instance_count = 0;
  std::size_t single_call_count = 0;
  std::size_t multi_call_count = 0;
  double avg_functions_per_tool = 0.0;
  double avg_steps = 0.0;
  double avg_instruction_length = 0.0;  // whitespace-delimited words
  double avg_output_length = 0.0;
  std::map<std::size_t, std::size_t> instruction_length_histogram;  // 5-word buckets
  std::map<std::size_t, std::size_t> output_length_histogram;

  json to_json() const;
};

// Averages are rounded half away from zero to two decimals. Category and
// per-tool function counts come from the optional tool info map; without it
// those fields are zero. Throws on an empty corpus.
CorpusStats compute_stats(const std::vector<ToolUseInstance>& instances,
                          const ToolInfoMap& info = {});

// Markdown review bundle: each sampled instance rendered with its tool
// documentation and three yes/no review questions. Uniform sample without
// replacement; throws when n exceeds the corpus size.
std::string sample_for_review(const std::vector<ToolUseInstance>& instances, std::size_t n,
                              std::uint64_t seed,
                              const std::map<std::string, registry::ToolSpec>& tools);

// For each k: pick k distinct tools uniformly, then draw total_instances
// round-robin over the picked tools (random order within each tool). Every
// sub-corpus has exactly k distinct tools and exactly total_instances
// instances; infeasible requests throw.
std::vector<std::vector<ToolUseInstance>> subsample_by_toolcount(
    const std::vector<ToolUseInstance>& instances, const std::vector<std::size_t>& tool_counts,
    std::size_t total_instances, std::uint64_t seed);

struct Corpus {
  std::string config_digest;
  std::string manifest_digest;
  std::vector<ToolUseInstance> instances;

  bool operator==(const Corpus&) const = default;
};

struct LineDiagnostic {
  std::size_t line_number = 0;  // 1-based
  std::string message;
};

inline constexpr int kCorpusFormatVersion = 1;

// JSON Lines with a leading header line {format_version, kind, config_digest}.
void serialize(const Corpus& corpus, const std::string& path);

// Strict mode throws on the first malformed line; lenient mode reports it
// with its line number and keeps loading. Version mismatches always throw.
Corpus deserialize(const std::string& path, bool lenient = false,
                   std::vector<LineDiagnostic>* diagnostics = nullptr);

// Training hand-off: JSONL of {id, tool_name, prompt, target} where the
// target is the canonical ReAct transcript. Header line first, so an empty
// corpus exports a header-only file.
void export_training_view(const std::vector<ToolUseInstance>& instances,
                          const std::map<std::string, registry::ToolSpec>& tools,
                          const std::string& path, const std::string& manifest_digest = "");

// Prompt half of the training pair, also used by the judge.
std::string render_tool_context(const registry::ToolSpec& tool);

}  // namespace toolsim::corpus
