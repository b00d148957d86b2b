#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toolsim/corpus.hpp"

namespace toolsim::eval {

using sim::ToolUseInstance;

struct GoldAction {
  std::string function_name;
  json parameters = json::object();

  bool operator==(const GoldAction&) const = default;
};

struct GoldRecord {
  std::string tool_name;
  std::string instruction;
  std::vector<GoldAction> actions;  // may be empty for no-tool cases
  std::string final_answer;

  bool operator==(const GoldRecord&) const = default;
};

// Gold file: JSON array of records, keyed by (tool_name, instruction digest).
using GoldKey = std::pair<std::string, std::string>;

GoldKey gold_key(const std::string& tool_name, const std::string& instruction);
std::map<GoldKey, GoldRecord> load_gold(const std::string& path);
void save_gold(const std::vector<GoldRecord>& records, const std::string& path);

struct JudgeVerdict {
  bool procedure = false;
  bool response = false;
  bool overall = false;  // always procedure && response after parsing
  std::string rationale;
  bool corrected_inconsistent = false;  // judge emitted an inconsistent triple
};

struct JudgeOutcome {
  std::optional<JudgeVerdict> verdict;  // nullopt: unjudgeable after the re-ask
  std::string raw_text;                 // last judge output

  bool unjudgeable() const { return !verdict.has_value(); }
};

json judge_outcome_to_json(const JudgeOutcome& outcome);
JudgeOutcome judge_outcome_from_json(const json& j);

// Renders the judge prompt for one predicted episode against its gold
// record. Exposed so scripted judge fixtures can be authored in tests.
std::string judge_prompt(const ToolUseInstance& predicted, const GoldRecord& gold,
                         const registry::ToolSpec& tool, const PromptCatalog& prompts);

// Parses the labeled three-line verdict plus rationale. Returns nullopt when
// any of the three booleans is missing.
std::optional<JudgeVerdict> parse_judge_output(const std::string& text);

// One judged episode: the verdict triple with the overall conjunction
// enforced. An unparseable judge output is re-asked once, then the episode is
// marked unjudgeable and excluded from aggregates.
JudgeOutcome judge_instance(const ToolUseInstance& predicted, const GoldRecord& gold,
                            const registry::ToolSpec& tool, llm::Backend& backend,
                            const PromptCatalog& prompts);

struct StructuredCase {
  bool thought = false;   // every act carries a non-empty thought
  bool action = false;    // function-name sequence equals gold, order-sensitive
  bool args = false;      // action && canonicalized parameter maps equal
  bool instance = false;  // all of the above
};

// Canonical form for argument comparison: object keys are unordered by
// construction, integral floats collapse to integers, string values are
// trimmed of surrounding whitespace.
json canonicalize_params(const json& value);

// Deterministic success components against the gold actions. Precondition:
// gold.actions is non-empty.
StructuredCase score_structured(const ToolUseInstance& predicted, const GoldRecord& gold);

struct StructuredScores {
  double sr_thought = 0.0;
  double sr_action = 0.0;
  double sr_args = 0.0;
  double sr_total = 0.0;

  json to_json() const;
};

StructuredScores aggregate_structured(const std::vector<StructuredCase>& cases);

struct JudgedCase {
  std::string group;
  JudgeOutcome outcome;
};

struct MetricsRow {
  std::string group;
  double procedure_pct = 0.0;  // x100, one decimal
  double response_pct = 0.0;
  double overall_pct = 0.0;
  std::size_t judged = 0;
  std::size_t unjudgeable = 0;
};

// Per-group percentages; unjudgeable cases are excluded from denominators
// and counted separately. Throws on empty input.
std::vector<MetricsRow> aggregate(const std::vector<JudgedCase>& cases);

json metrics_to_json(const std::vector<MetricsRow>& rows);
std::string metrics_to_table(const std::vector<MetricsRow>& rows);

}  // namespace toolsim::eval
