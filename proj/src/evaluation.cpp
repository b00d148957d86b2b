#include "toolsim/evaluation.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace toolsim::eval {

GoldKey gold_key(const std::string& tool_name, const std::string& instruction) {
  return {tool_name, fnv1a_hex(normalize_for_digest(instruction))};
}

namespace {

json gold_record_to_json(const GoldRecord& record) {
  json actions = json::array();
  for (const auto& a : record.actions) {
    actions.push_back({{"function_name", a.function_name}, {"parameters", a.parameters}});
  }
  return {{"tool_name", record.tool_name},
          {"instruction", record.instruction},
          {"actions", actions},
          {"final_answer", record.final_answer}};
}

GoldRecord gold_record_from_json(const json& j) {
  GoldRecord record;
  record.tool_name = j.at("tool_name").get<std::string>();
  record.instruction = j.at("instruction").get<std::string>();
  if (j.contains("actions")) {
    for (const auto& a : j.at("actions")) {
      GoldAction action;
      action.function_name = a.at("function_name").get<std::string>();
      action.parameters = a.value("parameters", json::object());
      record.actions.push_back(std::move(action));
    }
  }
  record.final_answer = j.at("final_answer").get<std::string>();
  if (record.final_answer.empty()) {
    throw std::runtime_error("gold record for " + record.tool_name + " has no final answer");
  }
  return record;
}

}  // namespace

std::map<GoldKey, GoldRecord> load_gold(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed gold file " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("gold file " + path + " must be a JSON array");

  std::map<GoldKey, GoldRecord> records;
  for (const auto& entry : doc) {
    GoldRecord record = gold_record_from_json(entry);
    records[gold_key(record.tool_name, record.instruction)] = std::move(record);
  }
  return records;
}

void save_gold(const std::vector<GoldRecord>& records, const std::string& path) {
  json doc = json::array();
  for (const auto& record : records) doc.push_back(gold_record_to_json(record));
  write_file(path, doc.dump(2) + "\n");
}

json judge_outcome_to_json(const JudgeOutcome& outcome) {
  json j = {{"raw_text", outcome.raw_text}};
  if (outcome.verdict) {
    j["verdict"] = {{"procedure", outcome.verdict->procedure},
                    {"response", outcome.verdict->response},
                    {"overall", outcome.verdict->overall},
                    {"rationale", outcome.verdict->rationale},
                    {"corrected_inconsistent", outcome.verdict->corrected_inconsistent}};
  } else {
    j["verdict"] = nullptr;
  }
  return j;
}

JudgeOutcome judge_outcome_from_json(const json& j) {
  JudgeOutcome outcome;
  outcome.raw_text = j.value("raw_text", "");
  if (j.contains("verdict") && !j.at("verdict").is_null()) {
    const json& v = j.at("verdict");
    JudgeVerdict verdict;
    verdict.procedure = v.at("procedure").get<bool>();
    verdict.response = v.at("response").get<bool>();
    verdict.overall = v.at("overall").get<bool>();
    verdict.rationale = v.value("rationale", "");
    verdict.corrected_inconsistent = v.value("corrected_inconsistent", false);
    outcome.verdict = verdict;
  }
  return outcome;
}

std::string judge_prompt(const ToolUseInstance& predicted, const GoldRecord& gold,
                         const registry::ToolSpec& tool, const PromptCatalog& prompts) {
  std::string gold_text = "Final answer: " + gold.final_answer;
  if (!gold.actions.empty()) {
    std::string calls;
    for (const auto& action : gold.actions) {
      calls += "- " + action.function_name + " " + action.parameters.dump() + "\n";
    }
    gold_text = "Expected calls:\n" + calls + gold_text;
  }

  return prompts.render(
      "judge", {{"name", tool.name},
                {"description", tool.description},
                {"function_docs", registry::render_function_docs(tool.functions)},
                {"gold", gold_text},
                {"instruction", predicted.instruction.text},
                {"transcript", sim::render_instance_transcript(predicted)}});
}

namespace {

std::optional<bool> parse_yes_no(const std::string& value) {
  std::string v;
  for (char c : trim(value)) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      v += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      break;
    }
  }
  if (v == "yes" || v == "true") return true;
  if (v == "no" || v == "false") return false;
  return std::nullopt;
}

std::optional<std::string> labeled_value(const std::string& text, const std::string& label) {
  std::size_t pos = 0;
  while ((pos = text.find(label, pos)) != std::string::npos) {
    // line-anchored: label at the start of a line
    if (pos == 0 || text[pos - 1] == '\n') {
      const std::size_t value_start = pos + label.size();
      const std::size_t line_end = text.find('\n', value_start);
      return text.substr(value_start,
                         line_end == std::string::npos ? std::string::npos
                                                       : line_end - value_start);
    }
    pos += label.size();
  }
  return std::nullopt;
}

}  // namespace

std::optional<JudgeVerdict> parse_judge_output(const std::string& text) {
  const auto procedure_text = labeled_value(text, "Procedure:");
  const auto response_text = labeled_value(text, "Response:");
  const auto overall_text = labeled_value(text, "Overall:");
  if (!procedure_text || !response_text || !overall_text) return std::nullopt;

  const auto procedure = parse_yes_no(*procedure_text);
  const auto response = parse_yes_no(*response_text);
  const auto overall = parse_yes_no(*overall_text);
  if (!procedure || !response || !overall) return std::nullopt;

  JudgeVerdict verdict;
  verdict.procedure = *procedure;
  verdict.response = *response;
  const bool conjunction = verdict.procedure && verdict.response;
  verdict.corrected_inconsistent = (*overall != conjunction);
  verdict.overall = conjunction;

  std::size_t pos = text.find("Rationale:");
  if (pos != std::string::npos) {
    verdict.rationale = trim(text.substr(pos + std::string("Rationale:").size()));
  }
  return verdict;
}

JudgeOutcome judge_instance(const ToolUseInstance& predicted, const GoldRecord& gold,
                            const registry::ToolSpec& tool, llm::Backend& backend,
                            const PromptCatalog& prompts) {
  if (gold_key(predicted.tool_name, predicted.instruction.text) !=
      gold_key(gold.tool_name, gold.instruction)) {
    throw std::invalid_argument("judge_instance: predicted and gold refer to different instructions");
  }

  llm::CompletionRequest request;
  request.role = llm::Role::judge;
  request.sampling = llm::default_sampling(request.role);
  request.prompt = judge_prompt(predicted, gold, tool, prompts);

  JudgeOutcome outcome;
  outcome.raw_text = backend.complete(request);
  outcome.verdict = parse_judge_output(outcome.raw_text);
  if (outcome.verdict) return outcome;

  // one re-ask with an explicit format reminder
  request.prompt += "\nYour previous reply could not be parsed. Answer again, strictly in the "
                    "required four-line format.";
  outcome.raw_text = backend.complete(request);
  outcome.verdict = parse_judge_output(outcome.raw_text);
  return outcome;
}

json canonicalize_params(const json& value) {
  switch (value.type()) {
    case json::value_t::number_float: {
      const double d = value.get<double>();
      if (std::floor(d) == d && std::abs(d) < 9.0e15) {
        return json(static_cast<std::int64_t>(d));
      }
      return value;
    }
    case json::value_t::string:
      return json(trim(value.get<std::string>()));
    case json::value_t::array: {
      json out = json::array();
      for (const auto& item : value) out.push_back(canonicalize_params(item));
      return out;
    }
    case json::value_t::object: {
      json out = json::object();
      for (const auto& [key, item] : value.items()) out[key] = canonicalize_params(item);
      return out;
    }
    default:
      return value;
  }
}

StructuredCase score_structured(const ToolUseInstance& predicted, const GoldRecord& gold) {
  if (gold.actions.empty()) {
    throw std::invalid_argument("score_structured requires gold actions");
  }

  StructuredCase result;

  result.thought = true;
  for (const auto& record : predicted.actions) {
    if (trim(record.thought).empty()) {
      result.thought = false;
      break;
    }
  }

  result.action = predicted.actions.size() == gold.actions.size();
  if (result.action) {
    for (std::size_t i = 0; i < gold.actions.size(); ++i) {
      if (predicted.actions[i].function_name != gold.actions[i].function_name) {
        result.action = false;
        break;
      }
    }
  }

  result.args = result.action;
  if (result.args) {
    for (std::size_t i = 0; i < gold.actions.size(); ++i) {
      if (canonicalize_params(predicted.actions[i].input_parameters) !=
          canonicalize_params(gold.actions[i].parameters)) {
        result.args = false;
        break;
      }
    }
  }

  result.instance = result.thought && result.action && result.args;
  return result;
}

json StructuredScores::to_json() const {
  return {{"sr_thought", sr_thought},
          {"sr_action", sr_action},
          {"sr_args", sr_args},
          {"sr_total", sr_total}};
}

StructuredScores aggregate_structured(const std::vector<StructuredCase>& cases) {
  if (cases.empty()) throw std::runtime_error("no structured cases to aggregate");
  StructuredScores scores;
  for (const auto& c : cases) {
    scores.sr_thought += c.thought ? 1.0 : 0.0;
    scores.sr_action += c.action ? 1.0 : 0.0;
    scores.sr_args += c.args ? 1.0 : 0.0;
    scores.sr_total += c.instance ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(cases.size());
  scores.sr_thought /= n;
  scores.sr_action /= n;
  scores.sr_args /= n;
  scores.sr_total /= n;
  return scores;
}

namespace {

double pct(std::size_t hits, std::size_t total) {
  if (total == 0) return 0.0;
  return std::round(static_cast<double>(hits) * 1000.0 / static_cast<double>(total)) / 10.0;
}

}  // namespace

std::vector<MetricsRow> aggregate(const std::vector<JudgedCase>& cases) {
  if (cases.empty()) throw std::runtime_error("no judged cases to aggregate");

  std::vector<std::string> groups;
  std::map<std::string, std::vector<const JudgedCase*>> by_group;
  for (const auto& c : cases) {
    auto [it, inserted] = by_group.try_emplace(c.group);
    if (inserted) groups.push_back(c.group);
    it->second.push_back(&c);
  }

  std::vector<MetricsRow> rows;
  for (const auto& group : groups) {
    MetricsRow row;
    row.group = group;
    std::size_t procedure = 0, response = 0, overall = 0;
    for (const JudgedCase* c : by_group.at(group)) {
      if (c->outcome.unjudgeable()) {
        ++row.unjudgeable;
        continue;
      }
      ++row.judged;
      if (c->outcome.verdict->procedure) ++procedure;
      if (c->outcome.verdict->response) ++response;
      if (c->outcome.verdict->overall) ++overall;
    }
    row.procedure_pct = pct(procedure, row.judged);
    row.response_pct = pct(response, row.judged);
    row.overall_pct = pct(overall, row.judged);
    rows.push_back(std::move(row));
  }
  return rows;
}

json metrics_to_json(const std::vector<MetricsRow>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back({{"group", row.group},
                   {"procedure", row.procedure_pct},
                   {"response", row.response_pct},
                   {"overall", row.overall_pct},
                   {"judged", row.judged},
                   {"unjudgeable", row.unjudgeable}});
  }
  return out;
}

std::string metrics_to_table(const std::vector<MetricsRow>& rows) {
  std::size_t group_width = std::string("Group").size();
  for (const auto& row : rows) group_width = std::max(group_width, row.group.size());

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %9s  %8s  %7s  %6s  %11s\n",
                static_cast<int>(group_width), "Group", "Procedure", "Response", "Overall", "N",
                "Unjudgeable");
  out << line;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%-*s  %9.1f  %8.1f  %7.1f  %6zu  %11zu\n",
                  static_cast<int>(group_width), row.group.c_str(), row.procedure_pct,
                  row.response_pct, row.overall_pct, row.judged, row.unjudgeable);
    out << line;
  }
  return out.str();
}

}  // namespace toolsim::eval
