#include "toolsim/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace toolsim::corpus {

std::size_t RejectionReport::total() const {
  std::size_t sum = 0;
  for (const auto& [rule, count] : counts) sum += count;
  return sum;
}

json RejectionReport::to_json() const {
  json rejected_json = json::array();
  for (const auto& entry : rejected) {
    rejected_json.push_back(
        {{"tool_name", entry[0]}, {"instruction_digest", entry[1]}, {"rule", entry[2]}});
  }
  return {{"counts", counts}, {"rejected", rejected_json}};
}

ToolFunctions tool_functions(const std::vector<registry::ToolSpec>& toolset) {
  ToolFunctions map;
  for (const auto& tool : toolset) {
    auto& names = map[tool.name];
    for (const auto& fn : tool.functions) names.insert(fn.function_name);
  }
  return map;
}

namespace {

bool is_call_failure(const agents::ErrorKind kind) {
  return kind == agents::ErrorKind::invalid_action ||
         kind == agents::ErrorKind::parameter_error || kind == agents::ErrorKind::parse_error;
}

bool is_relevant_call(const agents::ActionRecord& record, const std::set<std::string>& functions) {
  return functions.count(record.function_name) > 0 &&
         !is_call_failure(record.observation.error_kind);
}

// A parse error is terminal when no later record is a successful call to a
// listed function.
bool has_terminal_parse_error(const ToolUseInstance& instance,
                              const std::set<std::string>& functions) {
  for (std::size_t i = 0; i < instance.actions.size(); ++i) {
    if (instance.actions[i].observation.error_kind != agents::ErrorKind::parse_error) continue;
    bool corrected = false;
    for (std::size_t j = i + 1; j < instance.actions.size(); ++j) {
      const auto& later = instance.actions[j];
      if (functions.count(later.function_name) > 0 && later.observation.ok()) {
        corrected = true;
        break;
      }
    }
    if (!corrected) return true;
  }
  return false;
}

std::string first_failing_rule(const ToolUseInstance& instance, const FilterRules& rules,
                               const ToolFunctions& functions) {
  if (instance.outcome != Outcome::completed) return kRuleOutcome;
  if (instance.actions.size() > static_cast<std::size_t>(rules.max_steps_kept)) {
    return kRuleStepLimit;
  }

  auto it = functions.find(instance.tool_name);
  static const std::set<std::string> empty;
  const std::set<std::string>& names = it == functions.end() ? empty : it->second;

  if (rules.require_relevant_call) {
    bool relevant = false;
    for (const auto& record : instance.actions) {
      if (is_relevant_call(record, names)) {
        relevant = true;
        break;
      }
    }
    if (!relevant) return kRuleRelevance;
  }
  if (rules.drop_parse_errors && has_terminal_parse_error(instance, names)) {
    return kRuleParse;
  }
  return "";
}

}  // namespace

std::vector<ToolUseInstance> filter_instances(const std::vector<ToolUseInstance>& raw,
                                              const FilterRules& rules,
                                              const ToolFunctions& functions,
                                              RejectionReport* report) {
  if (rules.max_steps_kept < 1) throw std::invalid_argument("max_steps_kept must be >= 1");

  std::vector<ToolUseInstance> kept;
  RejectionReport local;
  for (const auto& instance : raw) {
    const std::string rule = first_failing_rule(instance, rules, functions);
    if (rule.empty()) {
      kept.push_back(instance);
    } else {
      local.counts[rule] += 1;
      local.rejected.push_back(
          {instance.tool_name, fnv1a_hex(normalize_for_digest(instance.instruction.text)), rule});
    }
  }
  if (report) *report = std::move(local);
  return kept;
}

ToolInfoMap tool_info(const std::vector<registry::ToolSpec>& toolset) {
  ToolInfoMap map;
  for (const auto& tool : toolset) {
    map[tool.name] = ToolInfo{tool.category, tool.functions.size()};
  }
  return map;
}

json CorpusStats::to_json() const {
  auto histogram_json = [](const std::map<std::size_t, std::size_t>& h) {
    json out = json::object();
    for (const auto& [bucket, count] : h) {
      out[std::to_string(bucket) + "-" + std::to_string(bucket + 4)] = count;
    }
    return out;
  };
  return {{"tool_category_count", tool_category_count},
          {"tool_count", tool_count},
          {"instance_count", instance_count},
          {"single_call_count", single_call_count},
          {"multi_call_count", multi_call_count},
          {"avg_functions_per_tool", avg_functions_per_tool},
          {"avg_steps", avg_steps},
          {"avg_instruction_length", avg_instruction_length},
          {"avg_output_length", avg_output_length},
          {"instruction_length_histogram", histogram_json(instruction_length_histogram)},
          {"output_length_histogram", histogram_json(output_length_histogram)}};
}

CorpusStats compute_stats(const std::vector<ToolUseInstance>& instances, const ToolInfoMap& info) {
  if (instances.empty()) throw std::runtime_error("cannot compute stats of an empty corpus");

  CorpusStats stats;
  stats.instance_count = instances.size();

  std::set<std::string> tools;
  std::set<std::string> categories;
  std::size_t total_steps = 0;
  std::size_t total_instruction_words = 0;
  std::size_t total_output_words = 0;

  for (const auto& instance : instances) {
    tools.insert(instance.tool_name);

    std::size_t calls = 0;
    for (const auto& record : instance.actions) {
      if (!record.function_name.empty()) ++calls;
    }
    if (calls == 1) ++stats.single_call_count;
    if (calls >= 2) ++stats.multi_call_count;
    total_steps += instance.actions.size();

    const std::size_t instruction_words = word_count(instance.instruction.text);
    const std::size_t output_words = word_count(instance.final_response);
    total_instruction_words += instruction_words;
    total_output_words += output_words;
    stats.instruction_length_histogram[(instruction_words / 5) * 5] += 1;
    stats.output_length_histogram[(output_words / 5) * 5] += 1;
  }

  stats.tool_count = tools.size();

  std::size_t total_functions = 0;
  std::size_t tools_with_info = 0;
  for (const auto& name : tools) {
    auto it = info.find(name);
    if (it == info.end()) continue;
    ++tools_with_info;
    total_functions += it->second.function_count;
    if (!it->second.category.empty()) categories.insert(it->second.category);
  }
  stats.tool_category_count = categories.size();

  const double n = static_cast<double>(stats.instance_count);
  stats.avg_steps = round2(static_cast<double>(total_steps) / n);
  stats.avg_instruction_length = round2(static_cast<double>(total_instruction_words) / n);
  stats.avg_output_length = round2(static_cast<double>(total_output_words) / n);
  if (tools_with_info > 0) {
    stats.avg_functions_per_tool =
        round2(static_cast<double>(total_functions) / static_cast<double>(tools_with_info));
  }
  return stats;
}

std::string sample_for_review(const std::vector<ToolUseInstance>& instances, std::size_t n,
                              std::uint64_t seed,
                              const std::map<std::string, registry::ToolSpec>& tools) {
  if (n > instances.size()) {
    throw std::runtime_error("review sample of " + std::to_string(n) + " exceeds corpus size " +
                             std::to_string(instances.size()));
  }

  std::vector<std::size_t> indices(instances.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(derive_seed(seed, "review-sample"));
  rng.shuffle(indices);
  indices.resize(n);

  std::ostringstream out;
  out << "# Review bundle (" << n << " instances)\n";
  std::size_t item = 0;
  for (const std::size_t index : indices) {
    const ToolUseInstance& instance = instances[index];
    ++item;
    out << "\n## Instance " << item << ": " << instance.tool_name << "\n\n";
    auto it = tools.find(instance.tool_name);
    if (it != tools.end()) {
      out << "### Tool documentation\n\n" << render_tool_context(it->second) << "\n\n";
    }
    out << "### Instruction\n\n" << instance.instruction.text << "\n\n";
    out << "### Transcript\n\n```\n" << sim::render_instance_transcript(instance) << "\n```\n\n";
    out << "### Review\n\n";
    out << "- [ ] yes / [ ] no — Is the instruction solvable with this tool?\n";
    out << "- [ ] yes / [ ] no — Are the tool executor's responses effective and plausible?\n";
    out << "- [ ] yes / [ ] no — Are the action sequence and the final response accurate?\n";
  }
  return out.str();
}

std::vector<std::vector<ToolUseInstance>> subsample_by_toolcount(
    const std::vector<ToolUseInstance>& instances, const std::vector<std::size_t>& tool_counts,
    std::size_t total_instances, std::uint64_t seed) {
  // group instance indices per tool, tools in first-seen order
  std::vector<std::string> tool_order;
  std::map<std::string, std::vector<std::size_t>> by_tool;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    auto [it, inserted] = by_tool.try_emplace(instances[i].tool_name);
    if (inserted) tool_order.push_back(instances[i].tool_name);
    it->second.push_back(i);
  }

  std::vector<std::vector<ToolUseInstance>> result;
  for (std::size_t request = 0; request < tool_counts.size(); ++request) {
    const std::size_t k = tool_counts[request];
    if (k == 0 || k > tool_order.size()) {
      throw std::runtime_error("requested " + std::to_string(k) + " tools, corpus has " +
                               std::to_string(tool_order.size()));
    }
    if (total_instances < k) {
      throw std::runtime_error("total of " + std::to_string(total_instances) +
                               " cannot cover " + std::to_string(k) + " distinct tools");
    }

    Rng rng(derive_seed(seed, "ablate", request));

    std::vector<std::string> picked = tool_order;
    rng.shuffle(picked);
    picked.resize(k);

    std::size_t available = 0;
    std::map<std::string, std::vector<std::size_t>> pools;
    for (const auto& name : picked) {
      std::vector<std::size_t> pool = by_tool.at(name);
      rng.shuffle(pool);
      available += pool.size();
      pools[name] = std::move(pool);
    }
    if (available < total_instances) {
      throw std::runtime_error("selected tools hold " + std::to_string(available) +
                               " instances, need " + std::to_string(total_instances));
    }

    // round-robin over the picked tools until the total is reached
    std::vector<std::size_t> chosen;
    while (chosen.size() < total_instances) {
      bool progressed = false;
      for (const auto& name : picked) {
        if (chosen.size() == total_instances) break;
        auto& pool = pools[name];
        if (pool.empty()) continue;
        chosen.push_back(pool.back());
        pool.pop_back();
        progressed = true;
      }
      if (!progressed) break;
    }

    std::sort(chosen.begin(), chosen.end());  // stable corpus order
    std::vector<ToolUseInstance> sub;
    sub.reserve(chosen.size());
    for (const std::size_t index : chosen) sub.push_back(instances[index]);
    result.push_back(std::move(sub));
  }
  return result;
}

void serialize(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  json header = {{"format_version", kCorpusFormatVersion},
                 {"kind", "tool_use_corpus"},
                 {"config_digest", corpus.config_digest}};
  if (!corpus.manifest_digest.empty()) header["manifest_digest"] = corpus.manifest_digest;
  out << header.dump() << "\n";
  for (const auto& instance : corpus.instances) {
    out << sim::instance_to_json(instance).dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Corpus deserialize(const std::string& path, bool lenient,
                   std::vector<LineDiagnostic>* diagnostics) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || trim(lines[0]).empty()) {
    throw std::runtime_error("corpus file " + path + " has no header line");
  }

  json header;
  try {
    header = json::parse(lines[0]);
  } catch (const json::exception& e) {
    throw std::runtime_error("corpus header is not valid JSON: " + std::string(e.what()));
  }
  const int version = header.value("format_version", -1);
  if (version != kCorpusFormatVersion) {
    throw std::runtime_error("corpus format version " + std::to_string(version) +
                             " does not match reader version " +
                             std::to_string(kCorpusFormatVersion));
  }

  Corpus corpus;
  corpus.config_digest = header.value("config_digest", "");
  corpus.manifest_digest = header.value("manifest_digest", "");

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      corpus.instances.push_back(sim::instance_from_json(json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (!lenient) {
        throw std::runtime_error("corpus line " + std::to_string(i + 1) + " is malformed: " +
                                 e.what());
      }
      if (diagnostics) diagnostics->push_back({i + 1, e.what()});
    }
  }
  return corpus;
}

std::string render_tool_context(const registry::ToolSpec& tool) {
  std::string out = "Tool name: " + tool.name + "\n";
  out += "Description: " + tool.description + "\n";
  out += "Functions:\n" + registry::render_function_docs(tool.functions);
  return out;
}

void export_training_view(const std::vector<ToolUseInstance>& instances,
                          const std::map<std::string, registry::ToolSpec>& tools,
                          const std::string& path, const std::string& manifest_digest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write training view: " + path);

  json header = {{"format_version", 1}, {"kind", "training_view"}};
  if (!manifest_digest.empty()) header["manifest_digest"] = manifest_digest;
  out << header.dump() << "\n";

  std::size_t id = 0;
  for (const auto& instance : instances) {
    std::string tool_context = "Tool name: " + instance.tool_name;
    auto it = tools.find(instance.tool_name);
    if (it != tools.end()) tool_context = render_tool_context(it->second);

    json item = {{"id", id++},
                 {"tool_name", instance.tool_name},
                 {"prompt", tool_context + "\n\nRequest: " + instance.instruction.text},
                 {"target", sim::render_instance_transcript(instance)}};
    out << item.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace toolsim::corpus
