#include "toolsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <stdexcept>
#include <thread>

namespace toolsim::sim {

void EpisodeConfig::validate() const {
  if (max_steps < 1) throw std::runtime_error("max_steps must be >= 1");
  if (instructions_per_tool < 1) throw std::runtime_error("instructions_per_tool must be >= 1");
  if (parallelism < 1) throw std::runtime_error("parallelism must be >= 1");
  double sum = 0.0;
  for (const auto& [style, share] : style_mix) {
    if (share < 0.0) throw std::runtime_error("style proportions must be non-negative");
    sum += share;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::runtime_error("style proportions must sum to 1");
  }
}

json episode_config_to_json(const EpisodeConfig& config) {
  json mix = json::object();
  for (const auto& [style, share] : config.style_mix) {
    mix[agents::to_string(style)] = share;
  }
  json j = {{"max_steps", config.max_steps},
            {"instructions_per_tool", config.instructions_per_tool},
            {"style_mix", mix},
            {"rng_seed", config.rng_seed},
            {"parallelism", config.parallelism},
            {"ask_user_cap", config.ask_user_cap},
            {"execution_mode",
             config.execution_mode == agents::ExecutionMode::simulate ? "simulate" : "live"}};
  if (config.execution_mode == agents::ExecutionMode::live) {
    j["live"] = {{"allowed_base_urls", config.live.allowed_base_urls},
                 {"timeout_seconds", config.live.timeout_seconds}};
  }
  return j;
}

EpisodeConfig episode_config_from_json(const json& j) {
  EpisodeConfig config;
  if (j.contains("max_steps")) config.max_steps = j.at("max_steps").get<int>();
  if (j.contains("instructions_per_tool")) {
    config.instructions_per_tool = j.at("instructions_per_tool").get<int>();
  }
  if (j.contains("style_mix")) {
    config.style_mix.clear();
    for (const auto& [tag, share] : j.at("style_mix").items()) {
      config.style_mix[agents::instruction_style_from_string(tag)] = share.get<double>();
    }
  }
  if (j.contains("rng_seed")) config.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  if (j.contains("parallelism")) config.parallelism = j.at("parallelism").get<int>();
  if (j.contains("ask_user_cap")) config.ask_user_cap = j.at("ask_user_cap").get<int>();
  if (j.contains("execution_mode")) {
    const std::string mode = j.at("execution_mode").get<std::string>();
    if (mode == "simulate") {
      config.execution_mode = agents::ExecutionMode::simulate;
    } else if (mode == "live") {
      config.execution_mode = agents::ExecutionMode::live;
    } else {
      throw std::runtime_error("unknown execution mode: " + mode);
    }
  }
  if (j.contains("live")) {
    const json& live = j.at("live");
    if (live.contains("allowed_base_urls")) {
      config.live.allowed_base_urls =
          live.at("allowed_base_urls").get<std::vector<std::string>>();
    }
    if (live.contains("timeout_seconds")) {
      config.live.timeout_seconds = live.at("timeout_seconds").get<int>();
    }
  }
  config.validate();
  return config;
}

std::string episode_config_digest(const EpisodeConfig& config) {
  json j = episode_config_to_json(config);
  j.erase("parallelism");
  return json_digest(j);
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::completed: return "completed";
    case Outcome::step_limit: return "step_limit";
    case Outcome::aborted: return "aborted";
  }
  return "aborted";
}

Outcome outcome_from_string(const std::string& s) {
  if (s == "completed") return Outcome::completed;
  if (s == "step_limit") return Outcome::step_limit;
  if (s == "aborted") return Outcome::aborted;
  throw std::runtime_error("unknown outcome: " + s);
}

json instance_to_json(const ToolUseInstance& instance) {
  json actions = json::array();
  for (const auto& record : instance.actions) {
    actions.push_back(agents::action_record_to_json(record));
  }
  json exchanges = json::array();
  for (const auto& exchange : instance.user_exchanges) {
    exchanges.push_back({{"position", exchange.position},
                         {"thought", exchange.thought},
                         {"question", exchange.question},
                         {"reply", exchange.reply}});
  }
  json sequence = json::array();
  for (const auto& pair : instance.provenance.sequence) {
    sequence.push_back(json::array({pair[0], pair[1]}));
  }
  return {{"tool_name", instance.tool_name},
          {"instruction", agents::instruction_to_json(instance.instruction)},
          {"actions", actions},
          {"user_exchanges", exchanges},
          {"final_thought", instance.final_thought},
          {"final_response", instance.final_response},
          {"outcome", to_string(instance.outcome)},
          {"provenance",
           {{"backend_id", instance.provenance.backend_id},
            {"config_digest", instance.provenance.config_digest},
            {"episode_seed", instance.provenance.episode_seed},
            {"started_at", instance.provenance.started_at},
            {"sequence", sequence},
            {"abort_reason", instance.provenance.abort_reason}}}};
}

ToolUseInstance instance_from_json(const json& j) {
  ToolUseInstance instance;
  instance.tool_name = j.at("tool_name").get<std::string>();
  instance.instruction = agents::instruction_from_json(j.at("instruction"));
  for (const auto& record : j.at("actions")) {
    instance.actions.push_back(agents::action_record_from_json(record));
  }
  if (j.contains("user_exchanges")) {
    for (const auto& e : j.at("user_exchanges")) {
      UserExchange exchange;
      exchange.position = e.at("position").get<std::size_t>();
      exchange.thought = e.value("thought", "");
      exchange.question = e.at("question").get<std::string>();
      exchange.reply = e.at("reply").get<std::string>();
      instance.user_exchanges.push_back(std::move(exchange));
    }
  }
  instance.final_thought = j.value("final_thought", "");
  instance.final_response = j.at("final_response").get<std::string>();
  instance.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  const json& p = j.at("provenance");
  instance.provenance.backend_id = p.value("backend_id", "");
  instance.provenance.config_digest = p.value("config_digest", "");
  instance.provenance.episode_seed = p.value("episode_seed", std::uint64_t{0});
  instance.provenance.started_at = p.value("started_at", "");
  if (p.contains("sequence")) {
    for (const auto& pair : p.at("sequence")) {
      instance.provenance.sequence.push_back(
          {pair.at(0).get<std::uint64_t>(), pair.at(1).get<std::uint64_t>()});
    }
  }
  instance.provenance.abort_reason = p.value("abort_reason", "");
  return instance;
}

std::string render_instance_transcript(const ToolUseInstance& instance) {
  std::string out;
  auto exchanges_at = [&](std::size_t position) {
    for (const auto& exchange : instance.user_exchanges) {
      if (exchange.position == position) {
        agents::AssistantMove ask = agents::AssistantMove::act(
            exchange.thought, agents::kAskUserFunction, {{"question", exchange.question}});
        out += agents::render_react_block(ask);
        out += "\nObservation: " + exchange.reply + "\n";
      }
    }
  };

  for (std::size_t i = 0; i < instance.actions.size(); ++i) {
    exchanges_at(i);
    const ActionRecord& record = instance.actions[i];
    if (record.function_name.empty() &&
        record.observation.error_kind == agents::ErrorKind::parse_error) {
      // the malformed emission is not stored; only the correction is
      out += "Observation: " + agents::render_observation(record.observation) + "\n";
      continue;
    }
    agents::AssistantMove move = agents::AssistantMove::act(record.thought, record.function_name,
                                                            record.input_parameters);
    out += agents::render_react_block(move);
    out += "\nObservation: " + agents::render_observation(record.observation) + "\n";
  }
  exchanges_at(instance.actions.size());

  if (instance.outcome == Outcome::completed) {
    agents::AssistantMove finish =
        agents::AssistantMove::finish(instance.final_thought, instance.final_response);
    out += agents::render_react_block(finish);
    out += "\n";
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

ToolUseInstance run_episode(const registry::ToolSpec& tool, const Instruction& instruction,
                            const EpisodeConfig& config, llm::Backend& backend,
                            const PromptCatalog& prompts, const ClockFn& clock,
                            std::vector<std::string>* warnings) {
  config.validate();
  if (instruction.text.empty()) throw std::invalid_argument("instruction text is empty");

  ToolUseInstance instance;
  instance.tool_name = tool.name;
  instance.instruction = instruction;
  instance.provenance.backend_id = backend.id();
  instance.provenance.config_digest = episode_config_digest(config);
  instance.provenance.started_at = clock();

  agents::Transcript transcript;
  transcript.instruction = instruction;

  std::uint64_t seq = 0;
  int ask_user_count = 0;

  auto record_action = [&](std::string thought, std::string function, json params,
                           ExecutorResult observation, std::uint64_t move_seq) {
    ActionRecord record;
    record.thought = std::move(thought);
    record.function_name = std::move(function);
    record.input_parameters = std::move(params);
    record.observation = std::move(observation);
    instance.actions.push_back(std::move(record));
    instance.provenance.sequence.push_back({move_seq, seq++});
  };

  try {
    while (true) {
      if (instance.actions.size() >= static_cast<std::size_t>(config.max_steps)) {
        instance.outcome = Outcome::step_limit;
        break;
      }

      agents::MoveOutcome outcome = agents::assistant_next_move(transcript, tool, backend, prompts);
      const std::uint64_t move_seq = seq++;

      if (const auto* failure = std::get_if<agents::ReactParseFailure>(&outcome.result)) {
        ExecutorResult observation;
        observation.status_code = 422;
        observation.error_kind = agents::ErrorKind::parse_error;
        observation.body = "Could not parse the assistant output: " + failure->rule +
                           " (offset " + std::to_string(failure->offset) + ")";
        transcript.steps.push_back({outcome.raw_text, agents::render_observation(observation)});
        record_action("", "", json::object(), std::move(observation), move_seq);
        continue;
      }

      const agents::AssistantMove& move = std::get<agents::AssistantMove>(outcome.result);

      if (move.kind == agents::AssistantMove::Kind::finish) {
        instance.final_thought = move.thought;
        instance.final_response = move.final_response;
        instance.outcome = Outcome::completed;
        break;
      }

      if (agents::is_ask_user(move)) {
        std::string question;
        if (move.input_parameters.contains("question") &&
            move.input_parameters.at("question").is_string()) {
          question = move.input_parameters.at("question").get<std::string>();
        }
        if (question.empty()) {
          ExecutorResult observation{400, "ask_user requires a question parameter",
                                     agents::ErrorKind::parameter_error};
          transcript.steps.push_back({outcome.raw_text, agents::render_observation(observation)});
          record_action(move.thought, move.function_name, move.input_parameters,
                        std::move(observation), move_seq);
          continue;
        }
        if (ask_user_count >= config.ask_user_cap) {
          // beyond the cap, asking again is an invalid action and consumes a step
          ExecutorResult observation{400, "ask_user limit exceeded",
                                     agents::ErrorKind::invalid_action};
          transcript.steps.push_back({outcome.raw_text, agents::render_observation(observation)});
          record_action(move.thought, move.function_name, move.input_parameters,
                        std::move(observation), move_seq);
          continue;
        }
        ++ask_user_count;
        transcript.pending_user_question = question;
        const std::string reply = agents::user_provide_missing_info(transcript, backend, prompts);
        transcript.pending_user_question.reset();
        seq++;  // the reply is an observed event
        instance.user_exchanges.push_back(
            {instance.actions.size(), move.thought, question, reply});
        transcript.steps.push_back({outcome.raw_text, reply});
        continue;
      }

      ExecutorResult observation;
      if (auto invalid = agents::executor_validate(move, tool.schema)) {
        observation = *invalid;
      } else {
        observation = agents::executor_execute(move, tool.schema, config.execution_mode, backend,
                                               prompts, config.live, warnings);
      }
      transcript.steps.push_back({outcome.raw_text, agents::render_observation(observation)});
      record_action(move.thought, move.function_name, move.input_parameters,
                    std::move(observation), move_seq);
    }
  } catch (const llm::BackendError& e) {
    instance.outcome = Outcome::aborted;
    instance.provenance.abort_reason = e.what();
  }

  return instance;
}

CorpusWriter::CorpusWriter(const std::string& path, std::string config_digest,
                           std::string manifest_digest) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write corpus file: " + path);
  json header = {{"format_version", 1},
                 {"kind", "tool_use_corpus"},
                 {"config_digest", std::move(config_digest)}};
  if (!manifest_digest.empty()) header["manifest_digest"] = std::move(manifest_digest);
  out_ << header.dump() << "\n";
  out_.flush();
}

void CorpusWriter::append(const ToolUseInstance& instance) {
  out_ << instance_to_json(instance).dump() << "\n";
  out_.flush();
  if (!out_) throw std::runtime_error("corpus append failed");
  ++written_;
}

json RunReport::to_json() const {
  json tools_json = json::array();
  for (const auto& t : tools) {
    tools_json.push_back({{"tool_name", t.tool_name},
                          {"drafted", t.drafted},
                          {"shortfall", t.shortfall},
                          {"completed", t.completed},
                          {"step_limit", t.step_limit},
                          {"aborted", t.aborted},
                          {"skipped_reason", t.skipped_reason}});
  }
  return {{"tools", tools_json},
          {"warnings", warnings},
          {"total_instances", total_instances}};
}

std::vector<std::pair<InstructionStyle, std::size_t>> allocate_style_counts(
    const EpisodeConfig& config) {
  const std::vector<InstructionStyle> order = {InstructionStyle::command,
                                               InstructionStyle::question,
                                               InstructionStyle::other};
  const std::size_t total = static_cast<std::size_t>(config.instructions_per_tool);

  struct Slot {
    InstructionStyle style;
    std::size_t count;
    double remainder;
  };
  std::vector<Slot> slots;
  std::size_t assigned = 0;
  for (InstructionStyle style : order) {
    auto it = config.style_mix.find(style);
    const double share = it == config.style_mix.end() ? 0.0 : it->second;
    const double exact = share * static_cast<double>(total);
    const std::size_t floor_count = static_cast<std::size_t>(exact);
    slots.push_back({style, floor_count, exact - static_cast<double>(floor_count)});
    assigned += floor_count;
  }
  // largest remainder, ties resolved by fixed style order
  while (assigned < total) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < slots.size(); ++i) {
      if (slots[i].remainder > slots[best].remainder) best = i;
    }
    slots[best].count += 1;
    slots[best].remainder = -1.0;
    ++assigned;
  }

  std::vector<std::pair<InstructionStyle, std::size_t>> counts;
  for (const auto& slot : slots) counts.emplace_back(slot.style, slot.count);
  return counts;
}

namespace {

struct ToolJobResult {
  ToolRunReport report;
  std::vector<ToolUseInstance> instances;
  std::vector<std::string> warnings;
};

ToolJobResult run_tool_job(const registry::ToolSpec& tool, const EpisodeConfig& config,
                           llm::Backend& backend, const PromptCatalog& prompts,
                           const ClockFn& clock) {
  ToolJobResult result;
  result.report.tool_name = tool.name;

  std::vector<Instruction> instructions;
  for (const auto& [style, count] : allocate_style_counts(config)) {
    if (count == 0) continue;
    agents::DraftReport draft;
    const auto drafted =
        agents::user_draft_instructions(tool, style, count, backend, prompts, &draft);
    result.report.drafted += drafted.size();
    result.report.shortfall += draft.shortfall();
    instructions.insert(instructions.end(), drafted.begin(), drafted.end());
  }

  for (std::size_t index = 0; index < instructions.size(); ++index) {
    std::vector<std::string> episode_warnings;
    ToolUseInstance instance =
        run_episode(tool, instructions[index], config, backend, prompts, clock,
                    &episode_warnings);
    instance.provenance.episode_seed = derive_seed(config.rng_seed, tool.name, index);
    for (const auto& warning : episode_warnings) {
      result.warnings.push_back(tool.name + " #" + std::to_string(index) + ": " + warning);
    }
    switch (instance.outcome) {
      case Outcome::completed: ++result.report.completed; break;
      case Outcome::step_limit: ++result.report.step_limit; break;
      case Outcome::aborted: ++result.report.aborted; break;
    }
    result.instances.push_back(std::move(instance));
  }
  return result;
}

}  // namespace

RunReport generate_raw_corpus(const std::vector<registry::ToolSpec>& toolset,
                              const EpisodeConfig& config, llm::Backend& backend,
                              const PromptCatalog& prompts, CorpusWriter& writer,
                              const ClockFn& clock) {
  if (toolset.empty()) throw std::runtime_error("toolset is empty");
  config.validate();

  const std::size_t n = toolset.size();
  std::vector<std::optional<ToolJobResult>> results(n);

  std::mutex mutex;
  std::condition_variable flushed_cv;
  std::size_t next_tool = 0;   // next job index to hand out
  std::size_t next_flush = 0;  // next result index to append

  RunReport report;
  report.tools.resize(n);

  auto flush_ready = [&]() {
    // caller holds the mutex; appends every consecutive finished result
    while (next_flush < n && results[next_flush].has_value()) {
      ToolJobResult& done = *results[next_flush];
      for (const auto& instance : done.instances) {
        writer.append(instance);
        ++report.total_instances;
      }
      report.tools[next_flush] = done.report;
      report.warnings.insert(report.warnings.end(), done.warnings.begin(), done.warnings.end());
      done.instances.clear();
      ++next_flush;
    }
  };

  auto worker = [&] {
    while (true) {
      std::size_t index;
      {
        std::lock_guard lk(mutex);
        if (next_tool >= n) return;
        index = next_tool++;
      }
      ToolJobResult result;
      try {
        result = run_tool_job(toolset[index], config, backend, prompts, clock);
      } catch (const std::exception& e) {
        // isolation: this tool is skipped, others are unaffected
        result = ToolJobResult{};
        result.report.tool_name = toolset[index].name;
        result.report.skipped_reason = e.what();
      }
      {
        std::lock_guard lk(mutex);
        results[index] = std::move(result);
        flush_ready();
      }
      flushed_cv.notify_all();
    }
  };

  const std::size_t thread_count = std::min<std::size_t>(config.parallelism, n);
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  {
    std::lock_guard lk(mutex);
    flush_ready();
  }
  return report;
}

}  // namespace toolsim::sim
