#include <doctest.h>

#include "test_helpers.hpp"

using namespace toolsim;
using namespace toolsim::test;
using namespace toolsim::sim;

namespace {

const PromptCatalog& prompts() {
  static const PromptCatalog catalog = PromptCatalog::builtin();
  return catalog;
}

// Replays a scripted list of assistant turns; the executor role always
// returns a 200 body.
FnBackend::Fn scripted_turns(std::shared_ptr<std::vector<std::string>> turns) {
  auto cursor = std::make_shared<std::size_t>(0);
  return [turns, cursor](const llm::CompletionRequest& request) -> std::string {
    if (request.role == llm::Role::executor_agent) {
      return "Status Code: 200\nResponse: {\"ok\": true}";
    }
    if (request.role == llm::Role::user_agent) {
      return "2024, please.";
    }
    REQUIRE(*cursor < turns->size());
    return (*turns)[(*cursor)++];
  };
}

Instruction japan_instruction() {
  return {"Can you tell me the list of holidays in Japan next year?",
          agents::InstructionStyle::question, "Holiday Hub"};
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("episode config validation") {
  EpisodeConfig config;
  CHECK_NOTHROW(config.validate());
  config.max_steps = 0;
  CHECK_THROWS(config.validate());
  config.max_steps = 5;
  config.style_mix = {{agents::InstructionStyle::question, 0.5}};
  CHECK_THROWS(config.validate());  // proportions must sum to 1
  config.style_mix = {{agents::InstructionStyle::question, 0.5},
                      {agents::InstructionStyle::command, 0.5}};
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("one act then finish completes the episode") {
  auto turns = std::make_shared<std::vector<std::string>>(std::vector<std::string>{
      "Thought: I need to get the list of holidays in Japan for 2024.\n"
      "Action: getHolidays\n"
      "Action Input: {\"country\": \"Japan\", \"year\": 2024}",
      "Thought: I have everything.\n"
      "Final Answer: The list of holidays in Japan for 2024 is in the observation.",
  });
  FnBackend backend(scripted_turns(turns));

  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());

  CHECK(instance.outcome == Outcome::completed);
  REQUIRE(instance.actions.size() == 1);
  CHECK(instance.actions[0].function_name == "getHolidays");
  CHECK(instance.actions[0].observation.status_code == 200);
  CHECK(instance.final_response.find("2024") != std::string::npos);
  CHECK(instance.final_thought == "I have everything.");

  // transcript causality: move precedes observation, sequences grow
  REQUIRE(instance.provenance.sequence.size() == 1);
  CHECK(instance.provenance.sequence[0][0] < instance.provenance.sequence[0][1]);
}

TEST_CASE("six consecutive acts hit the step limit at five records") {
  std::vector<std::string> many;
  for (int i = 0; i < 6; ++i) {
    many.push_back("Thought: step " + std::to_string(i) + "\n"
                   "Action: searchHolidays\n"
                   "Action Input: {\"query\": \"q" + std::to_string(i) + "\"}");
  }
  auto turns = std::make_shared<std::vector<std::string>>(many);
  FnBackend backend(scripted_turns(turns));

  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());

  CHECK(instance.outcome == Outcome::step_limit);
  CHECK(instance.actions.size() == 5);
  CHECK(instance.final_response.empty());

  // monotonically increasing per-episode sequence numbers
  std::uint64_t last = 0;
  for (const auto& pair : instance.provenance.sequence) {
    CHECK(pair[0] >= last);
    CHECK(pair[0] < pair[1]);
    last = pair[1];
  }
}

TEST_CASE("immediate finish completes with zero actions") {
  auto turns = std::make_shared<std::vector<std::string>>(std::vector<std::string>{
      "Thought: no tool needed.\nFinal Answer: Nothing to do.",
  });
  FnBackend backend(scripted_turns(turns));
  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());
  CHECK(instance.outcome == Outcome::completed);
  CHECK(instance.actions.empty());
}

TEST_CASE("parse failures are recorded as erroneous steps and the loop continues") {
  auto turns = std::make_shared<std::vector<std::string>>(std::vector<std::string>{
      "this is not react at all",
      "Thought: recovering now\n"
      "Action: getHolidays\n"
      "Action Input: {\"country\": \"Japan\", \"year\": 2024}",
      "Thought: done\nFinal Answer: recovered fine",
  });
  FnBackend backend(scripted_turns(turns));
  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());

  CHECK(instance.outcome == Outcome::completed);
  REQUIRE(instance.actions.size() == 2);
  CHECK(instance.actions[0].observation.error_kind == agents::ErrorKind::parse_error);
  CHECK(instance.actions[0].observation.status_code == 422);
  CHECK(instance.actions[0].function_name.empty());
  CHECK(instance.actions[1].observation.error_kind == agents::ErrorKind::none);
}

TEST_CASE("invalid calls are recorded with validation observations") {
  auto turns = std::make_shared<std::vector<std::string>>(std::vector<std::string>{
      "Thought: call something wrong\nAction: getWeather\nAction Input: {}",
      "Thought: done\nFinal Answer: gave up politely",
  });
  FnBackend backend(scripted_turns(turns));
  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());
  REQUIRE(instance.actions.size() == 1);
  CHECK(instance.actions[0].observation.status_code == 404);
  CHECK(instance.actions[0].observation.error_kind == agents::ErrorKind::invalid_action);
}

TEST_CASE("ask_user routes to the user agent and does not consume steps") {
  auto turns = std::make_shared<std::vector<std::string>>(std::vector<std::string>{
      "Thought: I need the year.\nAction: ask_user\nAction Input: {\"question\": \"Which year?\"}",
      "Thought: now I can call.\n"
      "Action: getHolidays\n"
      "Action Input: {\"country\": \"Japan\", \"year\": 2024}",
      "Thought: done\nFinal Answer: Holidays delivered.",
  });
  FnBackend backend(scripted_turns(turns));
  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());

  CHECK(instance.outcome == Outcome::completed);
  CHECK(instance.actions.size() == 1);  // the ask_user exchange is not an action
  REQUIRE(instance.user_exchanges.size() == 1);
  CHECK(instance.user_exchanges[0].question == "Which year?");
  CHECK(instance.user_exchanges[0].reply == "2024, please.");
  CHECK(instance.user_exchanges[0].position == 0);
}

TEST_CASE("ask_user without a question parameter is a recorded parameter error") {
  auto turns = std::make_shared<std::vector<std::string>>(std::vector<std::string>{
      "Thought: asking badly\nAction: ask_user\nAction Input: {}",
      "Thought: done\nFinal Answer: moved on",
  });
  FnBackend backend(scripted_turns(turns));
  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());

  CHECK(instance.outcome == Outcome::completed);
  CHECK(instance.user_exchanges.empty());
  REQUIRE(instance.actions.size() == 1);
  CHECK(instance.actions[0].function_name == "ask_user");
  CHECK(instance.actions[0].observation.status_code == 400);
  CHECK(instance.actions[0].observation.error_kind == agents::ErrorKind::parameter_error);
}

TEST_CASE("ask_user beyond the cap becomes an invalid action that consumes steps") {
  std::vector<std::string> asks;
  for (int i = 0; i < 9; ++i) {
    asks.push_back("Thought: asking again\nAction: ask_user\nAction Input: {\"question\": \"q" +
                   std::to_string(i) + "?\"}");
  }
  auto turns = std::make_shared<std::vector<std::string>>(asks);
  FnBackend backend(scripted_turns(turns));

  EpisodeConfig config;
  config.ask_user_cap = 3;
  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), config, backend, prompts());

  CHECK(instance.outcome == Outcome::step_limit);
  CHECK(instance.user_exchanges.size() == 3);
  CHECK(instance.actions.size() == 5);
  for (const auto& record : instance.actions) {
    CHECK(record.observation.error_kind == agents::ErrorKind::invalid_action);
    CHECK(record.observation.body.find("limit") != std::string::npos);
  }
}

TEST_CASE("backend failure mid-episode aborts and preserves the partial transcript") {
  auto calls = std::make_shared<int>(0);
  FnBackend backend([calls](const llm::CompletionRequest& request) -> std::string {
    if (request.role == llm::Role::executor_agent) {
      return "Status Code: 200\nResponse: {}";
    }
    if (++*calls == 1) {
      return "Thought: first\nAction: searchHolidays\nAction Input: {\"query\": \"x\"}";
    }
    throw llm::BackendError(llm::BackendErrorKind::provider_rejected, "credit exhausted");
  });

  const auto instance =
      run_episode(holiday_tool(), japan_instruction(), EpisodeConfig{}, backend, prompts());
  CHECK(instance.outcome == Outcome::aborted);
  CHECK(instance.actions.size() == 1);
  CHECK(instance.provenance.abort_reason.find("credit exhausted") != std::string::npos);
}

TEST_CASE("style allocation uses largest remainder in fixed order") {
  EpisodeConfig config;
  config.instructions_per_tool = 10;
  const auto counts = allocate_style_counts(config);
  REQUIRE(counts.size() == 3);
  CHECK(counts[0].first == agents::InstructionStyle::command);
  CHECK(counts[0].second + counts[1].second + counts[2].second == 10);
  CHECK(counts[0].second == 4);  // first tie-break winner
  CHECK(counts[1].second == 3);
  CHECK(counts[2].second == 3);

  config.style_mix = {{agents::InstructionStyle::question, 1.0}};
  config.instructions_per_tool = 7;
  const auto only_questions = allocate_style_counts(config);
  CHECK(only_questions[1].second == 7);
  CHECK(only_questions[0].second == 0);
}

TEST_CASE("instance json round-trips") {
  auto instance = make_instance("Holiday Hub", "a b c", {{"getHolidays", json({{"year", 1}})}});
  instance.user_exchanges.push_back({0, "th", "q?", "r"});
  instance.provenance.backend_id = "scripted:x";
  instance.provenance.sequence = {{0, 1}};
  const auto round = instance_from_json(instance_to_json(instance));
  CHECK(round == instance);
}

TEST_CASE("corpus generation drafts per style and streams deterministically") {
  // two tools, one command + one question each, all completing in one call
  auto oracle = [](const llm::CompletionRequest& request) -> std::string {
    if (request.role == llm::Role::user_agent) {
      const bool question = request.prompt.find("as a question") != std::string::npos;
      return question ? "1. What are the holidays of Japan in 2024?"
                      : "1. List the holidays of Japan in 2024.";
    }
    if (request.role == llm::Role::executor_agent) {
      return "Status Code: 200\nResponse: {\"ok\": true}";
    }
    // assistant: act once, then finish
    const bool acted = request.prompt.find("Observation:") !=
                       request.prompt.rfind("Observation:");  // scratchpad beyond the template
    if (!acted) {
      return "Thought: get them\nAction: getHolidays\n"
             "Action Input: {\"country\": \"Japan\", \"year\": 2024}";
    }
    return "Thought: done\nFinal Answer: Delivered the holidays.";
  };

  std::vector<registry::ToolSpec> toolset = {holiday_tool(), holiday_tool()};
  toolset[1].name = "Holiday Hub II";

  EpisodeConfig config;
  config.instructions_per_tool = 2;
  config.style_mix = {{agents::InstructionStyle::command, 0.5},
                      {agents::InstructionStyle::question, 0.5}};
  config.rng_seed = 3;

  const auto dir = temp_dir("gen");
  const std::string path_a = (dir / "a.jsonl").string();
  const std::string path_b = (dir / "b.jsonl").string();

  {
    FnBackend backend(oracle);
    CorpusWriter writer(path_a, "cfg");
    const RunReport report = generate_raw_corpus(toolset, config, backend, prompts(), writer);
    CHECK(report.total_instances == 4);
    CHECK(report.tools.size() == 2);
    CHECK(report.tools[0].completed == 2);
  }
  {
    FnBackend backend(oracle);
    CorpusWriter writer(path_b, "cfg");
    generate_raw_corpus(toolset, config, backend, prompts(), writer);
  }
  CHECK(read_file(path_a) == read_file(path_b));

  // the file is loadable after every append: kill resilience is per line
  const auto lines = read_lines(path_a);
  REQUIRE(lines.size() == 5);  // header + 4 instances
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK_NOTHROW(instance_from_json(json::parse(lines[i])));
  }
}

TEST_CASE("executor status-tag warnings reach the run report") {
  auto oracle = [](const llm::CompletionRequest& request) -> std::string {
    if (request.role == llm::Role::user_agent) return "1. What are the holidays of Japan?";
    if (request.role == llm::Role::executor_agent) {
      return "{\"no\": \"status tag here\"}";  // forces the assumed-200 warning
    }
    const bool acted = request.prompt.find("Observation:") !=
                       request.prompt.rfind("Observation:");
    if (!acted) {
      return "Thought: get them\nAction: searchHolidays\nAction Input: {\"query\": \"x\"}";
    }
    return "Thought: done\nFinal Answer: fine";
  };

  EpisodeConfig config;
  config.instructions_per_tool = 1;
  config.style_mix = {{agents::InstructionStyle::question, 1.0}};

  const auto dir = temp_dir("warnings");
  FnBackend backend(oracle);
  CorpusWriter writer((dir / "out.jsonl").string(), "cfg");
  const RunReport report =
      generate_raw_corpus({holiday_tool()}, config, backend, prompts(), writer);

  REQUIRE(report.warnings.size() == 1);
  CHECK(report.warnings[0].find("Holiday Hub") != std::string::npos);
  CHECK(report.warnings[0].find("assuming 200") != std::string::npos);
}

TEST_CASE("a tool whose drafting fails is skipped; others are unaffected") {
  auto oracle = [](const llm::CompletionRequest& request) -> std::string {
    if (request.role == llm::Role::user_agent) {
      if (request.prompt.find("Broken Tool") != std::string::npos) {
        return "\n";  // zero parseable instructions
      }
      return "1. What are the holidays of Japan in 2024?";
    }
    if (request.role == llm::Role::executor_agent) {
      return "Status Code: 200\nResponse: {}";
    }
    return "Thought: done\nFinal Answer: fine";
  };

  std::vector<registry::ToolSpec> toolset = {holiday_tool(), holiday_tool()};
  toolset[0].name = "Broken Tool";

  EpisodeConfig config;
  config.instructions_per_tool = 1;
  config.style_mix = {{agents::InstructionStyle::question, 1.0}};

  const auto dir = temp_dir("skip");
  FnBackend backend(oracle);
  CorpusWriter writer((dir / "out.jsonl").string(), "cfg");
  const RunReport report = generate_raw_corpus(toolset, config, backend, prompts(), writer);

  REQUIRE(report.tools.size() == 2);
  CHECK_FALSE(report.tools[0].skipped_reason.empty());
  CHECK(report.tools[1].skipped_reason.empty());
  CHECK(report.total_instances == 1);
}

TEST_CASE("parallel generation keeps the canonical output order") {
  auto oracle = [](const llm::CompletionRequest& request) -> std::string {
    if (request.role == llm::Role::user_agent) return "1. What is on the calendar?";
    if (request.role == llm::Role::executor_agent) return "Status Code: 200\nResponse: {}";
    return "Thought: done\nFinal Answer: ok";
  };

  std::vector<registry::ToolSpec> toolset;
  for (int i = 0; i < 6; ++i) {
    auto tool = holiday_tool();
    tool.name = "tool_" + std::to_string(i);
    toolset.push_back(std::move(tool));
  }

  EpisodeConfig config;
  config.instructions_per_tool = 1;
  config.style_mix = {{agents::InstructionStyle::question, 1.0}};

  const auto dir = temp_dir("parallel");
  const std::string sequential = (dir / "seq.jsonl").string();
  const std::string parallel = (dir / "par.jsonl").string();

  {
    FnBackend backend(oracle);
    CorpusWriter writer(sequential, "cfg");
    generate_raw_corpus(toolset, config, backend, prompts(), writer);
  }
  config.parallelism = 4;
  {
    FnBackend backend(oracle);
    CorpusWriter writer(parallel, "cfg");
    generate_raw_corpus(toolset, config, backend, prompts(), writer);
  }
  CHECK(read_file(sequential) == read_file(parallel));
}

TEST_CASE("transcript rendering interleaves exchanges and closes with the final answer") {
  auto instance = make_instance("Holiday Hub", "instr",
                                {{"getHolidays", json({{"country", "JP"}, {"year", 2024}})}},
                                "All done.");
  instance.user_exchanges.push_back({0, "need the year", "Which year?", "2024"});
  const std::string text = render_instance_transcript(instance);

  const auto ask_pos = text.find("Action: ask_user");
  const auto call_pos = text.find("Action: getHolidays");
  const auto final_pos = text.find("Final Answer: All done.");
  REQUIRE(ask_pos != std::string::npos);
  REQUIRE(call_pos != std::string::npos);
  REQUIRE(final_pos != std::string::npos);
  CHECK(ask_pos < call_pos);
  CHECK(call_pos < final_pos);
  CHECK(text.find("Observation: 2024") != std::string::npos);
}

}  // TEST_SUITE
