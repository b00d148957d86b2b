// Acceptance suite: one criterion per function, one pass/fail line each.
// Exits nonzero when any criterion fails.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <thread>

#include <httplib.h>

#include "random_moves.hpp"
#include "test_helpers.hpp"
#include "toolsim/cli.hpp"
#include "toolsim/corpus.hpp"
#include "toolsim/evaluation.hpp"

namespace fs = std::filesystem;
using namespace toolsim;
using namespace toolsim::test;

namespace {

struct Check {
  std::vector<std::string> failures;

  void require(bool condition, const std::string& message) {
    if (!condition) failures.push_back(message);
  }

  template <typename A, typename B>
  void equal(const A& actual, const B& expected, const std::string& label) {
    if (!(actual == expected)) {
      std::ostringstream ss;
      ss << label << ": expected " << expected << ", got " << actual;
      failures.push_back(ss.str());
    }
  }
};

std::string source_path(const std::string& rel) {
  return std::string(TOOLSIM_SOURCE_DIR) + "/" + rel;
}

// ---------------------------------------------------------------------------
// 1. Offline end-to-end pipeline on the shipped fixture pack.

void criterion_pipeline(Check& check) {
  const auto dir = temp_dir("acceptance_pipeline");
  const std::string out_dir = (dir / "out").string();

  json config = json::parse(read_file(source_path("fixtures/pack/pipeline.json")));
  config["seeds"] = source_path("fixtures/pack/seeds.json");
  config["backend"] = "scripted:" + source_path("fixtures/pack/fixtures.json");
  config["out_dir"] = out_dir;
  const std::string config_path = (dir / "pipeline.json").string();
  write_file(config_path, config.dump(2));

  const std::string command = std::string(TOOLSIM_CLI_PATH) + " pipeline run --config " +
                              config_path + " > " + (dir / "stdout.txt").string() + " 2>&1";

  const auto start = std::chrono::steady_clock::now();
  const int exit_code = std::system(command.c_str());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  check.equal(exit_code, 0, "pipeline exit code");
  check.require(seconds < 10.0,
                "pipeline took " + std::to_string(seconds) + "s, budget is 10s");

  const corpus::Corpus raw = corpus::deserialize(out_dir + "/raw.jsonl");
  check.equal(raw.instances.size(), std::size_t{6}, "raw instance count");

  const corpus::Corpus kept = corpus::deserialize(out_dir + "/filtered.jsonl");
  check.equal(kept.instances.size(), std::size_t{5}, "filtered instance count");

  const json rejections = json::parse(read_file(out_dir + "/rejections.json"));
  check.require(rejections.at("counts").contains("step limit"),
                "the planted six-step episode must be rejected by rule \"step limit\"");
  check.equal(rejections.at("counts").at("step limit").get<int>(), 1, "step-limit rejections");
  check.equal(rejections.at("counts").size(), std::size_t{1}, "rejection rule count");

  // the pack's shape: 3 tools x 2 instructions, with the planted episodes
  std::map<std::string, int> per_tool;
  bool found_six = false, found_exchange = false, found_recovered_parse = false;
  for (const auto& instance : raw.instances) {
    per_tool[instance.tool_name] += 1;
    if (instance.actions.size() == 6) {
      found_six = true;
      check.equal(to_string(instance.outcome), std::string("completed"),
                  "six-step episode outcome");
    }
    if (!instance.user_exchanges.empty()) found_exchange = true;
    for (std::size_t i = 0; i < instance.actions.size(); ++i) {
      if (instance.actions[i].observation.error_kind != agents::ErrorKind::parse_error) continue;
      for (std::size_t j = i + 1; j < instance.actions.size(); ++j) {
        if (instance.actions[j].observation.ok()) found_recovered_parse = true;
      }
    }
  }
  check.equal(per_tool.size(), std::size_t{3}, "distinct tools in the raw corpus");
  for (const auto& [tool, count] : per_tool) {
    check.equal(count, 2, "instances for " + tool);
  }
  check.require(found_six, "a six-step episode must exist in the raw corpus");
  check.require(found_exchange, "the pack's ask_user exchange must survive generation");
  check.require(found_recovered_parse, "the pack's recovered parse error must survive generation");

  // scripted runs never touch the network: the backend id proves the route
  const json manifest = json::parse(read_file(out_dir + "/manifest.json"));
  check.require(manifest.at("backend_id").get<std::string>().rfind("scripted:", 0) == 0,
                "backend must be the scripted one (zero network access)");
}

// ---------------------------------------------------------------------------
// 2. Stats oracle on the hand-built four-instance corpus.

void criterion_stats(Check& check) {
  auto words = [](std::size_t n) {
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += ' ';
      text += "w" + std::to_string(i);
    }
    return text;
  };

  const std::vector<sim::ToolUseInstance> corpus = {
      make_instance("tool_a", words(10), {{"f", json::object()}}),
      make_instance("tool_a", words(20), {{"f", json::object()}}),
      make_instance("tool_b", words(30), {{"f", json::object()}, {"g", json::object()}}),
      make_instance("tool_b", words(40), {{"f", json::object()}, {"g", json::object()}}),
  };

  const corpus::CorpusStats stats = corpus::compute_stats(corpus);
  check.equal(stats.single_call_count, std::size_t{2}, "single_call_count");
  check.equal(stats.multi_call_count, std::size_t{2}, "multi_call_count");
  check.equal(stats.avg_instruction_length, 25.0, "avg_instruction_length");
  check.equal(stats.avg_steps, 1.5, "avg_steps");
  check.equal(stats.instance_count, std::size_t{4}, "instance_count");
}

// ---------------------------------------------------------------------------
// 3. Parser properties: 1000 round-trips, 1000 structured failures.

void criterion_parser(Check& check) {
  Rng rng(424242);

  for (int i = 0; i < 1000; ++i) {
    const agents::AssistantMove move = random_assistant_move(rng);
    const std::string text = agents::render_react_block(move);
    const auto result = agents::parse_react_block(text);
    const auto* parsed = std::get_if<agents::AssistantMove>(&result);
    if (!parsed || !(*parsed == move)) {
      check.failures.push_back("round-trip failed for: " + text);
      return;
    }
  }

  const std::vector<const char*> markers = {"Thought:", "Action:", "Action Input:",
                                            "Final Answer:"};
  for (int i = 0; i < 1000; ++i) {
    const agents::AssistantMove move = random_assistant_move(rng);
    const std::string text = agents::render_react_block(move);

    // locate marker lines
    std::vector<std::string> lines;
    std::string line;
    for (char c : text + "\n") {
      if (c == '\n') {
        lines.push_back(line);
        line.clear();
      } else {
        line += c;
      }
    }
    std::vector<std::size_t> marker_lines;
    for (std::size_t j = 0; j < lines.size(); ++j) {
      for (const char* marker : markers) {
        if (lines[j].rfind(marker, 0) == 0) {
          marker_lines.push_back(j);
          break;
        }
      }
    }

    const std::size_t mode = rng.below(3);
    if (mode == 0) {
      // delete one marker line
      lines.erase(lines.begin() +
                  static_cast<std::ptrdiff_t>(marker_lines[rng.below(marker_lines.size())]));
    } else if (mode == 1 && marker_lines.size() >= 2) {
      // reorder two distinct marker lines
      const std::size_t a = rng.below(marker_lines.size());
      std::size_t b = rng.below(marker_lines.size());
      while (b == a) b = rng.below(marker_lines.size());
      std::swap(lines[marker_lines[a]], lines[marker_lines[b]]);
    } else {
      // strip the marker prefix, leaving the bare value
      const std::size_t target = marker_lines[rng.below(marker_lines.size())];
      for (const char* marker : markers) {
        if (lines[target].rfind(marker, 0) == 0) {
          lines[target] = lines[target].substr(std::string(marker).size());
          if (!lines[target].empty() && lines[target].front() == ' ') {
            lines[target].erase(lines[target].begin());
          }
          break;
        }
      }
    }

    std::string mutated;
    for (std::size_t j = 0; j < lines.size(); ++j) {
      if (j) mutated += '\n';
      mutated += lines[j];
    }

    try {
      const auto result = agents::parse_react_block(mutated);
      if (!std::holds_alternative<agents::ReactParseFailure>(result)) {
        check.failures.push_back("mutated text unexpectedly parsed:\n" + mutated +
                                 "\n(original:\n" + text + ")");
        return;
      }
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("parser threw on mutated text: ") + e.what());
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// 4. Validation oracle: exhaustive perturbation over the fixture schemas.

void criterion_validation(Check& check) {
  // the fixture pack's toolset, rebuilt offline through the scripted backend
  auto backend =
      llm::ScriptedBackend::from_file(source_path("fixtures/pack/fixtures.json"));
  registry::CatalogReport catalog_report;
  const auto seeds =
      registry::load_seed_catalog(source_path("fixtures/pack/seeds.json"), &catalog_report);
  const auto toolset = registry::build_toolset(seeds, *backend, PromptCatalog::builtin(),
                                               registry::BuildOptions{});
  check.equal(toolset.size(), std::size_t{3}, "fixture toolset size");

  auto value_for = [](const std::string& type) -> json {
    if (type == "string") return "x";
    if (type == "integer") return 7;
    if (type == "number") return 1.5;
    if (type == "boolean") return true;
    if (type == "array") return json::array({1});
    return json({{"k", 1}});
  };
  auto mistyped_for = [](const std::string& type) -> json {
    if (type == "string") return 123;
    if (type == "integer") return "x";
    if (type == "number") return "x";
    if (type == "boolean") return "x";
    if (type == "array") return json({{"k", 1}});
    return json::array({1});
  };

  std::size_t accepted = 0, perturbed = 0, rejected = 0;
  for (const auto& tool : toolset) {
    for (const auto& op : tool.schema.operations) {
      if (op.parameters.size() > 3) continue;

      json params = json::object();
      for (const auto& p : op.parameters) params[p.name] = value_for(p.type);
      const auto valid = agents::AssistantMove::act("t", op.operation_id, params);
      if (!agents::executor_validate(valid, tool.schema).has_value()) {
        ++accepted;
      } else {
        check.failures.push_back("unperturbed call rejected for " + op.operation_id);
      }

      auto expect_rejected = [&](const agents::AssistantMove& move, const std::string& label) {
        ++perturbed;
        if (agents::executor_validate(move, tool.schema).has_value()) {
          ++rejected;
        } else {
          check.failures.push_back("perturbation accepted: " + label + " on " +
                                   op.operation_id);
        }
      };

      for (const auto& p : op.parameters) {
        if (p.required) {
          auto dropped = valid;
          dropped.input_parameters.erase(p.name);
          expect_rejected(dropped, "drop " + p.name);
        }
        auto mistyped = valid;
        mistyped.input_parameters[p.name] = mistyped_for(p.type);
        expect_rejected(mistyped, "mistype " + p.name);
      }
      auto extra = valid;
      extra.input_parameters["__unknown__"] = 1;
      expect_rejected(extra, "unknown parameter");
    }
  }

  check.equal(rejected, perturbed, "all perturbed calls rejected");
  check.require(accepted == 8, "all 8 fixture operations accept their unperturbed call");
}

// ---------------------------------------------------------------------------
// 5. Ablation sampler exactness at k in {2, 5} over a 10-tool corpus.

void criterion_ablation(Check& check) {
  std::vector<sim::ToolUseInstance> corpus;
  for (int t = 0; t < 10; ++t) {
    for (int i = 0; i < 6 + t; ++i) {
      corpus.push_back(make_instance("tool_" + std::to_string(t),
                                     "instruction " + std::to_string(i) + " of " +
                                         std::to_string(t),
                                     {{"f", json::object()}}));
    }
  }

  const std::size_t total = 12;
  const auto subs = corpus::subsample_by_toolcount(corpus, {2, 5}, total, 31);
  check.equal(subs.size(), std::size_t{2}, "sub-corpus count");

  const std::vector<std::size_t> expected_k = {2, 5};
  for (std::size_t i = 0; i < subs.size(); ++i) {
    check.equal(subs[i].size(), total, "instances at k=" + std::to_string(expected_k[i]));
    std::set<std::string> tools;
    for (const auto& instance : subs[i]) tools.insert(instance.tool_name);
    check.equal(tools.size(), expected_k[i],
                "distinct tools at k=" + std::to_string(expected_k[i]));
  }
}

// ---------------------------------------------------------------------------
// 6. Structured scoring truth table plus the dominance invariant.

void criterion_structured(Check& check) {
  eval::GoldRecord gold;
  gold.tool_name = "Holiday Hub";
  gold.instruction = "What are the holidays in Japan in 2024?";
  gold.actions = {{"getHolidays", json({{"country", "Japan"}, {"year", 2024}})}};
  gold.final_answer = "Listed.";

  auto base = [&] {
    return make_instance(gold.tool_name, gold.instruction,
                         {{"getHolidays", json({{"country", "Japan"}, {"year", 2024}})}},
                         "Listed.");
  };

  struct Case {
    std::string label;
    sim::ToolUseInstance pred;
    bool thought, action, args, instance;
  };
  std::vector<Case> cases;

  cases.push_back({"exact match", base(), true, true, true, true});

  auto wrong_function = base();
  wrong_function.actions[0].function_name = "searchHolidays";
  cases.push_back({"wrong function", wrong_function, true, false, false, false});

  auto wrong_value = base();
  wrong_value.actions[0].input_parameters["year"] = 2025;
  cases.push_back({"wrong arg value", wrong_value, true, true, false, false});

  auto reordered = base();
  reordered.actions[0].input_parameters = json::parse(R"({"year": 2024, "country": "Japan"})");
  cases.push_back({"key reorder", reordered, true, true, true, true});

  auto float_year = base();
  float_year.actions[0].input_parameters["year"] = 2024.0;
  cases.push_back({"2 vs 2.0", float_year, true, true, true, true});

  auto padded = base();
  padded.actions[0].input_parameters["country"] = " Japan ";
  cases.push_back({"string padding", padded, true, true, true, true});

  auto no_thought = base();
  no_thought.actions[0].thought = "";
  cases.push_back({"empty thought", no_thought, false, true, true, false});

  auto extra_call = base();
  extra_call.actions.push_back(extra_call.actions[0]);
  cases.push_back({"redundant extra call", extra_call, true, false, false, false});

  auto missing_call = base();
  missing_call.actions.clear();
  cases.push_back({"missing call", missing_call, true, false, false, false});

  auto wrong_type = base();
  wrong_type.actions[0].input_parameters["year"] = "2024";
  cases.push_back({"stringified number", wrong_type, true, true, false, false});

  check.equal(cases.size(), std::size_t{10}, "case count");

  std::vector<eval::StructuredCase> scored;
  for (const auto& c : cases) {
    const auto s = eval::score_structured(c.pred, gold);
    scored.push_back(s);
    check.require(s.thought == c.thought, c.label + ": thought");
    check.require(s.action == c.action, c.label + ": action");
    check.require(s.args == c.args, c.label + ": args");
    check.require(s.instance == c.instance, c.label + ": instance");
  }

  const eval::StructuredScores scores = eval::aggregate_structured(scored);
  check.require(scores.sr_total <= scores.sr_action, "sr_total <= sr_action");
  check.require(scores.sr_total <= scores.sr_args, "sr_total <= sr_args");
}

// ---------------------------------------------------------------------------
// 7. Judge harness: conjunction enforcement and the Table-3-shaped report.

void criterion_judge(Check& check) {
  const auto tool = holiday_tool();
  const PromptCatalog prompts = PromptCatalog::builtin();

  struct Scripted {
    std::string instruction;
    std::string verdict_text;
  };
  const std::vector<Scripted> scripted = {
      {"instruction one", "Procedure: yes\nResponse: yes\nOverall: yes\nRationale: clean."},
      {"instruction two", "Procedure: no\nResponse: yes\nOverall: no\nRationale: redundant."},
      // inconsistent triple: must be corrected to overall = yes and flagged
      {"instruction three", "Procedure: yes\nResponse: yes\nOverall: no\nRationale: odd."},
      {"instruction four", "beep boop, not a verdict"},
  };

  llm::FixtureMap fixtures;
  std::vector<std::pair<sim::ToolUseInstance, eval::GoldRecord>> episodes;
  for (const auto& s : scripted) {
    eval::GoldRecord gold;
    gold.tool_name = tool.name;
    gold.instruction = s.instruction;
    gold.actions = {{"getHolidays", json({{"country", "Japan"}, {"year", 2024}})}};
    gold.final_answer = "Listed.";
    const auto pred = make_instance(tool.name, s.instruction,
                                    {{"getHolidays", json({{"country", "Japan"},
                                                           {"year", 2024}})}},
                                    "Listed.");
    const std::string prompt = eval::judge_prompt(pred, gold, tool, prompts);
    add_fixture(fixtures, llm::Role::judge, prompt, s.verdict_text);
    // the re-ask prompt for the garbage case also returns garbage
    add_fixture(fixtures, llm::Role::judge,
                prompt + "\nYour previous reply could not be parsed. Answer again, strictly in "
                         "the required four-line format.",
                s.verdict_text);
    episodes.emplace_back(pred, gold);
  }

  llm::ScriptedBackend backend(fixtures);
  std::vector<eval::JudgedCase> judged;
  std::vector<eval::JudgeOutcome> outcomes;
  for (const auto& [pred, gold] : episodes) {
    const auto outcome = eval::judge_instance(pred, gold, tool, backend, prompts);
    outcomes.push_back(outcome);
    judged.push_back({"simulated", outcome});
  }

  check.require(!outcomes[0].unjudgeable() && outcomes[0].verdict->overall,
                "clean verdict parses all-true");
  check.require(!outcomes[1].unjudgeable() && !outcomes[1].verdict->overall,
                "procedure failure drives overall false");
  check.require(!outcomes[2].unjudgeable(), "inconsistent verdict still parses");
  check.require(outcomes[2].verdict->overall, "inconsistent overall corrected to conjunction");
  check.require(outcomes[2].verdict->corrected_inconsistent, "correction is flagged");
  check.require(outcomes[3].unjudgeable(), "garbage output is unjudgeable after the re-ask");

  const auto rows = eval::aggregate(judged);
  check.equal(rows.size(), std::size_t{1}, "one report group");
  check.equal(rows[0].judged, std::size_t{3}, "judged count excludes unjudgeable");
  check.equal(rows[0].unjudgeable, std::size_t{1}, "unjudgeable count");
  check.equal(rows[0].procedure_pct, 66.7, "procedure percentage");
  check.equal(rows[0].response_pct, 100.0, "response percentage");
  check.equal(rows[0].overall_pct, 66.7, "overall percentage");

  const std::string table = eval::metrics_to_table(rows);
  check.require(table.find("66.7") != std::string::npos, "table shows one-decimal percentages");
}

// ---------------------------------------------------------------------------
// 8. Serialization identity over 500 random instances plus lenient recovery.

void criterion_serialization(Check& check) {
  const auto dir = temp_dir("acceptance_serialize");
  const std::string path = (dir / "corpus.jsonl").string();

  Rng rng(88);
  corpus::Corpus original;
  original.config_digest = "acceptance";
  for (std::size_t i = 0; i < 500; ++i) {
    original.instances.push_back(random_instance(rng, i));
  }

  corpus::serialize(original, path);
  const std::string bytes = read_file(path);

  const corpus::Corpus loaded = corpus::deserialize(path);
  check.require(loaded == original, "field-for-field equality after one round trip");

  const std::string repath = (dir / "again.jsonl").string();
  corpus::serialize(loaded, repath);
  check.require(read_file(repath) == bytes, "bitwise identity after a second serialization");

  // corrupt one line, then load leniently
  auto lines = read_lines(path);
  const std::size_t victim = 250;  // 1-based line 251, instance #250
  lines[victim] = "{ \"definitely\": not json";
  std::string corrupted;
  for (const auto& l : lines) corrupted += l + "\n";
  write_file(path, corrupted);

  std::vector<corpus::LineDiagnostic> diagnostics;
  const corpus::Corpus lenient = corpus::deserialize(path, true, &diagnostics);
  check.equal(lenient.instances.size(), std::size_t{499}, "lenient load keeps 499");
  check.equal(diagnostics.size(), std::size_t{1}, "one diagnostic");
  check.equal(diagnostics[0].line_number, victim + 1, "diagnostic line number");
}

// ---------------------------------------------------------------------------
// 9. Live-mode request assembly against a local stub server.

void criterion_live(Check& check) {
  httplib::Server server;
  std::string seen_target, seen_method;
  server.Get(R"(/holidays/(\w+))", [&](const httplib::Request& req, httplib::Response& res) {
    seen_target = req.target;
    seen_method = req.method;
    res.set_content("{\"holidays\": []}", "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  check.require(port > 0, "stub server bound");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  registry::ApiSchema schema = holiday_schema();
  schema.base_url = "http://127.0.0.1:" + std::to_string(port);

  const auto move = agents::AssistantMove::act(
      "t", "getHolidays", json({{"country", "Japan"}, {"year", 2024}}));
  check.require(!agents::executor_validate(move, schema).has_value(), "move validates");

  agents::LiveConfig live;
  live.allowed_base_urls = {"http://127.0.0.1:"};
  live.timeout_seconds = 2;

  FnBackend backend([](const llm::CompletionRequest&) { return std::string("unused"); });
  const PromptCatalog prompts = PromptCatalog::builtin();

  const auto result = agents::executor_execute(move, schema, agents::ExecutionMode::live,
                                               backend, prompts, live);
  check.equal(result.status_code, 200, "stub status");
  check.equal(seen_method, std::string("GET"), "request method");
  check.equal(seen_target, std::string("/holidays/Japan?year=2024"),
              "request line: path substitution plus query string");

  server.stop();
  server_thread.join();

  registry::ApiSchema unreachable = schema;
  unreachable.base_url = "http://127.0.0.1:9";
  agents::LiveConfig fast = live;
  fast.timeout_seconds = 1;
  const auto down = agents::executor_execute(move, unreachable, agents::ExecutionMode::live,
                                             backend, prompts, fast);
  check.equal(down.status_code, 503, "unreachable host status");
  check.require(down.error_kind == agents::ErrorKind::simulated_server_error,
                "unreachable host maps to simulated_server_error");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<void(Check&)> run;
  };

  const std::vector<Criterion> criteria = {
      {1, "offline end-to-end pipeline on the fixture pack", criterion_pipeline},
      {2, "stats oracle on the hand-built corpus", criterion_stats},
      {3, "parser round-trip and mutation properties", criterion_parser},
      {4, "validation oracle via exhaustive perturbation", criterion_validation},
      {5, "ablation sampler exactness", criterion_ablation},
      {6, "structured scoring truth table", criterion_structured},
      {7, "judge harness contract", criterion_judge},
      {8, "serialization identity and lenient recovery", criterion_serialization},
      {9, "live-mode request assembly", criterion_live},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    if (check.failures.empty()) {
      std::cout << "[PASS] " << criterion.id << ". " << criterion.name << "\n";
    } else {
      ++failed;
      std::cout << "[FAIL] " << criterion.id << ". " << criterion.name << "\n";
      for (const auto& failure : check.failures) {
        std::cout << "       - " << failure << "\n";
      }
    }
  }

  if (failed != 0) {
    std::cout << failed << " of " << criteria.size() << " criteria failed\n";
  }
  return failed == 0 ? 0 : 1;
}
