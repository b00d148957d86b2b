#include "toolsim/cli.hpp"

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "toolsim/backend.hpp"
#include "toolsim/corpus.hpp"
#include "toolsim/evaluation.hpp"
#include "toolsim/registry.hpp"
#include "toolsim/simulation.hpp"

namespace toolsim::cli {

namespace fs = std::filesystem;

json RunManifest::core_json() const {
  return {{"command_line", command_line},
          {"config_digests", config_digests},
          {"toolset_digest", toolset_digest},
          {"backend_id", backend_id},
          {"started_at", started_at},
          {"outputs", outputs}};
}

std::string RunManifest::digest() const { return json_digest(core_json()); }

void RunManifest::write(const std::string& path) const {
  json doc = core_json();
  doc["manifest_digest"] = digest();
  write_file(path, doc.dump(2) + "\n");
}

namespace {

struct CommonState {
  std::string command_line;
  bool verbose = false;
  bool force = false;
};

std::string join_args(const std::vector<std::string>& args) {
  std::string out;
  for (const auto& a : args) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

// Refuses to overwrite existing outputs unless --force was given.
void check_outputs(const std::vector<std::string>& paths, bool force) {
  if (force) return;
  std::vector<std::string> existing;
  for (const auto& path : paths) {
    if (fs::exists(path)) existing.push_back(path);
  }
  if (!existing.empty()) {
    std::string message = "refusing to overwrite existing outputs (use --force):";
    for (const auto& path : existing) message += "\n  " + path;
    throw std::runtime_error(message);
  }
}

std::shared_ptr<llm::Backend> open_backend(const std::string& selector, bool verbose) {
  try {
    auto backend = llm::make_backend(selector);
    if (verbose) std::cerr << "backend: " << backend->id() << "\n";
    return backend;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("backend: ") + e.what());
  }
}

bool is_scripted(const std::string& selector) { return selector.rfind("scripted:", 0) == 0; }

// Scripted runs use a fixed clock so reruns are bit-identical.
ClockFn clock_for(const std::string& selector) {
  return is_scripted(selector) ? fixed_clock() : system_clock_utc();
}

PromptCatalog open_prompts(const std::string& dir) {
  try {
    return dir.empty() ? PromptCatalog::builtin() : PromptCatalog::from_dir(dir);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("prompts: ") + e.what());
  }
}

std::map<std::string, registry::ToolSpec> tools_by_name(
    const std::vector<registry::ToolSpec>& toolset) {
  std::map<std::string, registry::ToolSpec> map;
  for (const auto& tool : toolset) map[tool.name] = tool;
  return map;
}

// --- toolset ---

int cmd_toolset_build(const CommonState& state, const std::string& seeds_path,
                      const std::string& out_path, const std::string& backend_selector,
                      std::optional<std::size_t> sample, std::uint64_t seed,
                      const std::string& prompts_dir) {
  const PromptCatalog prompts = open_prompts(prompts_dir);

  registry::CatalogReport catalog_report;
  std::vector<registry::ToolSeed> seeds;
  try {
    seeds = registry::load_seed_catalog(seeds_path, &catalog_report);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  check_outputs({out_path}, state.force);
  auto backend = open_backend(backend_selector, state.verbose);

  RunManifest manifest;
  manifest.command_line = state.command_line;
  manifest.config_digests["seeds"] = fnv1a_hex(read_file(seeds_path));
  manifest.backend_id = backend->id();
  manifest.started_at = clock_for(backend_selector)();
  manifest.outputs = {out_path};

  registry::BuildOptions options;
  options.sample = sample;
  options.rng_seed = seed;

  registry::BuildReport report;
  report.catalog = catalog_report;
  const auto tools = registry::build_toolset(seeds, *backend, prompts, options, &report);
  if (tools.empty()) throw std::runtime_error("no tools survived the build");

  registry::save_toolset(tools, out_path);
  manifest.toolset_digest = fnv1a_hex(read_file(out_path));
  manifest.write(out_path + ".manifest.json");

  std::cout << "built " << tools.size() << " of " << report.seeds_attempted << " tools -> "
            << out_path << "\n";
  for (const auto& skipped : report.skipped) std::cout << "  skipped " << skipped << "\n";
  return kExitOk;
}

int cmd_toolset_validate(const std::string& path) {
  std::vector<registry::ToolSpec> tools;
  try {
    tools = registry::load_toolset(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  std::size_t violations = 0;
  for (const auto& tool : tools) {
    const auto report = registry::validate_tool(tool);
    for (const auto& violation : report.violations) {
      ++violations;
      std::cout << tool.name << ": [" << violation.code << "] " << violation.message << "\n";
    }
  }
  std::cout << tools.size() << " tools, " << violations << " violations\n";
  return violations == 0 ? kExitOk : kExitRuntime;
}

// --- corpus ---

int cmd_corpus_generate(const CommonState& state, const std::string& toolset_path,
                        const std::string& out_path, const std::string& config_path,
                        const std::string& backend_selector, const std::string& prompts_dir) {
  const PromptCatalog prompts = open_prompts(prompts_dir);

  std::vector<registry::ToolSpec> toolset;
  sim::EpisodeConfig config;
  try {
    toolset = registry::load_toolset(toolset_path);
    if (!config_path.empty()) {
      config = sim::episode_config_from_json(json::parse(read_file(config_path)));
    }
    config.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  const std::string report_path = out_path + ".report.json";
  check_outputs({out_path, report_path}, state.force);
  auto backend = open_backend(backend_selector, state.verbose);

  RunManifest manifest;
  manifest.command_line = state.command_line;
  manifest.config_digests["episode"] = sim::episode_config_digest(config);
  manifest.toolset_digest = fnv1a_hex(read_file(toolset_path));
  manifest.backend_id = backend->id();
  manifest.started_at = clock_for(backend_selector)();
  manifest.outputs = {out_path, report_path};

  sim::CorpusWriter writer(out_path, manifest.config_digests["episode"], manifest.digest());
  const sim::RunReport report = sim::generate_raw_corpus(toolset, config, *backend, prompts,
                                                         writer, clock_for(backend_selector));

  write_file(report_path, report.to_json().dump(2) + "\n");
  manifest.write(out_path + ".manifest.json");

  std::cout << "generated " << report.total_instances << " raw instances -> " << out_path << "\n";
  for (const auto& tool : report.tools) {
    if (!tool.skipped_reason.empty()) {
      std::cout << "  skipped " << tool.tool_name << ": " << tool.skipped_reason << "\n";
    }
  }
  return kExitOk;
}

corpus::Corpus load_corpus_or_config_error(const std::string& path, bool lenient = false,
                                           std::vector<corpus::LineDiagnostic>* diags = nullptr) {
  try {
    return corpus::deserialize(path, lenient, diags);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

int cmd_corpus_filter(const CommonState& state, const std::string& in_path,
                      const std::string& out_path, const std::string& toolset_path,
                      const corpus::FilterRules& rules) {
  const corpus::Corpus raw = load_corpus_or_config_error(in_path);
  corpus::ToolFunctions functions;
  try {
    functions = corpus::tool_functions(registry::load_toolset(toolset_path));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  const std::string report_path = out_path + ".rejections.json";
  check_outputs({out_path, report_path}, state.force);

  RunManifest manifest;
  manifest.command_line = state.command_line;
  manifest.config_digests["filter_rules"] =
      json_digest({{"max_steps_kept", rules.max_steps_kept},
                   {"require_relevant_call", rules.require_relevant_call},
                   {"drop_parse_errors", rules.drop_parse_errors}});
  manifest.toolset_digest = fnv1a_hex(read_file(toolset_path));
  manifest.started_at = system_clock_utc()();
  manifest.outputs = {out_path, report_path};

  corpus::RejectionReport report;
  corpus::Corpus kept;
  kept.config_digest = raw.config_digest;
  kept.manifest_digest = manifest.digest();
  kept.instances = corpus::filter_instances(raw.instances, rules, functions, &report);

  corpus::serialize(kept, out_path);
  write_file(report_path, report.to_json().dump(2) + "\n");
  manifest.write(out_path + ".manifest.json");

  std::cout << "kept " << kept.instances.size() << " of " << raw.instances.size()
            << " instances -> " << out_path << "\n";
  for (const auto& [rule, count] : report.counts) {
    std::cout << "  rejected " << count << " by rule \"" << rule << "\"\n";
  }
  return kExitOk;
}

int cmd_corpus_stats(const std::string& in_path, const std::string& toolset_path,
                     const std::string& out_path) {
  const corpus::Corpus loaded = load_corpus_or_config_error(in_path);
  corpus::ToolInfoMap info;
  if (!toolset_path.empty()) {
    try {
      info = corpus::tool_info(registry::load_toolset(toolset_path));
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }

  const corpus::CorpusStats stats = corpus::compute_stats(loaded.instances, info);
  const std::string rendered = stats.to_json().dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    write_file(out_path, rendered);
    std::cout << "stats -> " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_corpus_sample_review(const CommonState& state, const std::string& in_path, std::size_t n,
                             std::uint64_t seed, const std::string& toolset_path,
                             const std::string& out_path) {
  const corpus::Corpus loaded = load_corpus_or_config_error(in_path);
  std::map<std::string, registry::ToolSpec> tools;
  try {
    tools = tools_by_name(registry::load_toolset(toolset_path));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  check_outputs({out_path}, state.force);

  RunManifest manifest;
  manifest.command_line = state.command_line;
  manifest.config_digests["sample"] = json_digest({{"n", n}, {"seed", seed}});
  manifest.toolset_digest = fnv1a_hex(read_file(toolset_path));
  manifest.started_at = system_clock_utc()();
  manifest.outputs = {out_path};

  const std::string bundle = corpus::sample_for_review(loaded.instances, n, seed, tools);
  write_file(out_path, "<!-- manifest: " + manifest.digest() + " -->\n" + bundle);
  manifest.write(out_path + ".manifest.json");

  std::cout << "review bundle of " << n << " instances -> " << out_path << "\n";
  return kExitOk;
}

int cmd_corpus_ablate(const CommonState& state, const std::string& in_path,
                      const std::vector<std::size_t>& tool_counts, std::size_t total,
                      std::uint64_t seed, const std::string& out_dir) {
  const corpus::Corpus loaded = load_corpus_or_config_error(in_path);

  std::vector<std::string> out_paths;
  for (const std::size_t k : tool_counts) {
    out_paths.push_back((fs::path(out_dir) / ("ablation_tools_" + std::to_string(k) + ".jsonl"))
                            .string());
  }
  fs::create_directories(out_dir);
  check_outputs(out_paths, state.force);

  RunManifest manifest;
  manifest.command_line = state.command_line;
  manifest.config_digests["ablate"] =
      json_digest({{"tool_counts", tool_counts}, {"total", total}, {"seed", seed}});
  manifest.started_at = system_clock_utc()();
  manifest.outputs = out_paths;

  const auto subs = corpus::subsample_by_toolcount(loaded.instances, tool_counts, total, seed);
  for (std::size_t i = 0; i < subs.size(); ++i) {
    corpus::Corpus sub;
    sub.config_digest = loaded.config_digest;
    sub.manifest_digest = manifest.digest();
    sub.instances = subs[i];
    corpus::serialize(sub, out_paths[i]);
    std::cout << "k=" << tool_counts[i] << ": " << subs[i].size() << " instances -> "
              << out_paths[i] << "\n";
  }
  manifest.write((fs::path(out_dir) / "ablation.manifest.json").string());
  return kExitOk;
}

int cmd_corpus_export_training(const CommonState& state, const std::string& in_path,
                               const std::string& toolset_path, const std::string& out_path) {
  const corpus::Corpus loaded = load_corpus_or_config_error(in_path);
  std::map<std::string, registry::ToolSpec> tools;
  try {
    tools = tools_by_name(registry::load_toolset(toolset_path));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  check_outputs({out_path}, state.force);

  RunManifest manifest;
  manifest.command_line = state.command_line;
  manifest.toolset_digest = fnv1a_hex(read_file(toolset_path));
  manifest.started_at = system_clock_utc()();
  manifest.outputs = {out_path};

  corpus::export_training_view(loaded.instances, tools, out_path, manifest.digest());
  manifest.write(out_path + ".manifest.json");

  std::cout << "training view of " << loaded.instances.size() << " instances -> " << out_path
            << "\n";
  return kExitOk;
}

// --- eval ---

int cmd_eval_judge(const CommonState& state, const std::string& pred_path,
                   const std::string& gold_path, const std::string& tools_path,
                   const std::string& backend_selector, const std::string& out_path,
                   const std::string& group, const std::string& prompts_dir) {
  const PromptCatalog prompts = open_prompts(prompts_dir);
  const corpus::Corpus pred = load_corpus_or_config_error(pred_path);

  std::map<eval::GoldKey, eval::GoldRecord> gold;
  std::map<std::string, registry::ToolSpec> tools;
  try {
    gold = eval::load_gold(gold_path);
    tools = tools_by_name(registry::load_toolset(tools_path));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  check_outputs({out_path}, state.force);
  auto backend = open_backend(backend_selector, state.verbose);

  RunManifest manifest;
  manifest.command_line = state.command_line;
  manifest.toolset_digest = fnv1a_hex(read_file(tools_path));
  manifest.backend_id = backend->id();
  manifest.started_at = clock_for(backend_selector)();
  manifest.outputs = {out_path};

  // judge calls are independent; run them concurrently under the backend's
  // own concurrency limit, then write results in corpus order
  struct Job {
    const sim::ToolUseInstance* instance;
    const eval::GoldRecord* gold;
    const registry::ToolSpec* tool;
    std::string digest;
  };
  std::vector<Job> jobs;
  std::size_t missing_gold = 0;
  for (const auto& instance : pred.instances) {
    const auto key = eval::gold_key(instance.tool_name, instance.instruction.text);
    auto gold_it = gold.find(key);
    auto tool_it = tools.find(instance.tool_name);
    if (gold_it == gold.end() || tool_it == tools.end()) {
      ++missing_gold;
      continue;
    }
    jobs.push_back({&instance, &gold_it->second, &tool_it->second, key.second});
  }

  std::vector<eval::JudgeOutcome> outcomes(jobs.size());
  {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      while (true) {
        const std::size_t index = next.fetch_add(1);
        if (index >= jobs.size()) return;
        try {
          outcomes[index] = eval::judge_instance(*jobs[index].instance, *jobs[index].gold,
                                                 *jobs[index].tool, *backend, prompts);
        } catch (...) {
          std::lock_guard lk(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    const std::size_t threads =
        std::min<std::size_t>(std::max(1, backend->config().concurrency_limit), jobs.size());
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  std::ostringstream lines;
  std::size_t judged = 0, unjudgeable = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    outcomes[i].unjudgeable() ? ++unjudgeable : ++judged;
    json line = eval::judge_outcome_to_json(outcomes[i]);
    line["group"] = group;
    line["tool_name"] = jobs[i].instance->tool_name;
    line["instruction_digest"] = jobs[i].digest;
    lines << line.dump() << "\n";
  }

  json header = {{"format_version", 1},
                 {"kind", "judge_verdicts"},
                 {"group", group},
                 {"manifest_digest", manifest.digest()}};
  write_file(out_path, header.dump() + "\n" + lines.str());
  manifest.write(out_path + ".manifest.json");

  std::cout << "judged " << judged << " instances (" << unjudgeable << " unjudgeable, "
            << missing_gold << " without gold) -> " << out_path << "\n";
  return kExitOk;
}

int cmd_eval_structured(const std::string& pred_path, const std::string& gold_path,
                        const std::string& out_path, const std::string& group) {
  const corpus::Corpus pred = load_corpus_or_config_error(pred_path);
  std::map<eval::GoldKey, eval::GoldRecord> gold;
  try {
    gold = eval::load_gold(gold_path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  std::vector<eval::StructuredCase> cases;
  std::size_t skipped = 0;
  for (const auto& instance : pred.instances) {
    auto it = gold.find(eval::gold_key(instance.tool_name, instance.instruction.text));
    if (it == gold.end() || it->second.actions.empty()) {
      ++skipped;
      continue;
    }
    cases.push_back(eval::score_structured(instance, it->second));
  }
  if (cases.empty()) throw std::runtime_error("no instances with gold actions to score");

  const eval::StructuredScores scores = eval::aggregate_structured(cases);
  json doc = scores.to_json();
  doc["group"] = group;
  doc["cases"] = cases.size();
  doc["skipped_without_gold"] = skipped;

  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    write_file(out_path, doc.dump(2) + "\n");
    std::cout << "structured scores -> " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_eval_report(const std::vector<std::string>& verdict_paths, const std::string& out_path) {
  std::vector<eval::JudgedCase> cases;
  for (const auto& path : verdict_paths) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw ConfigError("verdict file " + path + " is empty");
    json header;
    try {
      header = json::parse(lines[0]);
    } catch (const json::exception& e) {
      throw ConfigError("verdict file " + path + " header: " + e.what());
    }
    if (header.value("kind", "") != "judge_verdicts") {
      throw ConfigError("verdict file " + path + " is not a judge_verdicts file");
    }
    const std::string default_group = header.value("group", path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const json line = json::parse(lines[i]);
      eval::JudgedCase judged;
      judged.group = line.value("group", default_group);
      if (judged.group.empty()) judged.group = default_group;
      judged.outcome = eval::judge_outcome_from_json(line);
      cases.push_back(std::move(judged));
    }
  }

  const auto rows = eval::aggregate(cases);
  std::cout << eval::metrics_to_table(rows);
  if (!out_path.empty()) {
    write_file(out_path, eval::metrics_to_json(rows).dump(2) + "\n");
    std::cout << "report -> " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int pipeline_run(const std::string& config_path, bool force, bool verbose) {
  json config;
  std::string stage = "config";
  try {
    config = json::parse(read_file(config_path));
    if (!config.is_object()) throw std::runtime_error("pipeline config must be a JSON object");

    const std::string seeds_path = config.at("seeds").get<std::string>();
    const std::string backend_selector = config.at("backend").get<std::string>();
    const std::string out_dir = config.at("out_dir").get<std::string>();
    const std::string prompts_dir = config.value("prompts_dir", "");
    const std::uint64_t rng_seed = config.value("rng_seed", std::uint64_t{0});

    const PromptCatalog prompts = open_prompts(prompts_dir);

    sim::EpisodeConfig episode_config;
    if (config.contains("generate")) {
      episode_config = sim::episode_config_from_json(config.at("generate"));
    }
    if (!config.contains("generate") || !config.at("generate").contains("rng_seed")) {
      episode_config.rng_seed = rng_seed;
    }

    corpus::FilterRules rules;
    if (config.contains("filter")) {
      const json& f = config.at("filter");
      rules.max_steps_kept = f.value("max_steps_kept", rules.max_steps_kept);
      rules.require_relevant_call = f.value("require_relevant_call", rules.require_relevant_call);
      rules.drop_parse_errors = f.value("drop_parse_errors", rules.drop_parse_errors);
    }

    registry::BuildOptions build_options;
    build_options.rng_seed = rng_seed;
    if (config.contains("toolset") && config.at("toolset").contains("sample")) {
      build_options.sample = config.at("toolset").at("sample").get<std::size_t>();
    }

    fs::create_directories(out_dir);
    const std::string toolset_path = (fs::path(out_dir) / "toolset.json").string();
    const std::string raw_path = (fs::path(out_dir) / "raw.jsonl").string();
    const std::string filtered_path = (fs::path(out_dir) / "filtered.jsonl").string();
    const std::string rejections_path = (fs::path(out_dir) / "rejections.json").string();
    const std::string stats_path = (fs::path(out_dir) / "stats.json").string();
    const std::string run_report_path = (fs::path(out_dir) / "run_report.json").string();
    const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();

    check_outputs({toolset_path, raw_path, filtered_path, rejections_path, stats_path,
                   run_report_path},
                  force);

    auto backend = open_backend(backend_selector, verbose);
    const ClockFn clock = clock_for(backend_selector);

    RunManifest manifest;
    manifest.command_line = "pipeline run --config " + config_path;
    manifest.config_digests["pipeline"] = json_digest(config);
    manifest.config_digests["episode"] = sim::episode_config_digest(episode_config);
    manifest.backend_id = backend->id();
    manifest.started_at = clock();
    manifest.outputs = {toolset_path, raw_path, filtered_path, rejections_path, stats_path,
                        run_report_path};

    // stage: build
    stage = "build";
    registry::CatalogReport catalog_report;
    const auto seeds = registry::load_seed_catalog(seeds_path, &catalog_report);
    registry::BuildReport build_report;
    build_report.catalog = catalog_report;
    const auto toolset =
        registry::build_toolset(seeds, *backend, prompts, build_options, &build_report);
    if (toolset.empty()) throw std::runtime_error("no tools survived the build");
    registry::save_toolset(toolset, toolset_path);
    manifest.toolset_digest = fnv1a_hex(read_file(toolset_path));

    // stage: generate
    stage = "generate";
    sim::CorpusWriter writer(raw_path, manifest.config_digests["episode"], manifest.digest());
    const sim::RunReport run_report =
        sim::generate_raw_corpus(toolset, episode_config, *backend, prompts, writer, clock);
    write_file(run_report_path, run_report.to_json().dump(2) + "\n");

    // stage: filter
    stage = "filter";
    const corpus::Corpus raw = corpus::deserialize(raw_path);
    corpus::RejectionReport rejection_report;
    corpus::Corpus kept;
    kept.config_digest = raw.config_digest;
    kept.manifest_digest = manifest.digest();
    kept.instances =
        corpus::filter_instances(raw.instances, rules, corpus::tool_functions(toolset),
                                 &rejection_report);
    corpus::serialize(kept, filtered_path);
    write_file(rejections_path, rejection_report.to_json().dump(2) + "\n");

    // stage: stats
    stage = "stats";
    if (kept.instances.empty()) throw std::runtime_error("no instances survived filtering");
    const corpus::CorpusStats stats = corpus::compute_stats(kept.instances, corpus::tool_info(toolset));
    json stats_doc = stats.to_json();
    stats_doc["manifest_digest"] = manifest.digest();
    write_file(stats_path, stats_doc.dump(2) + "\n");

    manifest.write(manifest_path);

    std::cout << "pipeline complete: " << run_report.total_instances << " raw, "
              << kept.instances.size() << " kept -> " << out_dir << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "pipeline failed at stage \"" << stage << "\": " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "pipeline failed at stage \"" << stage << "\": " << e.what() << "\n";
    return stage == "config" ? kExitConfig : kExitRuntime;
  }
}

int dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("toolsim");
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"tool-use corpus generation and evaluation toolkit"};
  app.require_subcommand(1);

  CommonState state;
  {
    std::vector<std::string> parts;
    for (int i = 0; i < argc; ++i) parts.emplace_back(argv[i]);
    state.command_line = join_args(parts);
  }

  app.add_flag("--verbose", state.verbose, "log backend traffic and progress");
  app.add_flag("--force", state.force, "overwrite existing outputs");

  // toolset
  auto* toolset_cmd = app.add_subcommand("toolset", "build and validate toolsets");
  toolset_cmd->require_subcommand(1);

  std::string seeds_path, toolset_out, backend_selector, prompts_dir;
  std::optional<std::size_t> sample;
  std::uint64_t seed = 0;
  auto* build = toolset_cmd->add_subcommand("build", "expand seeds into tool documentation");
  build->add_option("--seeds", seeds_path, "seed catalog JSON")->required();
  build->add_option("--out", toolset_out, "toolset output path")->required();
  build->add_option("--backend", backend_selector, "scripted:<fixtures> or live:<config>")
      ->required();
  build->add_option("--sample", sample, "uniform sample size of the catalog");
  build->add_option("--seed", seed, "RNG seed for sampling");
  build->add_option("--prompts", prompts_dir, "prompt template directory");

  std::string validate_path;
  auto* validate = toolset_cmd->add_subcommand("validate", "check a toolset file");
  validate->add_option("path", validate_path, "toolset JSON")->required();

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "generate and manage corpora");
  corpus_cmd->require_subcommand(1);

  std::string gen_toolset, gen_out, gen_config, gen_backend, gen_prompts;
  auto* generate = corpus_cmd->add_subcommand("generate", "simulate episodes for every tool");
  generate->add_option("--toolset", gen_toolset, "toolset JSON")->required();
  generate->add_option("--out", gen_out, "raw corpus JSONL output")->required();
  generate->add_option("--config", gen_config, "episode config JSON");
  generate->add_option("--backend", gen_backend, "scripted:<fixtures> or live:<config>")
      ->required();
  generate->add_option("--prompts", gen_prompts, "prompt template directory");

  std::string filter_in, filter_out, filter_toolset;
  corpus::FilterRules rules;
  bool keep_parse_errors = false, allow_irrelevant = false;
  auto* filter = corpus_cmd->add_subcommand("filter", "apply the corpus quality rules");
  filter->add_option("input", filter_in, "raw corpus JSONL")->required();
  filter->add_option("--out", filter_out, "filtered corpus JSONL")->required();
  filter->add_option("--toolset", filter_toolset, "toolset JSON")->required();
  filter->add_option("--max-steps-kept", rules.max_steps_kept, "step budget (default 5)");
  filter->add_flag("--keep-parse-errors", keep_parse_errors, "retain terminal parse errors");
  filter->add_flag("--allow-irrelevant", allow_irrelevant, "skip the relevant-call rule");

  std::string stats_in, stats_toolset, stats_out;
  auto* stats = corpus_cmd->add_subcommand("stats", "corpus statistics");
  stats->add_option("input", stats_in, "corpus JSONL")->required();
  stats->add_option("--toolset", stats_toolset, "toolset JSON for category data");
  stats->add_option("--out", stats_out, "stats JSON output (stdout when omitted)");

  std::string review_in, review_toolset, review_out;
  std::size_t review_n = 100;
  std::uint64_t review_seed = 0;
  auto* review = corpus_cmd->add_subcommand("sample-review", "draw a human review bundle");
  review->add_option("input", review_in, "corpus JSONL")->required();
  review->add_option("--n", review_n, "sample size")->required();
  review->add_option("--seed", review_seed, "RNG seed");
  review->add_option("--toolset", review_toolset, "toolset JSON")->required();
  review->add_option("--out", review_out, "Markdown bundle output")->required();

  std::string ablate_in, ablate_out_dir, ablate_tools_arg;
  std::size_t ablate_total = 0;
  std::uint64_t ablate_seed = 0;
  auto* ablate = corpus_cmd->add_subcommand("ablate", "fixed-size sub-corpora by tool count");
  ablate->add_option("input", ablate_in, "corpus JSONL")->required();
  ablate->add_option("--tools", ablate_tools_arg, "comma-separated tool counts, e.g. 10,40")
      ->required();
  ablate->add_option("--total", ablate_total, "instances per sub-corpus")->required();
  ablate->add_option("--seed", ablate_seed, "RNG seed");
  ablate->add_option("--out-dir", ablate_out_dir, "output directory")->required();

  std::string export_in, export_toolset, export_out;
  auto* export_cmd = corpus_cmd->add_subcommand("export-training", "fine-tuning hand-off file");
  export_cmd->add_option("input", export_in, "filtered corpus JSONL")->required();
  export_cmd->add_option("--toolset", export_toolset, "toolset JSON")->required();
  export_cmd->add_option("--out", export_out, "training view JSONL output")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "judge and score transcripts");
  eval_cmd->require_subcommand(1);

  std::string judge_pred, judge_gold, judge_tools, judge_backend, judge_out, judge_group,
      judge_prompts;
  auto* judge = eval_cmd->add_subcommand("judge", "LLM-judge verdicts against gold answers");
  judge->add_option("--pred", judge_pred, "predicted corpus JSONL")->required();
  judge->add_option("--gold", judge_gold, "gold record JSON")->required();
  judge->add_option("--tools", judge_tools, "toolset JSON")->required();
  judge->add_option("--backend", judge_backend, "scripted:<fixtures> or live:<config>")
      ->required();
  judge->add_option("--out", judge_out, "verdicts JSONL output")->required();
  judge->add_option("--group", judge_group, "group label for the report");
  judge->add_option("--prompts", judge_prompts, "prompt template directory");

  std::string structured_pred, structured_gold, structured_out, structured_group;
  auto* structured = eval_cmd->add_subcommand("structured", "deterministic success rates");
  structured->add_option("--pred", structured_pred, "predicted corpus JSONL")->required();
  structured->add_option("--gold", structured_gold, "gold record JSON")->required();
  structured->add_option("--out", structured_out, "scores JSON output (stdout when omitted)");
  structured->add_option("--group", structured_group, "group label");

  std::vector<std::string> report_files;
  std::string report_out;
  auto* report = eval_cmd->add_subcommand("report", "aggregate verdict files into a table");
  report->add_option("files", report_files, "verdict JSONL files")->required();
  report->add_option("--out", report_out, "report JSON output");

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full generation pipeline");
  pipeline_cmd->require_subcommand(1);
  std::string pipeline_config;
  auto* run = pipeline_cmd->add_subcommand("run", "build -> generate -> filter -> stats");
  run->add_option("--config", pipeline_config, "pipeline config JSON")->required();

  for (CLI::App* sub : {toolset_cmd, corpus_cmd, eval_cmd, pipeline_cmd, build, validate,
                        generate, filter, stats, review, ablate, export_cmd, judge, structured,
                        report, run}) {
    sub->fallthrough();  // accept --force / --verbose after the subcommand too
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (build->parsed()) {
      return cmd_toolset_build(state, seeds_path, toolset_out, backend_selector, sample, seed,
                               prompts_dir);
    }
    if (validate->parsed()) return cmd_toolset_validate(validate_path);
    if (generate->parsed()) {
      return cmd_corpus_generate(state, gen_toolset, gen_out, gen_config, gen_backend,
                                 gen_prompts);
    }
    if (filter->parsed()) {
      rules.drop_parse_errors = !keep_parse_errors;
      rules.require_relevant_call = !allow_irrelevant;
      return cmd_corpus_filter(state, filter_in, filter_out, filter_toolset, rules);
    }
    if (stats->parsed()) return cmd_corpus_stats(stats_in, stats_toolset, stats_out);
    if (review->parsed()) {
      return cmd_corpus_sample_review(state, review_in, review_n, review_seed, review_toolset,
                                      review_out);
    }
    if (ablate->parsed()) {
      std::vector<std::size_t> counts;
      std::stringstream ss(ablate_tools_arg);
      std::string part;
      while (std::getline(ss, part, ',')) {
        if (!trim(part).empty()) counts.push_back(std::stoul(trim(part)));
      }
      if (counts.empty()) throw ConfigError("--tools needs at least one count");
      return cmd_corpus_ablate(state, ablate_in, counts, ablate_total, ablate_seed,
                               ablate_out_dir);
    }
    if (export_cmd->parsed()) {
      return cmd_corpus_export_training(state, export_in, export_toolset, export_out);
    }
    if (judge->parsed()) {
      return cmd_eval_judge(state, judge_pred, judge_gold, judge_tools, judge_backend, judge_out,
                            judge_group, judge_prompts);
    }
    if (structured->parsed()) {
      return cmd_eval_structured(structured_pred, structured_gold, structured_out,
                                 structured_group);
    }
    if (report->parsed()) return cmd_eval_report(report_files, report_out);
    if (run->parsed()) return pipeline_run(pipeline_config, state.force, state.verbose);

    std::cerr << "unknown subcommand\n" << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const llm::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace toolsim::cli
