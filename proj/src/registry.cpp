#include "toolsim/registry.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace toolsim::registry {

namespace {

json function_doc_to_json(const FunctionDoc& fn) {
  json params = json::array();
  for (const auto& p : fn.parameters) {
    params.push_back({{"name", p.name},
                      {"type", p.type},
                      {"required", p.required},
                      {"description", p.description}});
  }
  return {{"name", fn.function_name},
          {"summary", fn.summary},
          {"parameters", params},
          {"returns", fn.returns}};
}

FunctionDoc function_doc_from_json(const json& j) {
  FunctionDoc fn;
  fn.function_name = j.at("name").get<std::string>();
  fn.summary = j.value("summary", "");
  fn.returns = j.value("returns", "");
  if (j.contains("parameters")) {
    for (const auto& p : j.at("parameters")) {
      FunctionParam param;
      param.name = p.at("name").get<std::string>();
      param.type = p.value("type", "string");
      param.required = p.value("required", false);
      param.description = p.value("description", "");
      fn.parameters.push_back(std::move(param));
    }
  }
  return fn;
}

}  // namespace

json tool_spec_to_json(const ToolSpec& spec) {
  json functions = json::array();
  for (const auto& fn : spec.functions) functions.push_back(function_doc_to_json(fn));
  return {{"name", spec.name},
          {"introduction", spec.introduction},
          {"description", spec.description},
          {"functions", functions},
          {"schema", schema_to_openapi_json(spec.schema)},
          {"category", spec.category}};
}

ToolSpec tool_spec_from_json(const json& j) {
  ToolSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.introduction = j.at("introduction").get<std::string>();
  spec.description = j.at("description").get<std::string>();
  for (const auto& fn : j.at("functions")) spec.functions.push_back(function_doc_from_json(fn));
  spec.schema = schema_from_openapi_json(j.at("schema"));
  spec.category = j.value("category", "");
  return spec;
}

std::string render_function_docs(const std::vector<FunctionDoc>& functions) {
  std::ostringstream out;
  for (const auto& fn : functions) {
    out << "- " << fn.function_name << ": " << fn.summary << "\n";
    for (const auto& p : fn.parameters) {
      out << "    " << p.name << " (" << p.type << (p.required ? ", required" : "") << "): "
          << p.description << "\n";
    }
    if (!fn.returns.empty()) out << "    returns: " << fn.returns << "\n";
  }
  std::string text = out.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::vector<ToolSeed> load_seed_catalog(const std::string& path, CatalogReport* report) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed seed catalog " + path + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw std::runtime_error("seed catalog " + path + " must be a JSON array");
  }

  CatalogReport local;
  std::vector<ToolSeed> seeds;
  std::set<std::string> seen;
  std::size_t row = 0;
  for (const auto& entry : doc) {
    ++row;
    ++local.total_rows;
    if (!entry.is_object()) {
      local.skipped.push_back("row " + std::to_string(row) + ": not an object");
      continue;
    }
    ToolSeed seed;
    seed.name = trim(entry.value("name", ""));
    seed.introduction = trim(entry.value("introduction", ""));
    seed.category = trim(entry.value("category", ""));
    if (seed.name.empty() || seed.introduction.empty()) {
      local.skipped.push_back("row " + std::to_string(row) + ": missing name or introduction");
      continue;
    }
    if (!seen.insert(seed.name).second) {
      ++local.duplicates;
      continue;
    }
    seeds.push_back(std::move(seed));
  }

  if (report) *report = local;
  if (seeds.empty()) {
    throw std::runtime_error("seed catalog " + path + " has zero valid rows");
  }
  return seeds;
}

std::string generate_description(const ToolSeed& seed, llm::Backend& backend,
                                 const PromptCatalog& prompts) {
  llm::CompletionRequest request;
  request.role = llm::Role::doc_generator;
  request.sampling = llm::default_sampling(request.role);
  request.prompt = prompts.render("description", {{"name", seed.name},
                                                  {"introduction", seed.introduction}});

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string text = trim(backend.complete(request));
    // take the fenced body if the model wrapped its answer
    if (auto block = extract_fenced_block(text)) text = trim(*block);
    if (!text.empty() && text.size() > seed.introduction.size()) return text;
  }
  throw std::runtime_error("description generation for " + seed.name +
                           " stayed empty or shorter than the introduction");
}

std::vector<FunctionDoc> generate_function_docs(const ToolSeed& seed,
                                                const std::string& description,
                                                llm::Backend& backend,
                                                const PromptCatalog& prompts,
                                                ParseReport* report) {
  if (description.empty()) throw std::runtime_error("description must be non-empty");

  llm::CompletionRequest request;
  request.role = llm::Role::doc_generator;
  request.sampling = llm::default_sampling(request.role);
  request.prompt = prompts.render("functions", {{"name", seed.name},
                                                {"description", description}});

  const std::string text = backend.complete(request);
  const auto block = extract_fenced_block(text, {"json"});
  ParseReport local;

  json arr;
  try {
    arr = json::parse(block ? *block : text);
  } catch (const json::exception& e) {
    throw std::runtime_error("function documentation for " + seed.name +
                             " is not parseable JSON: " + e.what());
  }
  if (!arr.is_array()) {
    throw std::runtime_error("function documentation for " + seed.name + " is not a JSON array");
  }

  std::vector<FunctionDoc> functions;
  std::set<std::string> names;
  std::size_t index = 0;
  for (const auto& entry : arr) {
    ++index;
    try {
      if (!entry.is_object() || !entry.contains("name") || trim(entry.at("name").get<std::string>()).empty()) {
        throw std::runtime_error("missing name");
      }
      FunctionDoc fn = function_doc_from_json(entry);
      fn.function_name = trim(fn.function_name);
      std::set<std::string> param_names;
      for (const auto& p : fn.parameters) {
        if (p.name.empty()) throw std::runtime_error("parameter without name");
        if (!param_names.insert(p.name).second) {
          throw std::runtime_error("duplicate parameter " + p.name);
        }
      }
      if (!names.insert(fn.function_name).second) {
        // uniqueness enforcement: rename with numeric suffix
        int suffix = 2;
        std::string renamed;
        do {
          renamed = fn.function_name + "_" + std::to_string(suffix++);
        } while (names.count(renamed));
        local.renamed.push_back(fn.function_name + " -> " + renamed);
        fn.function_name = renamed;
        names.insert(fn.function_name);
      }
      functions.push_back(std::move(fn));
    } catch (const std::exception& e) {
      local.discarded.push_back("entry " + std::to_string(index) + ": " + e.what());
    }
  }

  if (report) *report = local;
  if (functions.empty()) {
    throw std::runtime_error("function documentation for " + seed.name +
                             " yielded zero parseable functions");
  }
  return functions;
}

namespace {

std::string violations_summary(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report.violations) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

}  // namespace

ApiSchema generate_openapi(const ToolSeed& seed, const std::string& description,
                           const std::vector<FunctionDoc>& functions, llm::Backend& backend,
                           const PromptCatalog& prompts) {
  if (seed.name.empty() || description.empty() || functions.empty()) {
    throw std::runtime_error("openapi generation needs name, description, and functions");
  }

  llm::CompletionRequest request;
  request.role = llm::Role::doc_generator;
  request.sampling = llm::default_sampling(request.role);
  request.prompt = prompts.render("openapi", {{"name", seed.name},
                                              {"description", description},
                                              {"function_docs", render_function_docs(functions)}});

  std::vector<std::string> function_names;
  for (const auto& fn : functions) function_names.push_back(fn.function_name);

  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string text = backend.complete(request);
    const auto block = extract_fenced_block(text, {"json", "yaml"});
    ApiSchema schema;
    try {
      schema = schema_from_text(block ? *block : text);
    } catch (const std::exception& e) {
      last_error = e.what();
      continue;
    }
    const ValidationReport report = validate_schema(schema, function_names);
    if (report.ok()) return schema;
    last_error = violations_summary(report);
  }
  throw std::runtime_error("openapi generation for " + seed.name + " failed validation: " +
                           last_error);
}

json BuildReport::to_json() const {
  return {{"catalog",
           {{"total_rows", catalog.total_rows},
            {"duplicates", catalog.duplicates},
            {"skipped", catalog.skipped}}},
          {"seeds_attempted", seeds_attempted},
          {"tools_built", tools_built},
          {"skipped", skipped}};
}

std::vector<ToolSpec> build_toolset(const std::vector<ToolSeed>& seeds, llm::Backend& backend,
                                    const PromptCatalog& prompts, const BuildOptions& options,
                                    BuildReport* report) {
  std::vector<ToolSeed> selected = seeds;
  if (options.sample && *options.sample < selected.size()) {
    Rng rng(derive_seed(options.rng_seed, "toolset-sample"));
    rng.shuffle(selected);
    selected.resize(*options.sample);
  }

  BuildReport local;
  local.seeds_attempted = selected.size();

  std::vector<ToolSpec> tools;
  for (const auto& seed : selected) {
    try {
      ToolSpec spec;
      spec.name = seed.name;
      spec.introduction = seed.introduction;
      spec.category = seed.category;
      spec.description = generate_description(seed, backend, prompts);
      spec.functions = generate_function_docs(seed, spec.description, backend, prompts);
      spec.schema = generate_openapi(seed, spec.description, spec.functions, backend, prompts);

      const TextualCheck check = is_textual_only(spec.schema);
      if (!check.textual_only) {
        local.skipped.push_back(seed.name + ": non-textual content (" + check.reason + ")");
        continue;
      }
      tools.push_back(std::move(spec));
    } catch (const llm::BackendError&) {
      throw;  // backend trouble is fatal for the whole run
    } catch (const std::exception& e) {
      local.skipped.push_back(seed.name + ": " + e.what());
    }
  }

  local.tools_built = tools.size();
  if (report) {
    local.catalog = report->catalog;  // caller may have pre-filled catalog stats
    *report = local;
  }
  return tools;
}

void save_toolset(const std::vector<ToolSpec>& tools, const std::string& path) {
  json doc = json::array();
  for (const auto& spec : tools) doc.push_back(tool_spec_to_json(spec));
  write_file(path, doc.dump(2) + "\n");
}

std::vector<ToolSpec> load_toolset(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed toolset file " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("toolset file " + path + " must be a JSON array");
  std::vector<ToolSpec> tools;
  for (const auto& entry : doc) tools.push_back(tool_spec_from_json(entry));
  return tools;
}

ValidationReport validate_tool(const ToolSpec& spec) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };

  if (spec.name.empty()) add("missing_field", "tool has no name");
  if (spec.introduction.empty()) add("missing_field", spec.name + " has no introduction");
  if (spec.description.empty()) add("missing_field", spec.name + " has no description");
  if (spec.functions.empty()) add("missing_field", spec.name + " has no functions");
  if (spec.schema.operations.empty()) add("missing_field", spec.name + " has an empty schema");

  std::vector<std::string> function_names;
  for (const auto& fn : spec.functions) function_names.push_back(fn.function_name);

  const ValidationReport schema_report = validate_schema(spec.schema, function_names);
  report.violations.insert(report.violations.end(), schema_report.violations.begin(),
                           schema_report.violations.end());
  return report;
}

}  // namespace toolsim::registry
