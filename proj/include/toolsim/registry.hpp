#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toolsim/backend.hpp"
#include "toolsim/openapi.hpp"
#include "toolsim/prompts.hpp"
#include "toolsim/util.hpp"

namespace toolsim::registry {

struct ToolSeed {
  std::string name;
  std::string introduction;  // one-sentence pitch
  std::string category;

  bool operator==(const ToolSeed&) const = default;
};

struct FunctionParam {
  std::string name;
  std::string type;  // string | integer | number | boolean | array | object
  bool required = false;
  std::string description;

  bool operator==(const FunctionParam&) const = default;
};

struct FunctionDoc {
  std::string function_name;
  std::string summary;
  std::vector<FunctionParam> parameters;
  std::string returns;

  bool operator==(const FunctionDoc&) const = default;
};

// The five-part tool representation. `category` rides along from the seed
// catalog for corpus statistics.
struct ToolSpec {
  std::string name;
  std::string introduction;
  std::string description;
  std::vector<FunctionDoc> functions;
  ApiSchema schema;
  std::string category;

  bool operator==(const ToolSpec&) const = default;
};

json tool_spec_to_json(const ToolSpec& spec);
ToolSpec tool_spec_from_json(const json& j);

// Renders the function documentation as the plain-text block embedded in
// agent prompts.
std::string render_function_docs(const std::vector<FunctionDoc>& functions);

struct CatalogReport {
  std::size_t total_rows = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> skipped;  // one message per unusable row
};

// Seed catalog: JSON array of {name, introduction, category}. Duplicate names
// keep the first occurrence. Throws if the file is unreadable or no row is
// usable.
std::vector<ToolSeed> load_seed_catalog(const std::string& path, CatalogReport* report = nullptr);

struct ParseReport {
  std::vector<std::string> discarded;  // malformed entries
  std::vector<std::string> renamed;    // duplicate function names given suffixes
};

// Expands the one-line introduction into a multi-sentence description.
// Retries once if the generation is empty or not longer than the
// introduction, then fails.
std::string generate_description(const ToolSeed& seed, llm::Backend& backend,
                                 const PromptCatalog& prompts);

// Parses the generated JSON block into FunctionDocs; malformed entries are
// discarded into the report, duplicate names renamed with a numeric suffix.
// Throws if nothing parseable remains.
std::vector<FunctionDoc> generate_function_docs(const ToolSeed& seed,
                                                const std::string& description,
                                                llm::Backend& backend,
                                                const PromptCatalog& prompts,
                                                ParseReport* report = nullptr);

// Generates the OpenAPI document covering every function, validating the
// result. One regeneration attempt on validation failure, then throws with
// the violations.
ApiSchema generate_openapi(const ToolSeed& seed, const std::string& description,
                           const std::vector<FunctionDoc>& functions, llm::Backend& backend,
                           const PromptCatalog& prompts);

struct BuildOptions {
  std::optional<std::size_t> sample;  // uniform sample of the catalog
  std::uint64_t rng_seed = 0;
};

struct BuildReport {
  CatalogReport catalog;
  std::size_t seeds_attempted = 0;
  std::size_t tools_built = 0;
  std::vector<std::string> skipped;  // "<tool>: <reason>" per dropped seed

  json to_json() const;
};

// Full expansion pipeline: seed -> quintuple, dropping tools that fail
// validation twice or declare non-textual content.
std::vector<ToolSpec> build_toolset(const std::vector<ToolSeed>& seeds, llm::Backend& backend,
                                    const PromptCatalog& prompts, const BuildOptions& options,
                                    BuildReport* report = nullptr);

// Toolset file: JSON array of ToolSpec with the ApiSchema embedded.
void save_toolset(const std::vector<ToolSpec>& tools, const std::string& path);
std::vector<ToolSpec> load_toolset(const std::string& path);

// Cross-checks one ToolSpec: quintuple totality plus schema validation with
// the function-name correspondence.
ValidationReport validate_tool(const ToolSpec& spec);

}  // namespace toolsim::registry
