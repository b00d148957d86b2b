#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolsim/backend.hpp"
#include "toolsim/openapi.hpp"
#include "toolsim/prompts.hpp"
#include "toolsim/react.hpp"

namespace toolsim::agents {

enum class ErrorKind { none, invalid_action, parse_error, parameter_error, simulated_server_error };

std::string to_string(ErrorKind kind);
ErrorKind error_kind_from_string(const std::string& s);

struct ExecutorResult {
  int status_code = 200;
  std::string body;
  ErrorKind error_kind = ErrorKind::none;

  bool ok() const { return status_code >= 200 && status_code < 300; }

  bool operator==(const ExecutorResult&) const = default;
};

json executor_result_to_json(const ExecutorResult& result);
ExecutorResult executor_result_from_json(const json& j);

// One (thought, function, parameters, observation) step.
struct ActionRecord {
  std::string thought;
  std::string function_name;
  json input_parameters = json::object();
  ExecutorResult observation;

  bool operator==(const ActionRecord&) const = default;
};

json action_record_to_json(const ActionRecord& record);
ActionRecord action_record_from_json(const json& j);

// Format and parameter checks against the schema. nullopt means the call is
// well-formed; otherwise the result carries invalid_action (404, unknown
// operation) or parameter_error (400, missing/unknown/mistyped parameter).
// Type checks are shallow: JSON type against the declared schema-type token.
std::optional<ExecutorResult> executor_validate(const AssistantMove& move,
                                                const registry::ApiSchema& schema);

enum class ExecutionMode { simulate, live };

struct LiveConfig {
  std::vector<std::string> allowed_base_urls;  // prefix allowlist
  std::map<std::string, std::string> extra_headers;  // static header injection
  int timeout_seconds = 15;
};

// Runs a validated act move. simulate: asks the executor-role model and
// parses the leading "Status Code: <n>" tag (assumed 200, with a warning,
// when absent). live: assembles the HTTP request per the schema's parameter
// placement; network failure maps to a 503 simulated_server_error so the
// episode stays recordable.
ExecutorResult executor_execute(const AssistantMove& move, const registry::ApiSchema& schema,
                                ExecutionMode mode, llm::Backend& backend,
                                const PromptCatalog& prompts, const LiveConfig& live = {},
                                std::vector<std::string>* warnings = nullptr);

// Request assembly, exposed for tests: substitutes path parameters, builds
// the query string, collects body parameters and headers.
struct AssembledRequest {
  std::string method;
  std::string url;  // base + path with substitutions + query string
  std::string body;
  std::map<std::string, std::string> headers;
};

AssembledRequest assemble_request(const AssistantMove& move, const registry::ApiSchema& schema,
                                  const LiveConfig& live);

std::string url_encode(const std::string& value);

}  // namespace toolsim::agents
