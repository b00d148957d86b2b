#include "toolsim/executor.hpp"

#include <cctype>
#include <stdexcept>

#include <httplib.h>

namespace toolsim::agents {

std::string to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::none: return "none";
    case ErrorKind::invalid_action: return "invalid_action";
    case ErrorKind::parse_error: return "parse_error";
    case ErrorKind::parameter_error: return "parameter_error";
    case ErrorKind::simulated_server_error: return "simulated_server_error";
  }
  return "none";
}

ErrorKind error_kind_from_string(const std::string& s) {
  if (s == "none") return ErrorKind::none;
  if (s == "invalid_action") return ErrorKind::invalid_action;
  if (s == "parse_error") return ErrorKind::parse_error;
  if (s == "parameter_error") return ErrorKind::parameter_error;
  if (s == "simulated_server_error") return ErrorKind::simulated_server_error;
  throw std::runtime_error("unknown error kind: " + s);
}

json executor_result_to_json(const ExecutorResult& result) {
  return {{"status_code", result.status_code},
          {"body", result.body},
          {"error_kind", to_string(result.error_kind)}};
}

ExecutorResult executor_result_from_json(const json& j) {
  ExecutorResult result;
  result.status_code = j.at("status_code").get<int>();
  result.body = j.at("body").get<std::string>();
  result.error_kind = error_kind_from_string(j.at("error_kind").get<std::string>());
  return result;
}

json action_record_to_json(const ActionRecord& record) {
  return {{"thought", record.thought},
          {"function_name", record.function_name},
          {"input_parameters", record.input_parameters},
          {"observation", executor_result_to_json(record.observation)}};
}

ActionRecord action_record_from_json(const json& j) {
  ActionRecord record;
  record.thought = j.at("thought").get<std::string>();
  record.function_name = j.at("function_name").get<std::string>();
  record.input_parameters = j.at("input_parameters");
  record.observation = executor_result_from_json(j.at("observation"));
  return record;
}

namespace {

bool json_type_matches(const std::string& token, const json& value) {
  if (token == "string") return value.is_string();
  if (token == "integer") return value.is_number_integer();
  if (token == "number") return value.is_number();
  if (token == "boolean") return value.is_boolean();
  if (token == "array") return value.is_array();
  if (token == "object") return value.is_object();
  return false;  // unknown tokens never match; schemas should be validated first
}

}  // namespace

std::optional<ExecutorResult> executor_validate(const AssistantMove& move,
                                                const registry::ApiSchema& schema) {
  if (move.kind != AssistantMove::Kind::act) {
    throw std::invalid_argument("executor_validate expects an act move");
  }

  const registry::Operation* op = schema.find_operation(move.function_name);
  if (!op) {
    return ExecutorResult{404, "no operation named " + move.function_name,
                          ErrorKind::invalid_action};
  }

  const json& params = move.input_parameters;
  for (const auto& decl : op->parameters) {
    if (decl.required && !params.contains(decl.name)) {
      return ExecutorResult{400, "missing required parameter '" + decl.name + "'",
                            ErrorKind::parameter_error};
    }
  }
  for (const auto& [key, value] : params.items()) {
    const registry::ParamDecl* decl = nullptr;
    for (const auto& d : op->parameters) {
      if (d.name == key) {
        decl = &d;
        break;
      }
    }
    if (!decl) {
      return ExecutorResult{400, "unknown parameter '" + key + "'", ErrorKind::parameter_error};
    }
    if (!decl->type.empty() && !json_type_matches(decl->type, value)) {
      return ExecutorResult{400,
                            "parameter '" + key + "' expected " + decl->type + ", got " +
                                std::string(value.type_name()),
                            ErrorKind::parameter_error};
    }
  }
  return std::nullopt;
}

namespace {

// Leading "Status Code: <n>" tag of a simulated execution, then an optional
// "Response:" label.
ExecutorResult parse_simulated_result(const std::string& text, std::vector<std::string>* warnings) {
  ExecutorResult result;
  std::string body = trim(text);

  const std::string tag = "Status Code:";
  if (body.rfind(tag, 0) == 0) {
    std::size_t i = tag.size();
    while (i < body.size() && body[i] == ' ') ++i;
    std::size_t start = i;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i]))) ++i;
    if (i > start) {
      result.status_code = std::stoi(body.substr(start, i - start));
      body = trim(body.substr(i));
      const std::string response_tag = "Response:";
      if (body.rfind(response_tag, 0) == 0) {
        body = trim(body.substr(response_tag.size()));
      }
    } else {
      result.status_code = 200;
      if (warnings) warnings->push_back("simulated result has no status code; assuming 200");
    }
  } else {
    result.status_code = 200;
    if (warnings) warnings->push_back("simulated result has no status code; assuming 200");
  }

  result.body = body;
  if (!result.ok()) result.error_kind = ErrorKind::simulated_server_error;
  return result;
}

std::string value_as_text(const json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

}  // namespace

std::string url_encode(const std::string& value) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : value) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

AssembledRequest assemble_request(const AssistantMove& move, const registry::ApiSchema& schema,
                                  const LiveConfig& live) {
  const registry::Operation* op = schema.find_operation(move.function_name);
  if (!op) throw std::runtime_error("assemble_request: unknown operation " + move.function_name);

  AssembledRequest request;
  request.method = op->method;
  request.headers = live.extra_headers;

  std::string path = op->path;
  std::string query;
  json body = json::object();

  for (const auto& decl : op->parameters) {
    if (!move.input_parameters.contains(decl.name)) continue;
    const json& value = move.input_parameters.at(decl.name);
    switch (decl.location) {
      case registry::ParamLocation::path: {
        const std::string placeholder = "{" + decl.name + "}";
        const std::size_t pos = path.find(placeholder);
        if (pos != std::string::npos) {
          path.replace(pos, placeholder.size(), url_encode(value_as_text(value)));
        }
        break;
      }
      case registry::ParamLocation::query:
        query += query.empty() ? "?" : "&";
        query += url_encode(decl.name) + "=" + url_encode(value_as_text(value));
        break;
      case registry::ParamLocation::header:
        request.headers[decl.name] = value_as_text(value);
        break;
      case registry::ParamLocation::body:
        body[decl.name] = value;
        break;
    }
  }

  request.url = schema.base_url + path + query;
  if (!body.empty()) request.body = body.dump();
  return request;
}

namespace {

ExecutorResult execute_live(const AssistantMove& move, const registry::ApiSchema& schema,
                            const LiveConfig& live) {
  bool allowed = false;
  for (const auto& prefix : live.allowed_base_urls) {
    if (!prefix.empty() && schema.base_url.rfind(prefix, 0) == 0) {
      allowed = true;
      break;
    }
  }
  if (!allowed) {
    return ExecutorResult{403, "base URL not in allowlist: " + schema.base_url,
                          ErrorKind::invalid_action};
  }

  const AssembledRequest assembled = assemble_request(move, schema, live);

  // split scheme://host:port from the path part
  std::size_t scheme_end = assembled.url.find("://");
  std::size_t path_start = scheme_end == std::string::npos
                               ? assembled.url.find('/')
                               : assembled.url.find('/', scheme_end + 3);
  const std::string origin =
      path_start == std::string::npos ? assembled.url : assembled.url.substr(0, path_start);
  const std::string target =
      path_start == std::string::npos ? "/" : assembled.url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(live.timeout_seconds);
  client.set_read_timeout(live.timeout_seconds);

  httplib::Headers headers;
  for (const auto& [k, v] : assembled.headers) headers.emplace(k, v);

  httplib::Result res;
  if (assembled.method == "get") {
    res = client.Get(target, headers);
  } else if (assembled.method == "post") {
    res = client.Post(target, headers, assembled.body, "application/json");
  } else if (assembled.method == "put") {
    res = client.Put(target, headers, assembled.body, "application/json");
  } else if (assembled.method == "delete") {
    res = client.Delete(target, headers);
  } else if (assembled.method == "patch") {
    res = client.Patch(target, headers, assembled.body, "application/json");
  } else {
    return ExecutorResult{400, "unsupported method " + assembled.method, ErrorKind::invalid_action};
  }

  if (!res) {
    return ExecutorResult{503, "network failure reaching " + origin,
                          ErrorKind::simulated_server_error};
  }

  ExecutorResult result;
  result.status_code = res->status;
  result.body = res->body;
  if (!result.ok()) result.error_kind = ErrorKind::simulated_server_error;
  return result;
}

}  // namespace

ExecutorResult executor_execute(const AssistantMove& move, const registry::ApiSchema& schema,
                                ExecutionMode mode, llm::Backend& backend,
                                const PromptCatalog& prompts, const LiveConfig& live,
                                std::vector<std::string>* warnings) {
  if (move.kind != AssistantMove::Kind::act) {
    throw std::invalid_argument("executor_execute expects an act move");
  }

  if (mode == ExecutionMode::live) {
    return execute_live(move, schema, live);
  }

  llm::CompletionRequest request;
  request.role = llm::Role::executor_agent;
  request.sampling = llm::default_sampling(request.role);
  request.prompt = prompts.render(
      "executor", {{"openapi", registry::schema_to_openapi_json(schema).dump(2)},
                   {"function", move.function_name},
                   {"parameters", move.input_parameters.dump()}});

  const std::string text = backend.complete(request);
  return parse_simulated_result(text, warnings);
}

}  // namespace toolsim::agents
