#include "toolsim/openapi.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace toolsim::registry {

std::string to_string(ParamLocation loc) {
  switch (loc) {
    case ParamLocation::path: return "path";
    case ParamLocation::query: return "query";
    case ParamLocation::header: return "header";
    case ParamLocation::body: return "body";
  }
  return "query";
}

ParamLocation param_location_from_string(const std::string& s) {
  if (s == "path") return ParamLocation::path;
  if (s == "query") return ParamLocation::query;
  if (s == "header") return ParamLocation::header;
  if (s == "body") return ParamLocation::body;
  throw std::runtime_error("unknown parameter location: " + s);
}

const Operation* ApiSchema::find_operation(const std::string& operation_id) const {
  for (const auto& op : operations) {
    if (op.operation_id == operation_id) return &op;
  }
  return nullptr;
}

const std::vector<std::string>& known_type_tokens() {
  static const std::vector<std::string> tokens = {"string", "integer", "number",
                                                  "boolean", "array",   "object"};
  return tokens;
}

namespace {

const std::set<std::string>& known_methods() {
  static const std::set<std::string> methods = {"get", "post", "put", "delete", "patch"};
  return methods;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

ParamDecl param_from_json(const json& p) {
  ParamDecl decl;
  decl.name = p.value("name", "");
  decl.location = param_location_from_string(p.value("in", "query"));
  decl.required = p.value("required", false);
  decl.description = p.value("description", "");
  if (p.contains("schema") && p.at("schema").is_object()) {
    decl.type = p.at("schema").value("type", "");
    decl.format = p.at("schema").value("format", "");
  } else {
    decl.type = p.value("type", "");
    decl.format = p.value("format", "");
  }
  return decl;
}

void flatten_body_params(const json& content, Operation& op) {
  for (const auto& [media_type, media_decl] : content.items()) {
    op.request_media_types.push_back(media_type);
    if (!media_decl.is_object() || !media_decl.contains("schema")) continue;
    const json& schema = media_decl.at("schema");
    if (!schema.is_object() || schema.value("type", "") != "object" ||
        !schema.contains("properties")) {
      continue;
    }
    std::set<std::string> required;
    if (schema.contains("required") && schema.at("required").is_array()) {
      for (const auto& r : schema.at("required")) required.insert(r.get<std::string>());
    }
    for (const auto& [prop_name, prop] : schema.at("properties").items()) {
      ParamDecl decl;
      decl.name = prop_name;
      decl.location = ParamLocation::body;
      decl.required = required.count(prop_name) > 0;
      if (prop.is_object()) {
        decl.type = prop.value("type", "");
        decl.format = prop.value("format", "");
        decl.description = prop.value("description", "");
      }
      op.parameters.push_back(decl);
    }
  }
}

}  // namespace

ApiSchema schema_from_openapi_json(const json& doc) {
  if (!doc.is_object()) throw std::runtime_error("OpenAPI document is not a JSON object");

  ApiSchema schema;
  if (doc.contains("servers") && doc.at("servers").is_array() && !doc.at("servers").empty()) {
    schema.base_url = doc.at("servers")[0].value("url", "");
  }

  if (!doc.contains("paths") || !doc.at("paths").is_object()) {
    throw std::runtime_error("OpenAPI document has no paths object");
  }

  for (const auto& [path, path_item] : doc.at("paths").items()) {
    if (!path_item.is_object()) continue;
    for (const auto& [method, op_doc] : path_item.items()) {
      const std::string m = lower(method);
      if (!known_methods().count(m) || !op_doc.is_object()) continue;

      Operation op;
      op.method = m;
      op.path = path;
      op.operation_id = op_doc.value("operationId", "");
      op.summary = op_doc.value("summary", "");

      if (op_doc.contains("parameters") && op_doc.at("parameters").is_array()) {
        for (const auto& p : op_doc.at("parameters")) {
          if (p.is_object()) op.parameters.push_back(param_from_json(p));
        }
      }
      if (op_doc.contains("requestBody") && op_doc.at("requestBody").is_object() &&
          op_doc.at("requestBody").contains("content")) {
        flatten_body_params(op_doc.at("requestBody").at("content"), op);
      }
      if (op_doc.contains("responses") && op_doc.at("responses").is_object()) {
        for (const auto& [status, resp] : op_doc.at("responses").items()) {
          ResponseDecl decl;
          try {
            decl.status_code = std::stoi(status);
          } catch (...) {
            continue;  // "default" and friends are out of the subset
          }
          if (resp.is_object()) {
            decl.description = resp.value("description", "");
            if (resp.contains("content") && resp.at("content").is_object()) {
              for (const auto& [media_type, ignored] : resp.at("content").items()) {
                (void)ignored;
                decl.media_types.push_back(media_type);
              }
            }
          }
          op.responses.push_back(decl);
        }
      }
      schema.operations.push_back(std::move(op));
    }
  }
  return schema;
}

json schema_to_openapi_json(const ApiSchema& schema) {
  json paths = json::object();
  for (const auto& op : schema.operations) {
    json op_doc = {{"operationId", op.operation_id}};
    if (!op.summary.empty()) op_doc["summary"] = op.summary;

    json params = json::array();
    json body_props = json::object();
    json body_required = json::array();
    for (const auto& p : op.parameters) {
      if (p.location == ParamLocation::body) {
        json prop = {{"type", p.type}};
        if (!p.format.empty()) prop["format"] = p.format;
        if (!p.description.empty()) prop["description"] = p.description;
        body_props[p.name] = prop;
        if (p.required) body_required.push_back(p.name);
      } else {
        json schema_obj = {{"type", p.type}};
        if (!p.format.empty()) schema_obj["format"] = p.format;
        json pj = {{"name", p.name},
                   {"in", to_string(p.location)},
                   {"required", p.required},
                   {"schema", schema_obj}};
        if (!p.description.empty()) pj["description"] = p.description;
        params.push_back(pj);
      }
    }
    if (!params.empty()) op_doc["parameters"] = params;
    if (!body_props.empty()) {
      json body_schema = {{"type", "object"}, {"properties", body_props}};
      if (!body_required.empty()) body_schema["required"] = body_required;
      std::string media = op.request_media_types.empty() ? "application/json"
                                                         : op.request_media_types.front();
      op_doc["requestBody"] = {{"content", {{media, {{"schema", body_schema}}}}}};
    } else if (!op.request_media_types.empty()) {
      json content = json::object();
      for (const auto& media : op.request_media_types) content[media] = json::object();
      op_doc["requestBody"] = {{"content", content}};
    }

    json responses = json::object();
    for (const auto& r : op.responses) {
      json resp = json::object();
      if (!r.description.empty()) resp["description"] = r.description;
      if (!r.media_types.empty()) {
        json content = json::object();
        for (const auto& media : r.media_types) content[media] = json::object();
        resp["content"] = content;
      }
      responses[std::to_string(r.status_code)] = resp;
    }
    if (!responses.empty()) op_doc["responses"] = responses;

    paths[op.path][op.method] = op_doc;
  }

  return {{"openapi", "3.0.0"},
          {"servers", json::array({{{"url", schema.base_url}}})},
          {"paths", paths}};
}

json yaml_to_json(const std::string& yaml_text) {
  std::function<json(const YAML::Node&)> convert = [&](const YAML::Node& node) -> json {
    switch (node.Type()) {
      case YAML::NodeType::Null: return nullptr;
      case YAML::NodeType::Scalar: {
        // Try bool, integer, double, then fall back to string.
        const std::string& raw = node.Scalar();
        if (node.Tag() == "!") return raw;  // explicitly quoted
        if (raw == "true" || raw == "True") return true;
        if (raw == "false" || raw == "False") return false;
        if (raw == "null" || raw == "~" || raw.empty()) return nullptr;
        try {
          std::size_t used = 0;
          const long long i = std::stoll(raw, &used);
          if (used == raw.size()) return i;
        } catch (...) {
        }
        try {
          std::size_t used = 0;
          const double d = std::stod(raw, &used);
          if (used == raw.size()) return d;
        } catch (...) {
        }
        return raw;
      }
      case YAML::NodeType::Sequence: {
        json arr = json::array();
        for (const auto& item : node) arr.push_back(convert(item));
        return arr;
      }
      case YAML::NodeType::Map: {
        json obj = json::object();
        for (const auto& kv : node) obj[kv.first.as<std::string>()] = convert(kv.second);
        return obj;
      }
      default: return nullptr;
    }
  };

  YAML::Node root = YAML::Load(yaml_text);
  return convert(root);
}

ApiSchema schema_from_text(const std::string& text) {
  try {
    return schema_from_openapi_json(json::parse(text));
  } catch (const json::exception&) {
    // fall through to YAML
  }
  json doc;
  try {
    doc = yaml_to_json(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("document is neither valid JSON nor YAML: ") + e.what());
  }
  return schema_from_openapi_json(doc);
}

ValidationReport validate_schema(const ApiSchema& schema,
                                 const std::vector<std::string>& expected_operation_ids) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };

  std::set<std::string> seen_ids;
  for (const auto& op : schema.operations) {
    const std::string label = op.operation_id.empty() ? op.method + " " + op.path : op.operation_id;

    if (op.operation_id.empty()) {
      add("missing_field", "operation " + label + " has no operationId");
    } else if (!seen_ids.insert(op.operation_id).second) {
      add("duplicate_operation", "duplicate operation id " + op.operation_id);
    }
    if (op.path.empty()) add("missing_field", "operation " + label + " has no path");
    if (op.method.empty()) add("missing_field", "operation " + label + " has no method");

    std::set<std::string> path_params_declared;
    for (const auto& p : op.parameters) {
      if (p.name.empty()) {
        add("missing_field", "operation " + label + " has a parameter without a name");
        continue;
      }
      if (p.type.empty()) {
        if (p.required) {
          add("missing_field",
              "required parameter " + p.name + " of " + label + " has no schema type");
        }
      } else if (std::find(known_type_tokens().begin(), known_type_tokens().end(), p.type) ==
                 known_type_tokens().end()) {
        add("unknown_type",
            "parameter " + p.name + " of " + label + " has unknown type token '" + p.type + "'");
      }
      if (p.location == ParamLocation::path) path_params_declared.insert(p.name);
    }

    // every {placeholder} in the path needs a matching path parameter
    std::size_t pos = 0;
    while ((pos = op.path.find('{', pos)) != std::string::npos) {
      const std::size_t close = op.path.find('}', pos);
      if (close == std::string::npos) {
        add("missing_field", "operation " + label + " has an unterminated path placeholder");
        break;
      }
      const std::string placeholder = op.path.substr(pos + 1, close - pos - 1);
      if (!path_params_declared.count(placeholder)) {
        add("undeclared_path_param",
            "operation " + label + " references undeclared path parameter '" + placeholder + "'");
      }
      pos = close + 1;
    }
  }

  if (!expected_operation_ids.empty()) {
    for (const auto& id : expected_operation_ids) {
      if (!seen_ids.count(id)) {
        add("operation_mismatch", "no operation for function " + id);
      }
    }
    std::set<std::string> expected(expected_operation_ids.begin(), expected_operation_ids.end());
    for (const auto& id : seen_ids) {
      if (!expected.count(id)) {
        add("operation_mismatch", "operation " + id + " matches no function");
      }
    }
  }

  return report;
}

namespace {

bool media_type_is_binary(const std::string& media_type) {
  const std::string m = lower(media_type);
  return m.rfind("image/", 0) == 0 || m.rfind("audio/", 0) == 0 || m.rfind("video/", 0) == 0 ||
         m == "application/octet-stream" || m == "application/pdf";
}

}  // namespace

TextualCheck is_textual_only(const ApiSchema& schema) {
  for (const auto& op : schema.operations) {
    for (const auto& media : op.request_media_types) {
      if (media_type_is_binary(media)) {
        return {false, "operation " + op.operation_id + " declares request media type " + media};
      }
    }
    for (const auto& resp : op.responses) {
      for (const auto& media : resp.media_types) {
        if (media_type_is_binary(media)) {
          return {false, "operation " + op.operation_id + " declares response media type " + media};
        }
      }
    }
    for (const auto& p : op.parameters) {
      if (p.format == "binary" || p.type == "binary") {
        return {false,
                "operation " + op.operation_id + " declares binary parameter " + p.name};
      }
    }
  }
  return {true, ""};
}

}  // namespace toolsim::registry
