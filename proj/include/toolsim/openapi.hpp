#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolsim/util.hpp"

namespace toolsim::registry {

enum class ParamLocation { path, query, header, body };

std::string to_string(ParamLocation loc);
ParamLocation param_location_from_string(const std::string& s);

// One declared parameter. `type` is kept as the raw schema-type token so
// validation can report unknown tokens instead of losing them at parse time.
struct ParamDecl {
  std::string name;
  ParamLocation location = ParamLocation::query;
  std::string type;    // string | integer | number | boolean | array | object
  std::string format;  // optional, e.g. "binary"
  bool required = false;
  std::string description;

  bool operator==(const ParamDecl&) const = default;
};

struct ResponseDecl {
  int status_code = 200;
  std::vector<std::string> media_types;
  std::string description;

  bool operator==(const ResponseDecl&) const = default;
};

struct Operation {
  std::string method;  // get | post | put | delete | patch
  std::string path;    // may contain {placeholders}
  std::string operation_id;
  std::string summary;
  std::vector<ParamDecl> parameters;
  std::vector<std::string> request_media_types;
  std::vector<ResponseDecl> responses;

  bool operator==(const Operation&) const = default;
};

// The OpenAPI subset the executor needs: server base URL plus flattened
// operations. Request-body object properties are flattened into ParamDecls
// with location=body. Vendor extensions are ignored on parse, not rejected.
struct ApiSchema {
  std::string base_url;
  std::vector<Operation> operations;

  const Operation* find_operation(const std::string& operation_id) const;

  bool operator==(const ApiSchema&) const = default;
};

// OpenAPI-style JSON document <-> ApiSchema. from_openapi_json throws
// std::runtime_error on structurally unusable documents.
ApiSchema schema_from_openapi_json(const json& doc);
json schema_to_openapi_json(const ApiSchema& schema);

// Parses the generated text of an OAS block: JSON first, then YAML.
ApiSchema schema_from_text(const std::string& text);

// Converts a YAML document to the equivalent JSON value.
json yaml_to_json(const std::string& yaml_text);

struct Violation {
  std::string code;     // unknown_type | missing_field | duplicate_operation |
                        // operation_mismatch | undeclared_path_param
  std::string message;  // human-readable, names the offending item
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Structural checks: unknown type tokens, missing required fields, duplicate
// operation ids, path placeholders without declarations. When
// expected_operation_ids is non-empty, also checks the one-to-one
// correspondence between operations and those ids. Violations are data, not
// errors.
ValidationReport validate_schema(const ApiSchema& schema,
                                 const std::vector<std::string>& expected_operation_ids = {});

struct TextualCheck {
  bool textual_only = true;
  std::string reason;  // names the offending operation and media type
};

// False iff any request/response content declares a non-textual media type
// (image/*, audio/*, video/*, application/octet-stream, application/pdf) or
// any parameter is declared binary.
TextualCheck is_textual_only(const ApiSchema& schema);

const std::vector<std::string>& known_type_tokens();

}  // namespace toolsim::registry
