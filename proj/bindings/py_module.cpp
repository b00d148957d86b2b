#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "toolsim/backend.hpp"
#include "toolsim/cli.hpp"
#include "toolsim/corpus.hpp"
#include "toolsim/evaluation.hpp"
#include "toolsim/registry.hpp"
#include "toolsim/simulation.hpp"

namespace py = pybind11;
using namespace toolsim;

namespace {

// json <-> Python object bridging; all bound operations speak plain dicts.
json to_json(const py::handle& obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) {
    try {
      return obj.cast<std::int64_t>();
    } catch (const py::cast_error&) {
      return obj.cast<std::uint64_t>();  // e.g. 64-bit episode seeds
    }
  }
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::tuple>(obj) || py::isinstance<py::list>(obj)) {
    json arr = json::array();
    for (const auto& item : obj) arr.push_back(to_json(item));
    return arr;
  }
  if (py::isinstance<py::dict>(obj)) {
    json out = json::object();
    for (const auto& item : obj.cast<py::dict>()) {
      out[py::str(item.first).cast<std::string>()] = to_json(item.second);
    }
    return out;
  }
  throw py::type_error("unsupported value type for JSON conversion");
}

py::object to_py(const json& value) {
  switch (value.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(value.get<bool>());
    case json::value_t::number_integer: return py::int_(value.get<std::int64_t>());
    case json::value_t::number_unsigned: return py::int_(value.get<std::uint64_t>());
    case json::value_t::number_float: return py::float_(value.get<double>());
    case json::value_t::string: return py::str(value.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& item : value) out.append(to_py(item));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (const auto& [key, item] : value.items()) out[py::str(key)] = to_py(item);
      return out;
    }
    default: return py::none();
  }
}

json move_to_json(const agents::AssistantMove& move) {
  if (move.kind == agents::AssistantMove::Kind::act) {
    return {{"kind", "act"},
            {"thought", move.thought},
            {"function_name", move.function_name},
            {"input_parameters", move.input_parameters}};
  }
  return {{"kind", "finish"}, {"thought", move.thought}, {"final_response", move.final_response}};
}

agents::AssistantMove move_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "act") {
    return agents::AssistantMove::act(j.value("thought", ""),
                                      j.at("function_name").get<std::string>(),
                                      j.value("input_parameters", json::object()));
  }
  if (kind == "finish") {
    return agents::AssistantMove::finish(j.value("thought", ""),
                                         j.at("final_response").get<std::string>());
  }
  throw std::runtime_error("move kind must be act or finish");
}

std::vector<sim::ToolUseInstance> instances_from_py(const py::list& raw) {
  std::vector<sim::ToolUseInstance> instances;
  for (const auto& item : raw) instances.push_back(sim::instance_from_json(to_json(item)));
  return instances;
}

py::list instances_to_py(const std::vector<sim::ToolUseInstance>& instances) {
  py::list out;
  for (const auto& instance : instances) out.append(to_py(sim::instance_to_json(instance)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tool-use corpus generation and evaluation toolkit";
  m.attr("__version__") = "0.1.0";

  m.def("prompt_digest",
        [](const std::string& role, const std::string& prompt) {
          return prompt_digest(role, prompt);
        },
        py::arg("role"), py::arg("prompt"),
        "Fixture key: digest of (role, trailing-whitespace-normalized prompt).");

  m.def("parse_react_block",
        [](const std::string& text) -> py::object {
          const auto result = agents::parse_react_block(text);
          if (const auto* failure = std::get_if<agents::ReactParseFailure>(&result)) {
            return to_py(json{{"kind", "failure"},
                              {"rule", failure->rule},
                              {"offset", failure->offset}});
          }
          return to_py(move_to_json(std::get<agents::AssistantMove>(result)));
        },
        py::arg("text"),
        "Parse one assistant turn; returns an act/finish dict or a failure dict.");

  m.def("render_react_block",
        [](const py::dict& move) {
          return agents::render_react_block(move_from_json(to_json(move)));
        },
        py::arg("move"), "Render an act/finish dict back to ReAct text.");

  m.def("validate_schema",
        [](const py::dict& schema, const std::vector<std::string>& expected_operation_ids) {
          const auto report = registry::validate_schema(
              registry::schema_from_openapi_json(to_json(schema)), expected_operation_ids);
          json violations = json::array();
          for (const auto& v : report.violations) {
            violations.push_back({{"code", v.code}, {"message", v.message}});
          }
          return to_py(violations);
        },
        py::arg("schema"), py::arg("expected_operation_ids") = std::vector<std::string>{},
        "Structural violations of an OpenAPI-style document, empty when clean.");

  m.def("is_textual_only",
        [](const py::dict& schema) {
          const auto check =
              registry::is_textual_only(registry::schema_from_openapi_json(to_json(schema)));
          return to_py(json{{"textual_only", check.textual_only}, {"reason", check.reason}});
        },
        py::arg("schema"));

  m.def("executor_validate",
        [](const py::dict& move, const py::dict& schema) -> py::object {
          const auto result =
              agents::executor_validate(move_from_json(to_json(move)),
                                        registry::schema_from_openapi_json(to_json(schema)));
          if (!result) return py::none();
          return to_py(agents::executor_result_to_json(*result));
        },
        py::arg("move"), py::arg("schema"),
        "None when the call is well-formed, else the error observation.");

  m.def("filter_instances",
        [](const py::list& raw, const py::dict& rules, const py::dict& tool_functions) {
          corpus::FilterRules parsed_rules;
          const json r = to_json(rules);
          parsed_rules.max_steps_kept = r.value("max_steps_kept", parsed_rules.max_steps_kept);
          parsed_rules.require_relevant_call =
              r.value("require_relevant_call", parsed_rules.require_relevant_call);
          parsed_rules.drop_parse_errors =
              r.value("drop_parse_errors", parsed_rules.drop_parse_errors);

          corpus::ToolFunctions functions;
          const json functions_json = to_json(tool_functions);
          for (const auto& [tool, names] : functions_json.items()) {
            for (const auto& name : names) functions[tool].insert(name.get<std::string>());
          }

          corpus::RejectionReport report;
          const auto kept =
              corpus::filter_instances(instances_from_py(raw), parsed_rules, functions, &report);
          return py::make_tuple(instances_to_py(kept), to_py(report.to_json()));
        },
        py::arg("instances"), py::arg("rules") = py::dict(),
        py::arg("tool_functions") = py::dict(),
        "Apply the corpus quality rules; returns (kept, rejection_report).");

  m.def("compute_stats",
        [](const py::list& raw, const py::dict& tool_info) {
          corpus::ToolInfoMap info;
          const json info_json = to_json(tool_info);
          for (const auto& [tool, entry] : info_json.items()) {
            info[tool] = corpus::ToolInfo{entry.value("category", ""),
                                          entry.value("function_count", std::size_t{0})};
          }
          return to_py(corpus::compute_stats(instances_from_py(raw), info).to_json());
        },
        py::arg("instances"), py::arg("tool_info") = py::dict());

  m.def("subsample_by_toolcount",
        [](const py::list& raw, const std::vector<std::size_t>& tool_counts, std::size_t total,
           std::uint64_t seed) {
          const auto subs = corpus::subsample_by_toolcount(instances_from_py(raw), tool_counts,
                                                           total, seed);
          py::list out;
          for (const auto& sub : subs) out.append(instances_to_py(sub));
          return out;
        },
        py::arg("instances"), py::arg("tool_counts"), py::arg("total_instances"),
        py::arg("seed") = 0);

  m.def("score_structured",
        [](const py::dict& predicted, const py::dict& gold) {
          eval::GoldRecord record;
          const json g = to_json(gold);
          record.tool_name = g.value("tool_name", "");
          record.instruction = g.value("instruction", "");
          record.final_answer = g.value("final_answer", "");
          if (g.contains("actions")) {
            for (const auto& a : g.at("actions")) {
              record.actions.push_back({a.at("function_name").get<std::string>(),
                                        a.value("parameters", json::object())});
            }
          }
          const auto c =
              eval::score_structured(sim::instance_from_json(to_json(predicted)), record);
          return to_py(json{{"thought", c.thought},
                            {"action", c.action},
                            {"args", c.args},
                            {"instance", c.instance}});
        },
        py::arg("predicted"), py::arg("gold"));

  m.def("canonicalize_params",
        [](const py::object& value) { return to_py(eval::canonicalize_params(to_json(value))); },
        py::arg("value"));

  m.def("render_instance_transcript",
        [](const py::dict& instance) {
          return sim::render_instance_transcript(sim::instance_from_json(to_json(instance)));
        },
        py::arg("instance"));

  m.def("load_corpus",
        [](const std::string& path, bool lenient) {
          std::vector<corpus::LineDiagnostic> diagnostics;
          const corpus::Corpus loaded = corpus::deserialize(path, lenient, &diagnostics);
          json diags = json::array();
          for (const auto& d : diagnostics) {
            diags.push_back({{"line_number", d.line_number}, {"message", d.message}});
          }
          py::dict out;
          out["config_digest"] = loaded.config_digest;
          out["instances"] = instances_to_py(loaded.instances);
          out["diagnostics"] = to_py(diags);
          return out;
        },
        py::arg("path"), py::arg("lenient") = false);

  m.def("save_corpus",
        [](const py::list& raw, const std::string& path, const std::string& config_digest) {
          corpus::Corpus c;
          c.config_digest = config_digest;
          c.instances = instances_from_py(raw);
          corpus::serialize(c, path);
        },
        py::arg("instances"), py::arg("path"), py::arg("config_digest") = "");

  m.def("run_cli",
        [](const std::vector<std::string>& args) { return cli::dispatch(args); },
        py::arg("args"), "Run one CLI subcommand in-process; returns the exit code.");
}
