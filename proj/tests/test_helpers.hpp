#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <thread>

#include "toolsim/backend.hpp"
#include "toolsim/registry.hpp"
#include "toolsim/simulation.hpp"

namespace toolsim::test {

// Backend driven by a plain function, for scripting behaviors in tests.
class FnBackend : public llm::Backend {
 public:
  using Fn = std::function<std::string(const llm::CompletionRequest&)>;

  explicit FnBackend(Fn fn, llm::BackendConfig config = llm::ScriptedBackend::scripted_config())
      : Backend(std::move(config)), fn_(std::move(fn)) {}

  std::string id() const override { return "fn-backend"; }

  std::size_t calls() const { return calls_.load(); }

 protected:
  std::string complete_raw(const llm::CompletionRequest& request) override {
    ++calls_;
    return fn_(request);
  }

  void backoff_sleep(int) override {}  // tests never wait

 private:
  Fn fn_;
  std::atomic<std::size_t> calls_{0};
};

inline void add_fixture(llm::FixtureMap& fixtures, llm::Role role, const std::string& prompt,
                        const std::string& response) {
  fixtures[{llm::to_string(role), prompt_digest(llm::to_string(role), prompt)}] = response;
}

inline registry::Operation& find_operation(registry::ApiSchema& schema, const std::string& id) {
  for (auto& op : schema.operations) {
    if (op.operation_id == id) return op;
  }
  throw std::runtime_error("test schema has no operation " + id);
}

// Small public-holidays API shared across the suites.
inline registry::ApiSchema holiday_schema() {
  return registry::schema_from_openapi_json(json::parse(R"({
    "openapi": "3.0.0",
    "servers": [{"url": "https://api.example.com"}],
    "paths": {
      "/holidays/{country}": {
        "get": {
          "operationId": "getHolidays",
          "parameters": [
            {"name": "country", "in": "path", "required": true, "schema": {"type": "string"}},
            {"name": "year", "in": "query", "required": true, "schema": {"type": "integer"}}
          ],
          "responses": {"200": {"description": "ok", "content": {"application/json": {}}}}
        }
      },
      "/holidays/search": {
        "get": {
          "operationId": "searchHolidays",
          "parameters": [
            {"name": "query", "in": "query", "required": true, "schema": {"type": "string"}},
            {"name": "country", "in": "query", "required": false, "schema": {"type": "string"}}
          ],
          "responses": {"200": {"description": "ok", "content": {"application/json": {}}}}
        }
      },
      "/holidays/detail/{holiday_id}": {
        "get": {
          "operationId": "getHolidayDetails",
          "parameters": [
            {"name": "holiday_id", "in": "path", "required": true, "schema": {"type": "string"}}
          ],
          "responses": {"200": {"description": "ok", "content": {"application/json": {}}}}
        }
      }
    }
  })"));
}

inline registry::ToolSpec holiday_tool() {
  registry::ToolSpec tool;
  tool.name = "Holiday Hub";
  tool.introduction = "Public holidays for more than 90 countries";
  tool.description =
      "Holiday Hub lists public holidays per country and year, searches them by keyword, and "
      "returns details for a single holiday.";
  tool.category = "Calendar";
  tool.functions = {
      {"getHolidays",
       "List public holidays for a country and year.",
       {{"country", "string", true, "Country name."}, {"year", "integer", true, "Calendar year."}},
       "A JSON array of holidays."},
      {"searchHolidays",
       "Search holidays by keyword.",
       {{"query", "string", true, "Keyword."}, {"country", "string", false, "Optional country."}},
       "A JSON array of matches."},
      {"getHolidayDetails",
       "Details for one holiday.",
       {{"holiday_id", "string", true, "Holiday identifier."}},
       "A JSON object."},
  };
  tool.schema = holiday_schema();
  return tool;
}

// Minimal completed instance with the given call records.
inline sim::ToolUseInstance make_instance(
    const std::string& tool, const std::string& instruction_text,
    const std::vector<std::pair<std::string, json>>& calls,
    const std::string& final_response = "done",
    sim::Outcome outcome = sim::Outcome::completed) {
  sim::ToolUseInstance instance;
  instance.tool_name = tool;
  instance.instruction = {instruction_text, agents::InstructionStyle::question, tool};
  for (const auto& [function, params] : calls) {
    agents::ActionRecord record;
    record.thought = "calling " + function;
    record.function_name = function;
    record.input_parameters = params;
    record.observation = {200, "{\"ok\": true}", agents::ErrorKind::none};
    instance.actions.push_back(std::move(record));
  }
  instance.final_thought = "all set";
  instance.final_response = final_response;
  instance.outcome = outcome;
  return instance;
}

// Unique scratch directory per test run.
inline std::filesystem::path temp_dir(const std::string& tag) {
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto path = std::filesystem::temp_directory_path() /
              ("toolsim_" + tag + "_" + std::to_string(stamp));
  std::filesystem::create_directories(path);
  return path;
}

}  // namespace toolsim::test
