// Regenerates the committed fixture pack under fixtures/pack: three toy
// tools, two instructions each, with one planted six-step episode and one
// recoverable parse error. Run from the repository root after changing
// prompt templates, then commit the refreshed pack.

#include <filesystem>
#include <iostream>
#include <map>

#include "toolsim/backend.hpp"
#include "toolsim/prompts.hpp"
#include "toolsim/registry.hpp"
#include "toolsim/simulation.hpp"

namespace fs = std::filesystem;
using namespace toolsim;

namespace {

std::string line_value(const std::string& text, const std::string& label) {
  std::size_t pos = text.find(label);
  if (pos == std::string::npos) return "";
  pos += label.size();
  const std::size_t end = text.find('\n', pos);
  return trim(text.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

json holiday_schema() {
  return {
      {"openapi", "3.0.0"},
      {"servers", json::array({{{"url", "https://api.holidayhub.example.com"}}})},
      {"paths",
       {{"/holidays/{country}",
         {{"get",
           {{"operationId", "getHolidays"},
            {"summary", "List public holidays for a country and year"},
            {"parameters",
             json::array(
                 {{{"name", "country"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}},
                  {{"name", "year"}, {"in", "query"}, {"required", true}, {"schema", {{"type", "integer"}}}}})},
            {"responses",
             {{"200", {{"description", "holiday list"}, {"content", {{"application/json", json::object()}}}}}}}}}}},
        {"/holidays/search",
         {{"get",
           {{"operationId", "searchHolidays"},
            {"summary", "Search holidays by keyword"},
            {"parameters",
             json::array(
                 {{{"name", "query"}, {"in", "query"}, {"required", true}, {"schema", {{"type", "string"}}}},
                  {{"name", "country"}, {"in", "query"}, {"required", false}, {"schema", {{"type", "string"}}}}})},
            {"responses",
             {{"200", {{"description", "matches"}, {"content", {{"application/json", json::object()}}}}}}}}}}},
        {"/holidays/detail/{holiday_id}",
         {{"get",
           {{"operationId", "getHolidayDetails"},
            {"summary", "Details for one holiday"},
            {"parameters",
             json::array({{{"name", "holiday_id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}}})},
            {"responses",
             {{"200", {{"description", "details"}, {"content", {{"application/json", json::object()}}}}}}}}}}}}}};
}

json weather_schema() {
  return {
      {"openapi", "3.0.0"},
      {"servers", json::array({{{"url", "https://api.skycast.example.com"}}})},
      {"paths",
       {{"/weather/current",
         {{"get",
           {{"operationId", "getCurrentWeather"},
            {"summary", "Current conditions for a city"},
            {"parameters",
             json::array(
                 {{{"name", "city"}, {"in", "query"}, {"required", true}, {"schema", {{"type", "string"}}}},
                  {{"name", "units"}, {"in", "query"}, {"required", false}, {"schema", {{"type", "string"}}}}})},
            {"responses",
             {{"200", {{"description", "conditions"}, {"content", {{"application/json", json::object()}}}}}}}}}}},
        {"/weather/forecast",
         {{"get",
           {{"operationId", "getForecast"},
            {"summary", "Multi-day forecast for a city"},
            {"parameters",
             json::array(
                 {{{"name", "city"}, {"in", "query"}, {"required", true}, {"schema", {{"type", "string"}}}},
                  {{"name", "days"}, {"in", "query"}, {"required", true}, {"schema", {{"type", "integer"}}}}})},
            {"responses",
             {{"200", {{"description", "forecast"}, {"content", {{"application/json", json::object()}}}}}}}}}}}}}};
}

json dictionary_schema() {
  return {
      {"openapi", "3.0.0"},
      {"servers", json::array({{{"url", "https://api.lexidefine.example.com"}}})},
      {"paths",
       {{"/define/{word}",
         {{"get",
           {{"operationId", "defineWord"},
            {"summary", "Definition of a word"},
            {"parameters",
             json::array({{{"name", "word"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}}})},
            {"responses",
             {{"200", {{"description", "definition"}, {"content", {{"application/json", json::object()}}}}}}}}}}},
        {"/synonyms/{word}",
         {{"get",
           {{"operationId", "getSynonyms"},
            {"summary", "Synonyms of a word"},
            {"parameters",
             json::array(
                 {{{"name", "word"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}},
                  {{"name", "limit"}, {"in", "query"}, {"required", false}, {"schema", {{"type", "integer"}}}}})},
            {"responses",
             {{"200", {{"description", "synonyms"}, {"content", {{"application/json", json::object()}}}}}}}}}}},
        {"/examples/{word}",
         {{"get",
           {{"operationId", "getExamples"},
            {"summary", "Usage examples for a word"},
            {"parameters",
             json::array({{{"name", "word"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}}})},
            {"responses",
             {{"200", {{"description", "examples"}, {"content", {{"application/json", json::object()}}}}}}}}}}}}}};
}

struct ToolScript {
  std::string description;
  json functions;
  json schema;
  std::string command_instruction;
  std::string question_instruction;
  // assistant turns per instruction, keyed by instruction text
};

std::map<std::string, ToolScript> make_tool_scripts() {
  std::map<std::string, ToolScript> scripts;

  scripts["Holiday Hub"] = ToolScript{
      "Holiday Hub provides public holiday data for more than 90 countries. It lists the "
      "holidays of a country for any year, searches holidays by keyword, and returns details "
      "for a single holiday. Use it whenever a task needs official holiday dates or holiday "
      "background information.",
      json::parse(R"([
        {"name": "getHolidays", "summary": "List public holidays for a country and year.",
         "parameters": [
           {"name": "country", "type": "string", "required": true, "description": "Country name or ISO code."},
           {"name": "year", "type": "integer", "required": true, "description": "Calendar year."}],
         "returns": "A JSON array of holidays with dates and names."},
        {"name": "searchHolidays", "summary": "Search holidays by keyword.",
         "parameters": [
           {"name": "query", "type": "string", "required": true, "description": "Search keyword."},
           {"name": "country", "type": "string", "required": false, "description": "Restrict results to one country."}],
         "returns": "A JSON array of matching holidays."},
        {"name": "getHolidayDetails", "summary": "Details for one holiday.",
         "parameters": [
           {"name": "holiday_id", "type": "string", "required": true, "description": "Holiday identifier."}],
         "returns": "A JSON object describing the holiday."}
      ])"),
      holiday_schema(),
      "Find holidays related to lanterns.",
      "What are the public holidays in Japan in 2024?",
  };

  scripts["SkyCast Weather"] = ToolScript{
      "SkyCast Weather reports real-time weather conditions and multi-day forecasts for any "
      "city in the world. It answers questions about current temperature and conditions, and "
      "produces short-range forecasts for trip planning. Use it whenever a task depends on the "
      "weather.",
      json::parse(R"([
        {"name": "getCurrentWeather", "summary": "Current conditions for a city.",
         "parameters": [
           {"name": "city", "type": "string", "required": true, "description": "City name."},
           {"name": "units", "type": "string", "required": false, "description": "metric or imperial."}],
         "returns": "A JSON object with temperature and conditions."},
        {"name": "getForecast", "summary": "Multi-day forecast for a city.",
         "parameters": [
           {"name": "city", "type": "string", "required": true, "description": "City name."},
           {"name": "days", "type": "integer", "required": true, "description": "Number of days ahead."}],
         "returns": "A JSON object with daily highs and lows."}
      ])"),
      weather_schema(),
      "Compare the 3-day forecasts for Oslo, Bergen, Trondheim, Stavanger, and Tromso, and "
      "tell me which city will be warmest.",
      "What's the current weather in Reykjavik?",
  };

  scripts["LexiDefine"] = ToolScript{
      "LexiDefine is an English dictionary service with definitions, synonyms, and usage "
      "examples. It explains what a word means, lists close synonyms, and shows the word used "
      "in real sentences. Use it for vocabulary questions and writing help.",
      json::parse(R"([
        {"name": "defineWord", "summary": "Definition of a word.",
         "parameters": [
           {"name": "word", "type": "string", "required": true, "description": "The word to define."}],
         "returns": "A JSON object with the definition and part of speech."},
        {"name": "getSynonyms", "summary": "Synonyms of a word.",
         "parameters": [
           {"name": "word", "type": "string", "required": true, "description": "The word to look up."},
           {"name": "limit", "type": "integer", "required": false, "description": "Maximum number of synonyms."}],
         "returns": "A JSON array of synonyms."},
        {"name": "getExamples", "summary": "Usage examples for a word.",
         "parameters": [
           {"name": "word", "type": "string", "required": true, "description": "The word to illustrate."}],
         "returns": "A JSON array of example sentences."}
      ])"),
      dictionary_schema(),
      "Give me three synonyms for 'luminous' and use one in a sentence.",
      "What does the word 'petrichor' mean?",
  };

  return scripts;
}

// Assistant turn scripts per instruction text.
std::map<std::string, std::vector<std::string>> make_assistant_scripts() {
  std::map<std::string, std::vector<std::string>> turns;

  turns["Find holidays related to lanterns."] = {
      "Thought: The user wants lantern holidays but did not say which country to search.\n"
      "Action: ask_user\n"
      "Action Input: {\"question\": \"Which country should I search in?\"}",
      "Thought: The user wants Thailand, so I can search for lantern holidays there.\n"
      "Action: searchHolidays\n"
      "Action Input: {\"country\": \"Thailand\", \"query\": \"lantern\"}",
      "Thought: The search returned the lantern festivals.\n"
      "Final Answer: Thailand has two lantern-related holidays: Yi Peng, celebrated around "
      "Chiang Mai, and Loy Krathong, observed nationwide; both fall in November.",
  };

  turns["What are the public holidays in Japan in 2024?"] = {
      "Thought: I need to get the list of holidays in Japan for 2024.\n"
      "Action: getHolidays\n"
      "Action Input: {\"country\": \"Japan\", \"year\": 2024}",
      "Thought: I have the holiday list for Japan in 2024.\n"
      "Final Answer: The list of holidays in Japan for 2024 includes New Year's Day on January "
      "1, Coming of Age Day on January 8, and Showa Day on April 29.",
  };

  const std::vector<std::string> cities = {"Oslo", "Bergen", "Trondheim", "Stavanger", "Tromso"};
  std::vector<std::string> weather_turns;
  for (const auto& city : cities) {
    weather_turns.push_back("Thought: I need the 3-day forecast for " + city + ".\n"
                            "Action: getForecast\n"
                            "Action Input: {\"city\": \"" + city + "\", \"days\": 3}");
  }
  weather_turns.push_back(
      "Thought: Oslo has the highest forecast high; I will double-check its current "
      "conditions before answering.\n"
      "Action: getCurrentWeather\n"
      "Action Input: {\"city\": \"Oslo\"}");
  weather_turns.push_back(
      "Thought: Oslo leads every other city in the forecasts.\n"
      "Final Answer: Oslo will be the warmest of the five cities over the next three days, "
      "with highs near 18 degrees Celsius; Tromso will be the coldest at around 8 degrees.");
  turns["Compare the 3-day forecasts for Oslo, Bergen, Trondheim, Stavanger, and Tromso, and "
        "tell me which city will be warmest."] = weather_turns;

  turns["What's the current weather in Reykjavik?"] = {
      "Thought: I need the current conditions for Reykjavik.\n"
      "Action: getCurrentWeather\n"
      "Action Input: {\"city\": \"Reykjavik\"}",
      "Thought: I have the current conditions.\n"
      "Final Answer: Reykjavik is currently 11 degrees Celsius and partly cloudy.",
  };

  turns["Give me three synonyms for 'luminous' and use one in a sentence."] = {
      // deliberately malformed: no markers, so the parser records an error step
      "I should look up synonyms for luminous first and then fetch an example sentence.",
      "Thought: My last message was not in the required format, so I will retry with a proper "
      "action.\n"
      "Action: getSynonyms\n"
      "Action Input: {\"limit\": 3, \"word\": \"luminous\"}",
      "Thought: Now I need a usage example for one of the synonyms.\n"
      "Action: getExamples\n"
      "Action Input: {\"word\": \"radiant\"}",
      "Thought: I have three synonyms and an example sentence.\n"
      "Final Answer: Three synonyms for 'luminous' are radiant, glowing, and incandescent. "
      "Example: The radiant moon lit the whole harbor.",
  };

  turns["What does the word 'petrichor' mean?"] = {
      "Thought: I should look up the definition of petrichor.\n"
      "Action: defineWord\n"
      "Action Input: {\"word\": \"petrichor\"}",
      "Thought: I have the definition.\n"
      "Final Answer: Petrichor is the pleasant, earthy smell that follows the first rain after "
      "a long dry spell.",
  };

  return turns;
}

std::string executor_response(const std::string& function, const json& params) {
  if (function == "getHolidays") {
    return "Status Code: 200\nResponse: {\"holidays\": [{\"date\": \"2024-01-01\", \"name\": "
           "\"New Year's Day\"}, {\"date\": \"2024-01-08\", \"name\": \"Coming of Age Day\"}, "
           "{\"date\": \"2024-04-29\", \"name\": \"Showa Day\"}]}";
  }
  if (function == "searchHolidays") {
    return "Status Code: 200\nResponse: {\"results\": [{\"name\": \"Yi Peng\", \"region\": "
           "\"Chiang Mai\"}, {\"name\": \"Loy Krathong\", \"region\": \"nationwide\"}]}";
  }
  if (function == "getHolidayDetails") {
    return "Status Code: 200\nResponse: {\"name\": \"Loy Krathong\", \"description\": "
           "\"Festival of floating lanterns held on the full moon of the twelfth lunar "
           "month.\"}";
  }
  if (function == "getCurrentWeather") {
    const std::string city = params.value("city", "unknown");
    return "Status Code: 200\nResponse: {\"city\": \"" + city +
           "\", \"temperature_c\": 11, \"conditions\": \"partly cloudy\"}";
  }
  if (function == "getForecast") {
    static const std::map<std::string, int> highs = {
        {"Oslo", 18}, {"Bergen", 14}, {"Trondheim", 12}, {"Stavanger", 15}, {"Tromso", 8}};
    const std::string city = params.value("city", "unknown");
    auto it = highs.find(city);
    const int high = it == highs.end() ? 10 : it->second;
    return "Status Code: 200\nResponse: {\"city\": \"" + city +
           "\", \"days\": 3, \"high_c\": " + std::to_string(high) + ", \"low_c\": " +
           std::to_string(high - 7) + "}";
  }
  if (function == "defineWord") {
    return "Status Code: 200\nResponse: {\"word\": \"petrichor\", \"part_of_speech\": \"noun\", "
           "\"definition\": \"the pleasant, earthy smell that follows the first rain after a "
           "long dry spell\"}";
  }
  if (function == "getSynonyms") {
    return "Status Code: 200\nResponse: {\"synonyms\": [\"radiant\", \"glowing\", "
           "\"incandescent\"]}";
  }
  if (function == "getExamples") {
    return "Status Code: 200\nResponse: {\"examples\": [\"The radiant moon lit the whole "
           "harbor.\"]}";
  }
  return "Status Code: 404\nResponse: {\"error\": \"no such function\"}";
}

// Answers every pipeline prompt from the canned scripts above.
class PackOracle : public llm::Backend {
 public:
  PackOracle()
      : Backend(llm::ScriptedBackend::scripted_config()),
        tools_(make_tool_scripts()),
        assistant_(make_assistant_scripts()) {}

  std::string id() const override { return "pack-oracle"; }

 protected:
  std::string complete_raw(const llm::CompletionRequest& request) override {
    const std::string& prompt = request.prompt;

    if (request.role == llm::Role::doc_generator) {
      const ToolScript& tool = tools_.at(line_value(prompt, "Tool name: "));
      if (prompt.find("Expand the introduction") != std::string::npos) {
        return tool.description;
      }
      if (prompt.find("writing function documentation") != std::string::npos) {
        return "```json\n" + tool.functions.dump(2) + "\n```";
      }
      if (prompt.find("OpenAPI 3.0 specification") != std::string::npos) {
        return "```json\n" + tool.schema.dump(2) + "\n```";
      }
      throw std::runtime_error("oracle: unrecognized doc_generator prompt");
    }

    if (request.role == llm::Role::user_agent) {
      if (prompt.find("The assistant has asked you a question") != std::string::npos) {
        return "Thailand, please.";
      }
      const ToolScript& tool = tools_.at(line_value(prompt, "Tool name: "));
      if (prompt.find("Phrase each one as a question") != std::string::npos) {
        return "1. " + tool.question_instruction;
      }
      return "1. " + tool.command_instruction;
    }

    if (request.role == llm::Role::assistant_agent) {
      const std::string instruction = line_value(prompt, "Request: ");
      const auto it = assistant_.find(instruction);
      if (it == assistant_.end()) {
        throw std::runtime_error("oracle: no assistant script for: " + instruction);
      }
      // count observations in the scratchpad only; the format description
      // above the Request line also contains an Observation marker
      const std::string scratchpad = prompt.substr(prompt.find("Request: "));
      const std::size_t turn = count_occurrences(scratchpad, "\nObservation:");
      if (turn >= it->second.size()) {
        throw std::runtime_error("oracle: assistant script exhausted for: " + instruction);
      }
      return it->second[turn];
    }

    if (request.role == llm::Role::executor_agent) {
      const std::string function = line_value(prompt, "Function: ");
      const json params = json::parse(line_value(prompt, "Parameters: "));
      return executor_response(function, params);
    }

    throw std::runtime_error("oracle: unexpected role");
  }

 private:
  std::map<std::string, ToolScript> tools_;
  std::map<std::string, std::vector<std::string>> assistant_;
};

json make_seeds() {
  return json::array(
      {{{"name", "Holiday Hub"},
        {"introduction", "Public holidays for more than 90 countries"},
        {"category", "Calendar"}},
       {{"name", "SkyCast Weather"},
        {"introduction", "Real-time weather conditions and forecasts for any city"},
        {"category", "Weather"}},
       {{"name", "LexiDefine"},
        {"introduction", "Definitions, synonyms, and usage examples for English words"},
        {"category", "Dictionaries"}}});
}

json make_pipeline_config(const std::string& pack_dir) {
  return {{"seeds", pack_dir + "/seeds.json"},
          {"backend", "scripted:" + pack_dir + "/fixtures.json"},
          {"out_dir", "out/pack"},
          {"rng_seed", 7},
          {"generate",
           {{"max_steps", 8},
            {"instructions_per_tool", 2},
            {"style_mix", {{"command", 0.5}, {"question", 0.5}}},
            {"rng_seed", 7}}},
          {"filter", {{"max_steps_kept", 5}}}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string pack_dir = argc > 1 ? argv[1] : "fixtures/pack";
  fs::create_directories(pack_dir);

  const json seeds = make_seeds();
  write_file(pack_dir + "/seeds.json", seeds.dump(2) + "\n");
  write_file(pack_dir + "/pipeline.json", make_pipeline_config(pack_dir).dump(2) + "\n");

  auto oracle = std::make_shared<PackOracle>();
  auto recorder = std::make_shared<llm::RecordingBackend>(oracle);
  const PromptCatalog prompts = PromptCatalog::builtin();

  // run the exact pipeline stages so the recorded prompts match replay
  registry::CatalogReport catalog_report;
  std::vector<registry::ToolSeed> seed_list;
  for (const auto& entry : seeds) {
    seed_list.push_back({entry.at("name"), entry.at("introduction"), entry.at("category")});
  }

  registry::BuildOptions build_options;
  build_options.rng_seed = 7;
  registry::BuildReport build_report;
  const auto toolset =
      registry::build_toolset(seed_list, *recorder, prompts, build_options, &build_report);
  if (toolset.size() != 3) {
    std::cerr << "expected 3 tools, built " << toolset.size() << "\n";
    for (const auto& skipped : build_report.skipped) std::cerr << "  " << skipped << "\n";
    return 1;
  }

  sim::EpisodeConfig config;
  config.max_steps = 8;
  config.instructions_per_tool = 2;
  config.style_mix = {{agents::InstructionStyle::command, 0.5},
                      {agents::InstructionStyle::question, 0.5}};
  config.rng_seed = 7;

  const std::string scratch = pack_dir + "/.raw_scratch.jsonl";
  sim::CorpusWriter writer(scratch, sim::episode_config_digest(config));
  const sim::RunReport report =
      sim::generate_raw_corpus(toolset, config, *recorder, prompts, writer);
  fs::remove(scratch);

  if (report.total_instances != 6) {
    std::cerr << "expected 6 instances, generated " << report.total_instances << "\n";
    return 1;
  }

  recorder->save(pack_dir + "/fixtures.json");
  std::cout << "fixture pack written to " << pack_dir << " ("
            << recorder->recorded().size() << " fixtures)\n";
  return 0;
}
