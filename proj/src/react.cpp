#include "toolsim/react.hpp"

#include <stdexcept>

namespace toolsim::agents {

std::string to_string(InstructionStyle style) {
  switch (style) {
    case InstructionStyle::command: return "command";
    case InstructionStyle::question: return "question";
    case InstructionStyle::other: return "other";
  }
  return "other";
}

InstructionStyle instruction_style_from_string(const std::string& s) {
  if (s == "command") return InstructionStyle::command;
  if (s == "question") return InstructionStyle::question;
  if (s == "other") return InstructionStyle::other;
  throw std::runtime_error("unknown instruction style: " + s);
}

json instruction_to_json(const Instruction& instruction) {
  return {{"text", instruction.text},
          {"style", to_string(instruction.style)},
          {"tool_name", instruction.tool_name}};
}

Instruction instruction_from_json(const json& j) {
  Instruction instruction;
  instruction.text = j.at("text").get<std::string>();
  instruction.style = instruction_style_from_string(j.at("style").get<std::string>());
  instruction.tool_name = j.value("tool_name", "");
  return instruction;
}

AssistantMove AssistantMove::act(std::string thought, std::string function, json params) {
  AssistantMove move;
  move.kind = Kind::act;
  move.thought = std::move(thought);
  move.function_name = std::move(function);
  move.input_parameters = std::move(params);
  return move;
}

AssistantMove AssistantMove::finish(std::string thought, std::string response) {
  AssistantMove move;
  move.kind = Kind::finish;
  move.thought = std::move(thought);
  move.final_response = std::move(response);
  return move;
}

bool AssistantMove::operator==(const AssistantMove& o) const {
  if (kind != o.kind || thought != o.thought) return false;
  if (kind == Kind::act) {
    return function_name == o.function_name && input_parameters == o.input_parameters;
  }
  return final_response == o.final_response;
}

bool is_ask_user(const AssistantMove& move) {
  return move.kind == AssistantMove::Kind::act && move.function_name == kAskUserFunction;
}

namespace {

constexpr const char* kThought = "Thought:";
constexpr const char* kAction = "Action:";
constexpr const char* kActionInput = "Action Input:";
constexpr const char* kFinalAnswer = "Final Answer:";
constexpr const char* kObservation = "Observation:";

struct Line {
  std::string text;
  std::size_t offset;  // byte offset of the line start in the original text
};

std::vector<Line> split_lines(const std::string& text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      std::string line = text.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back({std::move(line), start});
      start = i + 1;
    }
  }
  return lines;
}

bool starts_with(const std::string& line, const char* marker) {
  return line.rfind(marker, 0) == 0;
}

bool is_marker_line(const std::string& line) {
  return starts_with(line, kThought) || starts_with(line, kAction) ||
         starts_with(line, kActionInput) || starts_with(line, kFinalAnswer) ||
         starts_with(line, kObservation);
}

// Value after a marker: one space following the colon is part of the marker.
std::string marker_value(const std::string& line, const char* marker) {
  std::string rest = line.substr(std::string(marker).size());
  if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
  return rest;
}

}  // namespace

ReactParseResult parse_react_block(const std::string& raw) {
  const std::string text = rtrim(raw);
  if (text.empty()) return ReactParseFailure{"empty assistant text", 0};

  const std::vector<Line> lines = split_lines(text);
  std::size_t i = 0;
  while (i < lines.size() && trim(lines[i].text).empty()) ++i;
  if (i == lines.size()) return ReactParseFailure{"empty assistant text", 0};

  if (!starts_with(lines[i].text, kThought)) {
    return ReactParseFailure{"expected Thought marker on the first line", lines[i].offset};
  }

  // Thought value plus continuation lines.
  std::string thought = marker_value(lines[i].text, kThought);
  ++i;
  while (i < lines.size() && !is_marker_line(lines[i].text)) {
    thought += '\n';
    thought += lines[i].text;
    ++i;
  }

  if (i == lines.size()) {
    return ReactParseFailure{"missing Action or Final Answer after Thought", text.size()};
  }

  const Line& branch = lines[i];
  if (starts_with(branch.text, kObservation)) {
    return ReactParseFailure{"Observation marker is not assistant output", branch.offset};
  }
  if (starts_with(branch.text, kThought)) {
    return ReactParseFailure{"duplicate Thought marker", branch.offset};
  }
  if (starts_with(branch.text, kActionInput)) {
    return ReactParseFailure{"Action Input before Action", branch.offset};
  }

  if (starts_with(branch.text, kFinalAnswer)) {
    std::string response = marker_value(branch.text, kFinalAnswer);
    ++i;
    while (i < lines.size() && !is_marker_line(lines[i].text)) {
      response += '\n';
      response += lines[i].text;
      ++i;
    }
    if (i != lines.size()) {
      return ReactParseFailure{"unexpected marker after Final Answer", lines[i].offset};
    }
    if (trim(response).empty()) {
      return ReactParseFailure{"empty Final Answer", branch.offset};
    }
    return AssistantMove::finish(std::move(thought), std::move(response));
  }

  // Action branch.
  const std::string function_name = trim(marker_value(branch.text, kAction));
  if (function_name.empty()) {
    return ReactParseFailure{"empty function name after Action", branch.offset};
  }
  ++i;
  if (i == lines.size()) {
    return ReactParseFailure{"missing Action Input after Action", text.size()};
  }
  if (!starts_with(lines[i].text, kActionInput)) {
    return ReactParseFailure{"expected Action Input after Action", lines[i].offset};
  }

  const std::string params_text = marker_value(lines[i].text, kActionInput);
  json params;
  try {
    params = json::parse(params_text);
  } catch (const json::exception&) {
    return ReactParseFailure{"Action Input is not valid JSON on one line", lines[i].offset};
  }
  if (!params.is_object()) {
    return ReactParseFailure{"Action Input is not a JSON object", lines[i].offset};
  }
  ++i;
  for (; i < lines.size(); ++i) {
    if (!trim(lines[i].text).empty()) {
      return ReactParseFailure{"unexpected content after Action Input", lines[i].offset};
    }
  }
  return AssistantMove::act(std::move(thought), function_name, std::move(params));
}

std::string render_react_block(const AssistantMove& move) {
  std::string out = "Thought: " + move.thought;
  if (move.kind == AssistantMove::Kind::act) {
    out += "\nAction: " + move.function_name;
    out += "\nAction Input: " + move.input_parameters.dump();
  } else {
    out += "\nFinal Answer: " + move.final_response;
  }
  return out;
}

}  // namespace toolsim::agents
