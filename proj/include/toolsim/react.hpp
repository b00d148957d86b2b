#pragma once

#include <string>
#include <variant>

#include "toolsim/util.hpp"

namespace toolsim::agents {

enum class InstructionStyle { command, question, other };

std::string to_string(InstructionStyle style);
InstructionStyle instruction_style_from_string(const std::string& s);

struct Instruction {
  std::string text;
  InstructionStyle style = InstructionStyle::question;
  std::string tool_name;

  bool operator==(const Instruction&) const = default;
};

json instruction_to_json(const Instruction& instruction);
Instruction instruction_from_json(const json& j);

// One assistant turn: either a function call request (act) or the closing
// answer (finish).
struct AssistantMove {
  enum class Kind { act, finish };

  Kind kind = Kind::finish;
  std::string thought;
  std::string function_name;  // act only
  json input_parameters = json::object();  // act only
  std::string final_response;  // finish only

  static AssistantMove act(std::string thought, std::string function, json params);
  static AssistantMove finish(std::string thought, std::string response);

  bool operator==(const AssistantMove& o) const;
};

struct ReactParseFailure {
  std::string rule;    // first violated grammar rule
  std::size_t offset;  // byte offset where the violation starts
};

using ReactParseResult = std::variant<AssistantMove, ReactParseFailure>;

// Grammar: line-anchored markers `Thought:`, then either `Action:` +
// `Action Input:` (JSON object on one line) or `Final Answer:`. Lines that
// start with no marker continue the current value. `Observation:` never
// appears in assistant text; it is rejected if present. Total: every input
// yields a move or a failure, never an exception.
ReactParseResult parse_react_block(const std::string& text);

// Serialization inverse of the parser: parse(render(m)) == m for moves whose
// field values contain no marker-prefixed lines.
std::string render_react_block(const AssistantMove& move);

// Reserved pseudo-function the assistant uses to address the user.
inline constexpr const char* kAskUserFunction = "ask_user";

bool is_ask_user(const AssistantMove& move);

}  // namespace toolsim::agents
