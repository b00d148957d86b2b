#include "toolsim/agents.hpp"

#include <cctype>
#include <stdexcept>

namespace toolsim::agents {

std::string Transcript::scratchpad() const {
  std::string out;
  for (const auto& step : steps) {
    out += step.assistant_text;
    out += "\nObservation: ";
    out += step.observation_text;
    out += "\n";
  }
  return out;
}

std::string render_observation(const ExecutorResult& result) {
  return "Status Code: " + std::to_string(result.status_code) + " Response: " + result.body;
}

namespace {

// Drops list decorations: "1.", "2)", "-", "*".
std::string strip_list_marker(const std::string& line) {
  std::string s = trim(line);
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) {
    return trim(s.substr(i + 1));
  }
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) {
    return trim(s.substr(1));
  }
  return s;
}

std::string style_template(InstructionStyle style) {
  switch (style) {
    case InstructionStyle::command: return "instruction_command";
    case InstructionStyle::question: return "instruction_question";
    case InstructionStyle::other: return "instruction_other";
  }
  return "instruction_other";
}

}  // namespace

std::vector<Instruction> user_draft_instructions(const registry::ToolSpec& tool,
                                                 InstructionStyle style, std::size_t count,
                                                 llm::Backend& backend,
                                                 const PromptCatalog& prompts,
                                                 DraftReport* report) {
  if (report) *report = DraftReport{count, 0};
  if (count == 0) return {};

  llm::CompletionRequest request;
  request.role = llm::Role::user_agent;
  request.sampling = llm::default_sampling(request.role);
  request.prompt = prompts.render(
      style_template(style),
      {{"name", tool.name},
       {"description", tool.description},
       {"function_docs", registry::render_function_docs(tool.functions)},
       {"count", std::to_string(count)}});

  const std::string text = backend.complete(request);

  std::vector<Instruction> instructions;
  std::string line;
  for (std::size_t i = 0; i <= text.size() && instructions.size() < count; ++i) {
    if (i == text.size() || text[i] == '\n') {
      const std::string content = strip_list_marker(line);
      line.clear();
      if (content.empty()) continue;
      Instruction instruction;
      instruction.text = content;
      instruction.style = style;
      instruction.tool_name = tool.name;
      instructions.push_back(std::move(instruction));
    } else {
      line += text[i];
    }
  }

  if (report) report->parsed = instructions.size();
  if (instructions.empty()) {
    throw std::runtime_error("instruction drafting for " + tool.name +
                             " yielded zero parseable instructions");
  }
  return instructions;
}

std::string user_provide_missing_info(const Transcript& transcript, llm::Backend& backend,
                                      const PromptCatalog& prompts) {
  if (!transcript.pending_user_question) {
    throw std::logic_error(
        "user_provide_missing_info: the last assistant move is not a question to the user");
  }

  llm::CompletionRequest request;
  request.role = llm::Role::user_agent;
  request.sampling = llm::default_sampling(request.role);
  request.prompt = prompts.render("user_reply", {{"instruction", transcript.instruction.text},
                                                 {"transcript", transcript.scratchpad()},
                                                 {"question", *transcript.pending_user_question}});

  const std::string reply = trim(backend.complete(request));
  if (reply.empty()) {
    throw std::runtime_error("user agent returned an empty reply");
  }
  return reply;
}

MoveOutcome assistant_next_move(const Transcript& transcript, const registry::ToolSpec& tool,
                                llm::Backend& backend, const PromptCatalog& prompts) {
  if (transcript.instruction.text.empty()) {
    throw std::invalid_argument("transcript must begin with an instruction");
  }

  llm::CompletionRequest request;
  request.role = llm::Role::assistant_agent;
  request.sampling = llm::default_sampling(request.role);
  request.stop_markers = {"Observation:"};
  request.prompt = prompts.render(
      "assistant", {{"name", tool.name},
                    {"description", tool.description},
                    {"function_docs", registry::render_function_docs(tool.functions)},
                    {"instruction", transcript.instruction.text},
                    {"scratchpad", transcript.scratchpad()}});

  MoveOutcome outcome;
  outcome.raw_text = rtrim(backend.complete(request));
  outcome.result = parse_react_block(outcome.raw_text);
  return outcome;
}

}  // namespace toolsim::agents
