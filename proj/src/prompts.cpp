#include "toolsim/prompts.hpp"

#include <filesystem>
#include <stdexcept>

#include "toolsim/util.hpp"

namespace toolsim {

namespace {

// Built-in templates. Keep these byte-identical to the files under prompts/;
// scripted fixtures key on digests of the rendered prompts.
constexpr const char* kDescription =
    R"(You are writing documentation for a web API tool.

Tool name: ${name}
Introduction: ${introduction}

Expand the introduction into a description of the tool's purpose and capabilities, in two to four sentences. Cover what the tool does and when a user would reach for it. Output only the description text.
)";

constexpr const char* kFunctions =
    R"(You are writing function documentation for a web API tool.

Tool name: ${name}
Description: ${description}

List the functions this tool exposes, staying within the scope of the description. Output a single fenced json code block containing an array of objects, each with:
- "name": function identifier in lowerCamelCase
- "summary": one sentence
- "parameters": array of {"name", "type", "required", "description"} where "type" is one of string, integer, number, boolean, array, object
- "returns": one sentence describing the output
)";

constexpr const char* kOpenApi =
    R"(You are writing an OpenAPI 3.0 specification for a web API tool.

Tool name: ${name}
Description: ${description}
Functions:
${function_docs}

Write an OpenAPI document covering every function above as exactly one operation whose operationId equals the function name. Declare a server base URL, each operation's method and path, its parameters (name, location, schema type, required) and JSON request/response content with status codes. Output a single fenced code block containing the document as JSON or YAML.
)";

constexpr const char* kInstructionQuestion =
    R"(You are a user of the tool described below.

Tool name: ${name}
Description: ${description}
Functions:
${function_docs}

Write ${count} distinct questions a real user might ask an assistant that can use this tool. Phrase each one as a question. Each must be answerable with the functions above; include concrete values where the functions need them. Output one per line, numbered.
)";

constexpr const char* kInstructionCommand =
    R"(You are a user of the tool described below.

Tool name: ${name}
Description: ${description}
Functions:
${function_docs}

Write ${count} distinct task requests a real user might send to an assistant that can use this tool. Phrase each one as an imperative command. Each must be completable with the functions above; include concrete values where the functions need them. Output one per line, numbered.
)";

constexpr const char* kInstructionOther =
    R"(You are a user of the tool described below.

Tool name: ${name}
Description: ${description}
Functions:
${function_docs}

Write ${count} distinct task requests a real user might send to an assistant that can use this tool. Vary the phrasing freely: statements of need, scenario descriptions, or fragments, but not plain questions or commands. Each must be completable with the functions above; include concrete values where the functions need them. Output one per line, numbered.
)";

constexpr const char* kUserReply =
    R"(You are the user in the conversation below. The assistant has asked you a question. Provide the missing information in one short reply, consistent with your original request.

Your original request: ${instruction}

Conversation so far:
${transcript}

Assistant's question: ${question}

Reply with the information only.
)";

constexpr const char* kAssistant =
    R"(You are an assistant that completes user requests with the web API tool described below.

Tool name: ${name}
Description: ${description}
Functions:
${function_docs}

Use this exact format for every step:
Thought: your reasoning about the next step
Action: one function name from the documentation, or ask_user to ask the user for missing information
Action Input: the call parameters as a JSON object on one line (for ask_user: {"question": "..."})
Observation: the result, provided by the system

When you can answer the request, end with:
Thought: your closing reasoning
Final Answer: the response to the user

Begin.

Request: ${instruction}

${scratchpad})";

constexpr const char* kExecutor =
    R"(You simulate the server behind the web API described by the OpenAPI document below. Respond to the request exactly as the server would.

OpenAPI document:
${openapi}

Request:
Function: ${function}
Parameters: ${parameters}

Answer with the HTTP result in this format:
Status Code: <code>
Response: <body>
Choose a realistic status code and a JSON body consistent with the document.
)";

constexpr const char* kJudge =
    R"(You are grading one episode of an assistant using the web API tool described below.

Tool name: ${name}
Description: ${description}
Functions:
${function_docs}

Reference solution:
${gold}

Assistant episode:
Request: ${instruction}
${transcript}

Grade the episode:
- Procedure: did the assistant choose suitable functions with correct parameters and no redundant calls?
- Response: does the final answer satisfy the user's request?
- Overall: are both correct?

Answer in exactly this format:
Procedure: yes or no
Response: yes or no
Overall: yes or no
Rationale: one or two sentences
)";

}  // namespace

PromptCatalog::PromptCatalog() {
  templates_ = {
      {"description", kDescription},
      {"functions", kFunctions},
      {"openapi", kOpenApi},
      {"instruction_question", kInstructionQuestion},
      {"instruction_command", kInstructionCommand},
      {"instruction_other", kInstructionOther},
      {"user_reply", kUserReply},
      {"assistant", kAssistant},
      {"executor", kExecutor},
      {"judge", kJudge},
  };
}

PromptCatalog PromptCatalog::builtin() { return PromptCatalog(); }

PromptCatalog PromptCatalog::from_dir(const std::string& dir) {
  PromptCatalog catalog;
  catalog.load_dir(dir);
  return catalog;
}

void PromptCatalog::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("prompt directory not found: " + dir);
  }
  for (auto& [name, templ] : templates_) {
    const fs::path file = fs::path(dir) / (name + ".txt");
    if (fs::exists(file)) {
      templ = read_file(file.string());
    }
  }
}

const std::string& PromptCatalog::raw(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw std::runtime_error("unknown prompt template: " + name);
  }
  return it->second;
}

std::string PromptCatalog::render(const std::string& name,
                                  const std::map<std::string, std::string>& vars) const {
  return substitute(raw(name), vars);
}

}  // namespace toolsim
