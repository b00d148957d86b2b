#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolsim/backend.hpp"
#include "toolsim/executor.hpp"
#include "toolsim/prompts.hpp"
#include "toolsim/react.hpp"
#include "toolsim/registry.hpp"

namespace toolsim::agents {

// One resolved interaction step as fed back into prompts: the assistant's raw
// emission plus the observation shown to it.
struct TranscriptStep {
  std::string assistant_text;
  std::string observation_text;
};

// The evolving episode state. All agent calls are stateless; this is the only
// carrier of conversation history.
struct Transcript {
  Instruction instruction;
  std::vector<TranscriptStep> steps;
  std::optional<std::string> pending_user_question;

  // ReAct scratchpad: every emission followed by its Observation line.
  std::string scratchpad() const;
};

struct DraftReport {
  std::size_t requested = 0;
  std::size_t parsed = 0;

  std::size_t shortfall() const { return requested > parsed ? requested - parsed : 0; }
};

// Drafts up to `count` instructions of the requested style from the tool's
// documentation. Under-generation is reported, never padded. count == 0
// returns immediately without a backend call. Throws if nothing parses.
std::vector<Instruction> user_draft_instructions(const registry::ToolSpec& tool,
                                                 InstructionStyle style, std::size_t count,
                                                 llm::Backend& backend,
                                                 const PromptCatalog& prompts,
                                                 DraftReport* report = nullptr);

// Answers the assistant's pending question from the interaction context.
// Precondition: the transcript's last assistant move asked the user (via the
// ask_user pseudo-function).
std::string user_provide_missing_info(const Transcript& transcript, llm::Backend& backend,
                                      const PromptCatalog& prompts);

struct MoveOutcome {
  ReactParseResult result;
  std::string raw_text;  // assistant emission before parsing
};

// Renders the assistant prompt (tool name, description, function docs — the
// executor alone sees the OAS) and parses the reply. Parse failures are a
// value in the outcome; backend failures throw.
MoveOutcome assistant_next_move(const Transcript& transcript, const registry::ToolSpec& tool,
                                llm::Backend& backend, const PromptCatalog& prompts);

// Observation line content for a result, as shown to the assistant.
std::string render_observation(const ExecutorResult& result);

}  // namespace toolsim::agents
