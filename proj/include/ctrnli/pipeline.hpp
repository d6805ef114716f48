#pragma once

#include <string>

#include "ctrnli/answer.hpp"
#include "ctrnli/exemplars.hpp"
#include "ctrnli/llm.hpp"
#include "ctrnli/prompts.hpp"

namespace ctrnli {

// What every per-sample step needs: a client, the prompt builders, and the
// answer-parsing policy.
struct Engine {
  LlmClient& client;
  const PromptBuilder& prompts;
  ParseOptions parse;
};

/// Two calls: reasoning, then answer formatting. Throws EmptyReasoning if
/// the first reply is blank; LLM errors propagate.
CotOutcome run_cot(const Engine& engine, const Sample& sample, const std::string& evidence);

struct SingleCallOutcome {
  std::string raw;
  ParsedAnswer answer;
  std::string prompt_hash;
};

// One call, parsed.
SingleCallOutcome run_single(const Engine& engine, const ChatRequest& request);

}  // namespace ctrnli
