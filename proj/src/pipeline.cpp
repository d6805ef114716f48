#include "ctrnli/pipeline.hpp"

#include "ctrnli/file_util.hpp"

namespace ctrnli {

CotOutcome run_cot(const Engine& engine, const Sample& sample, const std::string& evidence) {
  CotOutcome out;
  const auto reasoning_request = engine.prompts.build_cot_reasoning(sample, evidence);
  out.prompt_hashes.push_back(engine.client.key_for(reasoning_request).hex());
  out.reasoning = engine.client.complete(reasoning_request).content;

  const auto formatting_request = engine.prompts.build_formatting(sample, out.reasoning);
  out.prompt_hashes.push_back(engine.client.key_for(formatting_request).hex());
  out.answer = parse_label(engine.client.complete(formatting_request).content, engine.parse);
  return out;
}

SingleCallOutcome run_single(const Engine& engine, const ChatRequest& request) {
  SingleCallOutcome out;
  out.prompt_hash = engine.client.key_for(request).hex();
  out.raw = engine.client.complete(request).content;
  out.answer = parse_label(out.raw, engine.parse);
  return out;
}

}  // namespace ctrnli
