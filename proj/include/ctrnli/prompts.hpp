#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctrnli/corpus.hpp"
#include "ctrnli/exemplars.hpp"
#include "ctrnli/instruction_pool.hpp"
#include "ctrnli/llm.hpp"

namespace ctrnli {

enum class Placeholder {
  Statement,
  Evidence,
  Reasoning,
  ExemplarStatement,
  ExemplarReasoning,
  ExemplarLabel,
  InstructionList,
  SampleBlock,
  Instruction,
  AnswerFormat,
};

std::string_view to_string(Placeholder p);
std::optional<Placeholder> parse_placeholder(std::string_view name);

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text with {placeholder} slots. "{{" and "}}" are literal braces.
///
/// Substituted values are inserted verbatim and never rescanned, so a
/// statement that happens to contain "{evidence}" stays as written.
class PromptTemplate {
 public:
  using Segment = std::variant<std::string, Placeholder>;

  // Throws TemplateError on an unknown placeholder or unbalanced brace.
  static PromptTemplate parse(std::string name, std::string_view text);
  static PromptTemplate load(const std::filesystem::path& path);

  // Throws TemplateError if a used placeholder has no value.
  std::string render(const std::map<Placeholder, std::string>& values) const;

  const std::string& name() const { return name_; }
  const std::set<Placeholder>& placeholders() const { return used_; }
  // Short content hash of the source text.
  const std::string& version() const { return version_; }

 private:
  std::string name_;
  std::string version_;
  std::vector<Segment> segments_;
  std::set<Placeholder> used_;
};

/// The six templates the builders need, loaded from one directory.
struct TemplateSet {
  PromptTemplate cot_reasoning;
  PromptTemplate formatting;
  PromptTemplate oneshot;
  PromptTemplate opro_meta;
  PromptTemplate opro_predict;
  PromptTemplate answer_format;

  // Reads <dir>/<name>.txt for each template and checks that every template
  // uses the placeholders its builder requires and no others.
  static TemplateSet load(const std::filesystem::path& dir);

  std::map<std::string, std::string> versions() const;
};

class EmptyReasoning : public std::invalid_argument {
 public:
  EmptyReasoning() : std::invalid_argument("reasoning text is empty") {}
};

struct LabeledDemo {
  std::string evidence;
  std::string statement;
  Label gold = Label::Contradiction;
};

/// Pure builders for every request the strategies send. Answer-producing
/// requests use `decoding`; OPRO meta-prompts use `instruction_sampling`.
class PromptBuilder {
 public:
  PromptBuilder(TemplateSet templates, GenerationParams decoding, GenerationParams instruction_sampling);

  ChatRequest build_cot_reasoning(const Sample& sample, const std::string& evidence) const;
  ChatRequest build_formatting(const Sample& sample, const std::string& reasoning) const;
  ChatRequest build_oneshot(const Sample& sample, const std::string& evidence, const Exemplar& exemplar) const;
  // `seed` is forwarded with the sampled request; OPRO passes a per-iteration
  // seed so cached replies are not reused across iterations.
  ChatRequest build_opro_meta(const InstructionPool& pool, std::span<const LabeledDemo> demos,
                              std::optional<std::uint64_t> seed = std::nullopt) const;
  ChatRequest build_opro_predict(const std::string& instruction, const Sample& sample,
                                 const std::string& evidence) const;

  const TemplateSet& templates() const { return templates_; }
  const GenerationParams& decoding() const { return decoding_; }
  const GenerationParams& instruction_sampling() const { return instruction_sampling_; }

 private:
  ChatRequest user_request(std::string text, const GenerationParams& params) const;

  TemplateSet templates_;
  GenerationParams decoding_;
  GenerationParams instruction_sampling_;
  std::string answer_format_;
};

std::string format_score(double f1);

}  // namespace ctrnli
