#include "ctrnli/prompts.hpp"

#include <algorithm>
#include <cstdio>

#include "ctrnli/file_util.hpp"

namespace ctrnli {

namespace {

constexpr std::pair<Placeholder, std::string_view> kPlaceholderNames[] = {
    {Placeholder::Statement, "statement"},
    {Placeholder::Evidence, "evidence"},
    {Placeholder::Reasoning, "reasoning"},
    {Placeholder::ExemplarStatement, "exemplar_statement"},
    {Placeholder::ExemplarReasoning, "exemplar_reasoning"},
    {Placeholder::ExemplarLabel, "exemplar_label"},
    {Placeholder::InstructionList, "instruction_list"},
    {Placeholder::SampleBlock, "sample_block"},
    {Placeholder::Instruction, "instruction"},
    {Placeholder::AnswerFormat, "answer_format"},
};

struct TemplateContract {
  std::string_view name;
  std::set<Placeholder> required;
  std::set<Placeholder> optional;
};

using P = Placeholder;

const TemplateContract kContracts[] = {
    {"cot_reasoning", {P::Statement, P::Evidence}, {}},
    {"formatting", {P::Reasoning, P::AnswerFormat}, {P::Statement}},
    {"oneshot",
     {P::ExemplarStatement, P::ExemplarReasoning, P::ExemplarLabel, P::Evidence, P::Statement, P::AnswerFormat},
     {}},
    {"opro_meta", {P::InstructionList, P::SampleBlock}, {}},
    {"opro_predict", {P::Instruction, P::Evidence, P::Statement, P::AnswerFormat}, {}},
    {"answer_format", {}, {}},
};

void check_contract(const PromptTemplate& t, const TemplateContract& contract) {
  for (auto p : contract.required) {
    if (!t.placeholders().contains(p)) {
      throw TemplateError("template " + t.name() + " lacks {" + std::string(to_string(p)) + "}");
    }
  }
  for (auto p : t.placeholders()) {
    if (!contract.required.contains(p) && !contract.optional.contains(p)) {
      throw TemplateError("template " + t.name() + " may not use {" + std::string(to_string(p)) + "}");
    }
  }
}

}  // namespace

std::string_view to_string(Placeholder p) {
  for (const auto& [value, name] : kPlaceholderNames) {
    if (value == p) return name;
  }
  return "?";
}

std::optional<Placeholder> parse_placeholder(std::string_view name) {
  for (const auto& [value, n] : kPlaceholderNames) {
    if (n == name) return value;
  }
  return std::nullopt;
}

PromptTemplate PromptTemplate::parse(std::string name, std::string_view text) {
  if (text.ends_with('\n')) text.remove_suffix(1);
  PromptTemplate t;
  t.name_ = std::move(name);
  t.version_ = cache_key(ChatRequest({{Role::User, std::string(text)}}, GenerationParams::deterministic()), "")
                   .hex()
                   .substr(0, 16);
  std::string literal;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      literal += '{';
      ++i;
    } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      literal += '}';
      ++i;
    } else if (c == '{') {
      const auto close = text.find('}', i);
      if (close == std::string_view::npos) {
        throw TemplateError("template " + t.name_ + ": unterminated placeholder at offset " + std::to_string(i));
      }
      const auto key = text.substr(i + 1, close - i - 1);
      const auto p = parse_placeholder(key);
      if (!p) {
        throw TemplateError("template " + t.name_ + ": unknown placeholder {" + std::string(key) + "}");
      }
      if (!literal.empty()) t.segments_.emplace_back(std::move(literal));
      literal.clear();
      t.segments_.emplace_back(*p);
      t.used_.insert(*p);
      i = close;
    } else if (c == '}') {
      throw TemplateError("template " + t.name_ + ": stray '}' at offset " + std::to_string(i));
    } else {
      literal += c;
    }
  }
  if (!literal.empty()) t.segments_.emplace_back(std::move(literal));
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw TemplateError(e.what());
  }
  return parse(path.stem().string(), text);
}

std::string PromptTemplate::render(const std::map<Placeholder, std::string>& values) const {
  std::string out;
  for (const auto& segment : segments_) {
    if (const auto* text = std::get_if<std::string>(&segment)) {
      out += *text;
      continue;
    }
    const auto p = std::get<Placeholder>(segment);
    auto it = values.find(p);
    if (it == values.end()) {
      throw TemplateError("template " + name_ + ": no value for {" + std::string(to_string(p)) + "}");
    }
    out += it->second;
  }
  return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  const auto get = [&](std::string_view name) {
    auto t = PromptTemplate::load(dir / (std::string(name) + ".txt"));
    for (const auto& contract : kContracts) {
      if (contract.name == name) check_contract(t, contract);
    }
    return t;
  };
  TemplateSet set{get("cot_reasoning"), get("formatting"), get("oneshot"),
                  get("opro_meta"),     get("opro_predict"), get("answer_format")};

  // The worked example must precede the target in the one-shot prompt.
  const auto probe = set.oneshot.render({{P::ExemplarStatement, "\x01"},
                                         {P::ExemplarReasoning, ""},
                                         {P::ExemplarLabel, ""},
                                         {P::Evidence, ""},
                                         {P::Statement, "\x02"},
                                         {P::AnswerFormat, ""}});
  if (probe.find('\x01') > probe.find('\x02')) {
    throw TemplateError("template oneshot must place {exemplar_statement} before {statement}");
  }
  return set;
}

std::map<std::string, std::string> TemplateSet::versions() const {
  std::map<std::string, std::string> out;
  for (const auto* t : {&cot_reasoning, &formatting, &oneshot, &opro_meta, &opro_predict, &answer_format}) {
    out[t->name()] = t->version();
  }
  return out;
}

std::string format_score(double f1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", f1);
  return buf;
}

PromptBuilder::PromptBuilder(TemplateSet templates, GenerationParams decoding, GenerationParams instruction_sampling)
    : templates_(std::move(templates)),
      decoding_(decoding),
      instruction_sampling_(instruction_sampling),
      answer_format_(templates_.answer_format.render({})) {}

ChatRequest PromptBuilder::user_request(std::string text, const GenerationParams& params) const {
  return ChatRequest({{Role::User, std::move(text)}}, params);
}

ChatRequest PromptBuilder::build_cot_reasoning(const Sample& sample, const std::string& evidence) const {
  return user_request(templates_.cot_reasoning.render({{P::Statement, sample.statement}, {P::Evidence, evidence}}),
                      decoding_);
}

ChatRequest PromptBuilder::build_formatting(const Sample& sample, const std::string& reasoning) const {
  if (trim(reasoning).empty()) throw EmptyReasoning();
  return user_request(templates_.formatting.render({{P::Statement, sample.statement},
                                                    {P::Reasoning, reasoning},
                                                    {P::AnswerFormat, answer_format_}}),
                      decoding_);
}

ChatRequest PromptBuilder::build_oneshot(const Sample& sample, const std::string& evidence,
                                         const Exemplar& exemplar) const {
  if (trim(exemplar.reasoning).empty()) throw EmptyReasoning();
  return user_request(templates_.oneshot.render({{P::ExemplarStatement, exemplar.statement},
                                                 {P::ExemplarReasoning, exemplar.reasoning},
                                                 {P::ExemplarLabel, std::string(to_string(exemplar.label))},
                                                 {P::Evidence, evidence},
                                                 {P::Statement, sample.statement},
                                                 {P::AnswerFormat, answer_format_}}),
                      decoding_);
}

ChatRequest PromptBuilder::build_opro_meta(const InstructionPool& pool, std::span<const LabeledDemo> demos,
                                           std::optional<std::uint64_t> seed) const {
  std::string instructions;
  for (const auto& item : pool.items()) {
    if (!instructions.empty()) instructions += "\n\n";
    instructions += "text:\n" + item.text + "\nscore:\n" + format_score(item.f1);
  }
  std::string samples;
  for (const auto& demo : demos) {
    if (!samples.empty()) samples += "\n\n";
    samples += "Report:\n" + demo.evidence + "\nStatement: " + demo.statement + "\nLabel: " +
               std::string(to_string(demo.gold));
  }
  const auto params = seed ? instruction_sampling_.with_seed(*seed) : instruction_sampling_;
  return user_request(
      templates_.opro_meta.render({{P::InstructionList, instructions}, {P::SampleBlock, samples}}), params);
}

ChatRequest PromptBuilder::build_opro_predict(const std::string& instruction, const Sample& sample,
                                              const std::string& evidence) const {
  return user_request(templates_.opro_predict.render({{P::Instruction, instruction},
                                                      {P::Evidence, evidence},
                                                      {P::Statement, sample.statement},
                                                      {P::AnswerFormat, answer_format_}}),
                      decoding_);
}

}  // namespace ctrnli
