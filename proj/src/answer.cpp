#include "ctrnli/answer.hpp"

#include <nlohmann/json.hpp>

#include "ctrnli/file_util.hpp"

namespace ctrnli {

namespace {

std::optional<Label> answer_of(std::string_view text) {
  auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  auto it = doc.find("answer");
  if (it == doc.end() || !it->is_string()) return std::nullopt;
  const auto value = to_lower_ascii(it->get<std::string>());
  if (value == "entailment") return Label::Entailment;
  if (value == "contradiction") return Label::Contradiction;
  return std::nullopt;
}

// End of the object opened at `open`, honouring JSON string quoting;
// npos if it never closes.
std::size_t matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::string_view to_string(AnswerStatus status) {
  switch (status) {
    case AnswerStatus::CleanJson:
      return "CleanJson";
    case AnswerStatus::RecoveredJson:
      return "RecoveredJson";
    case AnswerStatus::Fallback:
      return "Fallback";
  }
  return "?";
}

std::optional<AnswerStatus> parse_answer_status(std::string_view text) {
  for (auto s : {AnswerStatus::CleanJson, AnswerStatus::RecoveredJson, AnswerStatus::Fallback}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

ParsedAnswer parse_label(std::string_view raw, const ParseOptions& options) {
  if (auto label = answer_of(raw)) {
    return {*label, AnswerStatus::CleanJson};
  }

  for (auto open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    const auto close = matching_brace(raw, open);
    if (close == std::string_view::npos) continue;
    if (auto label = answer_of(raw.substr(open, close - open + 1))) {
      return {*label, AnswerStatus::RecoveredJson};
    }
  }

  if (options.keyword_rescue) {
    const auto lowered = to_lower_ascii(raw);
    const bool entail = lowered.find("entailment") != std::string::npos;
    const bool contra = lowered.find("contradiction") != std::string::npos;
    if (entail != contra) {
      return {entail ? Label::Entailment : Label::Contradiction, AnswerStatus::RecoveredJson};
    }
  }
  return {Label::Contradiction, AnswerStatus::Fallback};
}

}  // namespace ctrnli
