#pragma once

#include <optional>
#include <string_view>

#include "ctrnli/corpus.hpp"

namespace ctrnli {

enum class AnswerStatus { CleanJson, RecoveredJson, Fallback };

std::string_view to_string(AnswerStatus status);
std::optional<AnswerStatus> parse_answer_status(std::string_view text);

struct ParsedAnswer {
  Label label = Label::Contradiction;
  AnswerStatus status = AnswerStatus::Fallback;

  bool operator==(const ParsedAnswer&) const = default;
};

struct ParseOptions {
  // Accept a reply that names exactly one of the two labels without JSON.
  bool keyword_rescue = true;
};

/// Extracts the predicted label from a raw model reply. Never fails.
///
/// Rules, first match wins:
///   1. the whole reply is a JSON object whose "answer" is a label name
///      (case-insensitive)                                  -> CleanJson
///   2. the first balanced {...} substring that is such an object
///                                                          -> RecoveredJson
///   3. exactly one of the two label words occurs           -> RecoveredJson
///   4. otherwise Contradiction                             -> Fallback
ParsedAnswer parse_label(std::string_view raw, const ParseOptions& options = {});

}  // namespace ctrnli
