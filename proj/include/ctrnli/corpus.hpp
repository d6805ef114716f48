#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctrnli {

// Numeric encoding is fixed: Entailment = 1, Contradiction = 0.
enum class Label { Contradiction = 0, Entailment = 1 };

enum class SectionId { AdverseEvents, EligibilityCriteria, Results, Interventions };

enum class SampleType { Single, Comparison };

enum class ContrastKind { SemanticPreserving, SemanticAltering };

inline constexpr SectionId kAllSections[] = {SectionId::AdverseEvents, SectionId::EligibilityCriteria,
                                             SectionId::Results, SectionId::Interventions};

std::string_view to_string(Label label);
std::string_view to_string(SectionId section);
std::string_view to_string(SampleType type);
std::string_view to_string(ContrastKind kind);

// Case-sensitive parses of the on-disk spellings.
std::optional<Label> parse_label_name(std::string_view text);
std::optional<SectionId> parse_section_name(std::string_view text);
std::optional<SampleType> parse_sample_type(std::string_view text);
std::optional<ContrastKind> parse_contrast_kind(std::string_view text);

inline int encode(Label label) { return label == Label::Entailment ? 1 : 0; }

struct Sample {
  std::string id;
  std::string statement;
  SampleType type = SampleType::Single;
  SectionId section = SectionId::Results;
  std::string primary_trial;
  std::optional<std::string> secondary_trial;
  std::optional<Label> gold;

  bool operator==(const Sample&) const = default;
};

using SampleMap = std::map<std::string, Sample>;

struct ClinicalTrial {
  std::string id;
  std::map<SectionId, std::vector<std::string>> sections;
};

using TrialMap = std::map<std::string, ClinicalTrial>;

struct ContrastPair {
  std::string contrast_id;  // x_i
  std::string original_id;  // y_i
  ContrastKind kind = ContrastKind::SemanticPreserving;

  bool operator==(const ContrastPair&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  enum class Kind {
    MalformedRecord,
    DuplicateId,
    MissingTrial,
    DanglingReference,
    KindLabelMismatch,
    Io,
  };

  CorpusError(Kind kind, std::string id, const std::string& reason);

  Kind kind() const { return kind_; }
  const std::string& id() const { return id_; }

 private:
  Kind kind_;
  std::string id_;
};

std::string_view to_string(CorpusError::Kind kind);

// Throws CorpusError if the sample violates its invariants.
void validate_sample(const Sample& sample);

SampleMap parse_samples(const nlohmann::json& doc);
SampleMap load_samples(const std::filesystem::path& path);
nlohmann::json serialize_samples(const SampleMap& samples);

ClinicalTrial parse_trial(const nlohmann::json& doc, std::string fallback_id = {});
ClinicalTrial load_trial(const std::filesystem::path& path);
// Loads every *.json file in `dir` as one trial.
TrialMap load_trials(const std::filesystem::path& dir);
nlohmann::json serialize_trial(const ClinicalTrial& trial);

std::vector<ContrastPair> parse_contrast_links(const nlohmann::json& doc, const SampleMap& samples);
std::vector<ContrastPair> load_contrast_links(const std::filesystem::path& path, const SampleMap& samples);
nlohmann::json serialize_contrast_links(const std::vector<ContrastPair>& links);

/// Decides which report lines are cohort subtitles.
///
/// The default rule accepts a line that ends with ':' and has at most eight
/// whitespace-separated words. A regex override replaces the rule entirely
/// and must match the whole line.
class SubtitleRule {
 public:
  SubtitleRule() = default;
  explicit SubtitleRule(const std::string& pattern);

  bool is_subtitle(std::string_view line) const;

 private:
  std::optional<std::regex> override_;
};

inline constexpr std::size_t kMaxSubtitleWords = 8;

std::string render_section(const ClinicalTrial& trial, SectionId section, const SubtitleRule& rule = {});

// Throws CorpusError{MissingTrial} when a referenced trial is absent.
std::string render_evidence(const Sample& sample, const TrialMap& trials, const SubtitleRule& rule = {});

struct Corpus {
  SampleMap samples;
  TrialMap trials;
  std::vector<ContrastPair> links;
};

// Every sample's trial ids must resolve in `trials`.
void check_trial_references(const SampleMap& samples, const TrialMap& trials);

}  // namespace ctrnli
