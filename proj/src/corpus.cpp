#include "ctrnli/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ctrnli/file_util.hpp"

namespace ctrnli {

namespace {

constexpr std::string_view kTrialIdKey = "Clinical Trial ID";

const std::set<std::string> kSampleKeys = {"Type", "Section_id", "Primary_id", "Secondary_id", "Statement", "Label"};
const std::set<std::string> kLinkKeys = {"contrast_id", "original_id", "kind"};

// Marker left by render_section; its presence in raw input means the text
// was rendered before.
const std::regex kRenderedSuffix(R"( \(Cohort [0-9]+\))");

CorpusError malformed(const std::string& id, const std::string& reason) {
  return CorpusError(CorpusError::Kind::MalformedRecord, id, reason);
}

std::string required_string(const nlohmann::json& record, const std::string& key, const std::string& id) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw malformed(id, "missing field \"" + key + "\"");
  }
  if (!it->is_string()) {
    throw malformed(id, "field \"" + key + "\" must be a string");
  }
  return it->get<std::string>();
}

std::size_t word_count(std::string_view line) {
  std::istringstream words{std::string(line)};
  std::size_t n = 0;
  for (std::string w; words >> w;) ++n;
  return n;
}

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::Entailment ? "Entailment" : "Contradiction";
}

std::string_view to_string(SectionId section) {
  switch (section) {
    case SectionId::AdverseEvents:
      return "Adverse Events";
    case SectionId::EligibilityCriteria:
      return "Eligibility";
    case SectionId::Results:
      return "Results";
    case SectionId::Interventions:
      return "Intervention";
  }
  return "?";
}

std::string_view to_string(SampleType type) {
  return type == SampleType::Single ? "Single" : "Comparison";
}

std::string_view to_string(ContrastKind kind) {
  return kind == ContrastKind::SemanticPreserving ? "semantic_preserving" : "semantic_altering";
}

std::optional<Label> parse_label_name(std::string_view text) {
  if (text == "Entailment") return Label::Entailment;
  if (text == "Contradiction") return Label::Contradiction;
  return std::nullopt;
}

std::optional<SectionId> parse_section_name(std::string_view text) {
  for (auto section : kAllSections) {
    if (to_string(section) == text) return section;
  }
  return std::nullopt;
}

std::optional<SampleType> parse_sample_type(std::string_view text) {
  if (text == "Single") return SampleType::Single;
  if (text == "Comparison") return SampleType::Comparison;
  return std::nullopt;
}

std::optional<ContrastKind> parse_contrast_kind(std::string_view text) {
  if (text == "semantic_preserving") return ContrastKind::SemanticPreserving;
  if (text == "semantic_altering") return ContrastKind::SemanticAltering;
  return std::nullopt;
}

std::string_view to_string(CorpusError::Kind kind) {
  switch (kind) {
    case CorpusError::Kind::MalformedRecord:
      return "MalformedRecord";
    case CorpusError::Kind::DuplicateId:
      return "DuplicateId";
    case CorpusError::Kind::MissingTrial:
      return "MissingTrial";
    case CorpusError::Kind::DanglingReference:
      return "DanglingReference";
    case CorpusError::Kind::KindLabelMismatch:
      return "KindLabelMismatch";
    case CorpusError::Kind::Io:
      return "Io";
  }
  return "?";
}

CorpusError::CorpusError(Kind kind, std::string id, const std::string& reason)
    : std::runtime_error(std::string(to_string(kind)) + " [" + id + "]: " + reason), kind_(kind), id_(std::move(id)) {}

void validate_sample(const Sample& sample) {
  if (sample.id.empty()) {
    throw malformed(sample.id, "empty sample id");
  }
  if (trim(sample.statement).empty()) {
    throw malformed(sample.id, "empty statement");
  }
  if (sample.primary_trial.empty()) {
    throw malformed(sample.id, "empty primary trial id");
  }
  const bool comparison = sample.type == SampleType::Comparison;
  if (comparison && (!sample.secondary_trial || sample.secondary_trial->empty())) {
    throw malformed(sample.id, "Comparison sample without Secondary_id");
  }
  if (!comparison && sample.secondary_trial) {
    throw malformed(sample.id, "Single sample with Secondary_id");
  }
}

SampleMap parse_samples(const nlohmann::json& doc) {
  if (!doc.is_object()) {
    throw malformed("", "samples document must be a JSON object keyed by sample id");
  }
  SampleMap out;
  for (const auto& [id, record] : doc.items()) {
    if (!record.is_object()) {
      throw malformed(id, "record must be a JSON object");
    }
    for (const auto& [key, value] : record.items()) {
      if (!kSampleKeys.contains(key)) {
        throw malformed(id, "unknown field \"" + key + "\"");
      }
    }
    Sample s;
    s.id = id;
    s.statement = required_string(record, "Statement", id);
    const auto type_name = required_string(record, "Type", id);
    const auto type = parse_sample_type(type_name);
    if (!type) throw malformed(id, "unknown Type \"" + type_name + "\"");
    s.type = *type;
    const auto section_name = required_string(record, "Section_id", id);
    const auto section = parse_section_name(section_name);
    if (!section) throw malformed(id, "unknown Section_id \"" + section_name + "\"");
    s.section = *section;
    s.primary_trial = required_string(record, "Primary_id", id);
    if (record.contains("Secondary_id")) {
      s.secondary_trial = required_string(record, "Secondary_id", id);
    }
    if (record.contains("Label")) {
      const auto label_name = required_string(record, "Label", id);
      const auto label = parse_label_name(label_name);
      if (!label) throw malformed(id, "unknown Label \"" + label_name + "\"");
      s.gold = *label;
    }
    validate_sample(s);
    out.emplace(id, std::move(s));
  }
  return out;
}

SampleMap load_samples(const std::filesystem::path& path) {
  std::string duplicate;
  nlohmann::json doc;
  try {
    doc = read_json_file(path, &duplicate);
  } catch (const std::runtime_error& e) {
    throw CorpusError(CorpusError::Kind::Io, path.string(), e.what());
  }
  if (!duplicate.empty()) {
    throw CorpusError(CorpusError::Kind::DuplicateId, duplicate, "sample id occurs twice in " + path.string());
  }
  return parse_samples(doc);
}

nlohmann::json serialize_samples(const SampleMap& samples) {
  auto doc = nlohmann::json::object();
  for (const auto& [id, s] : samples) {
    nlohmann::json record = {
        {"Type", to_string(s.type)},
        {"Section_id", to_string(s.section)},
        {"Primary_id", s.primary_trial},
        {"Statement", s.statement},
    };
    if (s.secondary_trial) record["Secondary_id"] = *s.secondary_trial;
    if (s.gold) record["Label"] = to_string(*s.gold);
    doc[id] = std::move(record);
  }
  return doc;
}

ClinicalTrial parse_trial(const nlohmann::json& doc, std::string fallback_id) {
  if (!doc.is_object()) {
    throw malformed(fallback_id, "trial document must be a JSON object");
  }
  ClinicalTrial trial;
  trial.id = doc.contains(kTrialIdKey) ? required_string(doc, std::string(kTrialIdKey), fallback_id)
                                       : std::move(fallback_id);
  if (trial.id.empty()) {
    throw malformed(trial.id, "trial without \"Clinical Trial ID\"");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != kTrialIdKey && !parse_section_name(key)) {
      throw malformed(trial.id, "unknown trial field \"" + key + "\"");
    }
  }
  for (auto section : kAllSections) {
    const std::string key(to_string(section));
    auto it = doc.find(key);
    if (it == doc.end()) {
      throw malformed(trial.id, "missing section \"" + key + "\"");
    }
    if (!it->is_array()) {
      throw malformed(trial.id, "section \"" + key + "\" must be an array of strings");
    }
    auto& lines = trial.sections[section];
    for (const auto& line : *it) {
      if (!line.is_string()) {
        throw malformed(trial.id, "section \"" + key + "\" holds a non-string line");
      }
      auto text = line.get<std::string>();
      if (text.find_first_of("\r\n") != std::string::npos) {
        throw malformed(trial.id, "section \"" + key + "\" line contains a newline");
      }
      if (std::regex_search(text, kRenderedSuffix)) {
        throw malformed(trial.id, "section \"" + key + "\" line already carries a cohort suffix");
      }
      lines.push_back(std::move(text));
    }
  }
  return trial;
}

ClinicalTrial load_trial(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = read_json_file(path);
  } catch (const std::runtime_error& e) {
    throw CorpusError(CorpusError::Kind::Io, path.string(), e.what());
  }
  return parse_trial(doc, path.stem().string());
}

TrialMap load_trials(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw CorpusError(CorpusError::Kind::Io, dir.string(), "trial directory not found");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  TrialMap trials;
  for (const auto& file : files) {
    auto trial = load_trial(file);
    const auto id = trial.id;
    if (!trials.emplace(id, std::move(trial)).second) {
      throw CorpusError(CorpusError::Kind::DuplicateId, id, "trial defined twice in " + dir.string());
    }
  }
  return trials;
}

nlohmann::json serialize_trial(const ClinicalTrial& trial) {
  nlohmann::json doc = {{std::string(kTrialIdKey), trial.id}};
  for (auto section : kAllSections) {
    auto it = trial.sections.find(section);
    doc[std::string(to_string(section))] =
        it == trial.sections.end() ? nlohmann::json::array() : nlohmann::json(it->second);
  }
  return doc;
}

std::vector<ContrastPair> parse_contrast_links(const nlohmann::json& doc, const SampleMap& samples) {
  if (!doc.is_array()) {
    throw malformed("", "contrast links document must be a JSON array");
  }
  std::vector<ContrastPair> links;
  links.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& record = doc[i];
    const std::string where = "link #" + std::to_string(i);
    if (!record.is_object()) {
      throw malformed(where, "link must be a JSON object");
    }
    for (const auto& [key, value] : record.items()) {
      if (!kLinkKeys.contains(key)) {
        throw malformed(where, "unknown field \"" + key + "\"");
      }
    }
    ContrastPair pair;
    pair.contrast_id = required_string(record, "contrast_id", where);
    pair.original_id = required_string(record, "original_id", where);
    const auto kind_name = required_string(record, "kind", where);
    const auto kind = parse_contrast_kind(kind_name);
    if (!kind) throw malformed(where, "unknown kind \"" + kind_name + "\"");
    pair.kind = *kind;

    const auto contrast = samples.find(pair.contrast_id);
    if (contrast == samples.end()) {
      throw CorpusError(CorpusError::Kind::DanglingReference, pair.contrast_id, where + " names an unknown sample");
    }
    const auto original = samples.find(pair.original_id);
    if (original == samples.end()) {
      throw CorpusError(CorpusError::Kind::DanglingReference, pair.original_id, where + " names an unknown sample");
    }
    const auto& x = contrast->second.gold;
    const auto& y = original->second.gold;
    if (x && y) {
      const bool same = *x == *y;
      if (pair.kind == ContrastKind::SemanticAltering && same) {
        throw CorpusError(CorpusError::Kind::KindLabelMismatch, pair.contrast_id,
                          "semantic_altering pair shares its gold label with " + pair.original_id);
      }
      if (pair.kind == ContrastKind::SemanticPreserving && !same) {
        throw CorpusError(CorpusError::Kind::KindLabelMismatch, pair.contrast_id,
                          "semantic_preserving pair disagrees in gold label with " + pair.original_id);
      }
    }
    links.push_back(std::move(pair));
  }
  return links;
}

std::vector<ContrastPair> load_contrast_links(const std::filesystem::path& path, const SampleMap& samples) {
  nlohmann::json doc;
  try {
    doc = read_json_file(path);
  } catch (const std::runtime_error& e) {
    throw CorpusError(CorpusError::Kind::Io, path.string(), e.what());
  }
  return parse_contrast_links(doc, samples);
}

nlohmann::json serialize_contrast_links(const std::vector<ContrastPair>& links) {
  auto doc = nlohmann::json::array();
  for (const auto& link : links) {
    doc.push_back({{"contrast_id", link.contrast_id}, {"original_id", link.original_id}, {"kind", to_string(link.kind)}});
  }
  return doc;
}

SubtitleRule::SubtitleRule(const std::string& pattern) : override_(std::regex(pattern)) {}

bool SubtitleRule::is_subtitle(std::string_view line) const {
  if (override_) {
    return std::regex_match(line.begin(), line.end(), *override_);
  }
  const auto stripped = trim(line);
  return !stripped.empty() && stripped.back() == ':' && word_count(stripped) <= kMaxSubtitleWords;
}

std::string render_section(const ClinicalTrial& trial, SectionId section, const SubtitleRule& rule) {
  auto it = trial.sections.find(section);
  if (it == trial.sections.end()) {
    return {};
  }
  std::string out;
  int cohort = 0;
  for (std::size_t i = 0; i < it->second.size(); ++i) {
    const auto& line = it->second[i];
    if (i > 0) out += '\n';
    out += line;
    if (rule.is_subtitle(line)) {
      out += " (Cohort " + std::to_string(++cohort) + ")";
    }
  }
  return out;
}

std::string render_evidence(const Sample& sample, const TrialMap& trials, const SubtitleRule& rule) {
  const auto lookup = [&](const std::string& id) -> const ClinicalTrial& {
    auto it = trials.find(id);
    if (it == trials.end()) {
      throw CorpusError(CorpusError::Kind::MissingTrial, id, "referenced by sample " + sample.id);
    }
    return it->second;
  };
  const auto& primary = lookup(sample.primary_trial);
  if (sample.type == SampleType::Single) {
    return render_section(primary, sample.section, rule);
  }
  const auto& secondary = lookup(sample.secondary_trial.value_or(""));
  return "Primary Trial:\n" + render_section(primary, sample.section, rule) + "\nSecondary Trial:\n" +
         render_section(secondary, sample.section, rule);
}

void check_trial_references(const SampleMap& samples, const TrialMap& trials) {
  for (const auto& [id, sample] : samples) {
    if (!trials.contains(sample.primary_trial)) {
      throw CorpusError(CorpusError::Kind::MissingTrial, sample.primary_trial, "referenced by sample " + id);
    }
    if (sample.secondary_trial && !trials.contains(*sample.secondary_trial)) {
      throw CorpusError(CorpusError::Kind::MissingTrial, *sample.secondary_trial, "referenced by sample " + id);
    }
  }
}

}  // namespace ctrnli
