#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ctrnli/corpus.hpp"
#include "support/test_support.hpp"

namespace ctrnli {
namespace {

using testing::TempDir;
using testing::write_text;

CorpusError::Kind error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const CorpusError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected CorpusError";
  return CorpusError::Kind::Io;
}

TEST(LoadSamples, SingleValidRecord) {
  TempDir dir;
  write_text(dir / "s.json", R"({"u1": {"Type": "Single", "Section_id": "Results", "Primary_id": "NCT1",
                                        "Statement": "The trial met its endpoint.", "Label": "Entailment"}})");
  const auto samples = load_samples(dir / "s.json");
  ASSERT_EQ(samples.size(), 1u);
  const auto& s = samples.at("u1");
  EXPECT_EQ(s.type, SampleType::Single);
  EXPECT_EQ(s.section, SectionId::Results);
  EXPECT_EQ(s.gold, Label::Entailment);
  EXPECT_FALSE(s.secondary_trial);
}

TEST(LoadSamples, ComparisonWithoutSecondaryIsMalformed) {
  TempDir dir;
  write_text(dir / "s.json", R"({"u1": {"Type": "Comparison", "Section_id": "Results", "Primary_id": "NCT1",
                                        "Statement": "x"}})");
  EXPECT_EQ(error_kind([&] { load_samples(dir / "s.json"); }), CorpusError::Kind::MalformedRecord);
}

TEST(LoadSamples, SingleWithSecondaryIsMalformed) {
  TempDir dir;
  write_text(dir / "s.json", R"({"u1": {"Type": "Single", "Section_id": "Results", "Primary_id": "NCT1",
                                        "Secondary_id": "NCT2", "Statement": "x"}})");
  EXPECT_EQ(error_kind([&] { load_samples(dir / "s.json"); }), CorpusError::Kind::MalformedRecord);
}

TEST(LoadSamples, RejectsUnknownAndMissingFields) {
  TempDir dir;
  write_text(dir / "a.json", R"({"u1": {"Type": "Single", "Section_id": "Results", "Primary_id": "NCT1",
                                        "Statement": "x", "Causal_type": "y"}})");
  write_text(dir / "b.json", R"({"u1": {"Type": "Single", "Section_id": "Results", "Statement": "x"}})");
  write_text(dir / "c.json", R"({"u1": {"Type": "Single", "Section_id": "Outcomes", "Primary_id": "NCT1",
                                        "Statement": "x"}})");
  write_text(dir / "d.json", R"({"u1": {"Type": "Single", "Section_id": "Results", "Primary_id": "NCT1",
                                        "Statement": "   "}})");
  for (const auto* name : {"a.json", "b.json", "c.json", "d.json"}) {
    EXPECT_EQ(error_kind([&] { load_samples(dir / name); }), CorpusError::Kind::MalformedRecord) << name;
  }
}

TEST(LoadSamples, DuplicateIdInFile) {
  TempDir dir;
  const std::string record = R"({"Type": "Single", "Section_id": "Results", "Primary_id": "NCT1", "Statement": "x"})";
  write_text(dir / "s.json", "{\"u1\": " + record + ", \"u1\": " + record + "}");
  EXPECT_EQ(error_kind([&] { load_samples(dir / "s.json"); }), CorpusError::Kind::DuplicateId);
}

// 200 generated records; the expected count comes from scanning the raw
// text for "Statement" keys, independently of the JSON loader.
TEST(LoadSamples, TwoHundredRecordFile) {
  static constexpr const char* kSections[] = {"Adverse Events", "Eligibility", "Results", "Intervention"};
  std::string text = "{\n";
  for (int i = 0; i < 200; ++i) {
    const bool comparison = i % 7 == 3;
    text += "  \"id-" + std::to_string(1000 + i) + "\": {\"Type\": \"" + (comparison ? "Comparison" : "Single") +
            "\", \"Section_id\": \"" + kSections[(i * 5) % 4] + "\", \"Primary_id\": \"NCT" + std::to_string(i) +
            "\", " + (comparison ? "\"Secondary_id\": \"NCT9\", " : "") + "\"Statement\": \"statement " +
            std::to_string(i) + "\", \"Label\": \"" + (i % 2 ? "Entailment" : "Contradiction") + "\"}" +
            (i + 1 < 200 ? ",\n" : "\n");
  }
  text += "}\n";
  TempDir dir;
  write_text(dir / "dev.json", text);

  std::size_t raw_count = 0;
  for (auto pos = text.find("\"Statement\":"); pos != std::string::npos; pos = text.find("\"Statement\":", pos + 1)) {
    ++raw_count;
  }
  const auto samples = load_samples(dir / "dev.json");
  EXPECT_EQ(samples.size(), raw_count);
  EXPECT_EQ(samples.size(), 200u);
  std::set<SectionId> seen;
  for (const auto& [id, s] : samples) seen.insert(s.section);
  EXPECT_EQ(seen.size(), 4u);
}

TEST(LoadSamples, IterationIsIdSorted) {
  const auto samples = load_samples(testing::corpus_dir() / "dev.json");
  std::string previous;
  for (const auto& [id, s] : samples) {
    EXPECT_LT(previous, id);
    previous = id;
  }
}

// serialize then parse is the identity on validated samples.
TEST(LoadSamples, RoundTripProperty) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    SampleMap samples;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      Sample s;
      s.id = "id-" + std::to_string(rng() % 100000);
      s.statement = "statement \"quoted\" \\ " + std::to_string(rng());
      s.type = rng() % 2 ? SampleType::Single : SampleType::Comparison;
      s.section = kAllSections[rng() % 4];
      s.primary_trial = "NCT" + std::to_string(rng() % 1000);
      if (s.type == SampleType::Comparison) s.secondary_trial = "NCT" + std::to_string(rng() % 1000);
      if (rng() % 3 != 0) s.gold = rng() % 2 ? Label::Entailment : Label::Contradiction;
      samples[s.id] = s;
    }
    EXPECT_EQ(parse_samples(nlohmann::json::parse(serialize_samples(samples).dump())), samples);
  }
}

TEST(RenderSection, PlainLineIsUnchanged) {
  const auto trial = testing::make_trial("NCT1", {"No adverse events."});
  EXPECT_EQ(render_section(trial, SectionId::AdverseEvents), "No adverse events.");
}

TEST(RenderSection, NumbersCohortSubtitles) {
  const auto trial = testing::make_trial("NCT1", {"Cohort A:", "x", "Cohort B:", "y"});
  EXPECT_EQ(render_section(trial, SectionId::Results), "Cohort A: (Cohort 1)\nx\nCohort B: (Cohort 2)\ny");
}

TEST(RenderSection, EmptySection) {
  const auto trial = testing::make_trial("NCT1", {});
  EXPECT_EQ(render_section(trial, SectionId::Interventions), "");
}

TEST(RenderSection, SubtitleHeuristicLimits) {
  const SubtitleRule rule;
  EXPECT_TRUE(rule.is_subtitle("INTERVENTION 1: "));
  EXPECT_TRUE(rule.is_subtitle("one two three four five six seven eight:"));
  EXPECT_FALSE(rule.is_subtitle("one two three four five six seven eight nine:"));
  EXPECT_FALSE(rule.is_subtitle("Time frame: 5 years"));
  EXPECT_FALSE(rule.is_subtitle(":"  " x"));
}

TEST(RenderSection, RegexOverride) {
  const SubtitleRule rule(R"(\s*(INTERVENTION|Results) [0-9]+:\s*)");
  const auto trial = testing::make_trial("NCT1", {"INTERVENTION 1: ", "  Drug", "Inclusion Criteria:", "Results 2:"});
  EXPECT_EQ(render_section(trial, SectionId::Results, rule),
            "INTERVENTION 1:  (Cohort 1)\n  Drug\nInclusion Criteria:\nResults 2: (Cohort 2)");
}

TEST(RenderSection, FixtureTrialNumbersInterventionArms) {
  const auto trials = load_trials(testing::corpus_dir() / "trials");
  const auto text = render_section(trials.at("NCT00000101"), SectionId::Interventions);
  EXPECT_EQ(text,
            "INTERVENTION 1:  (Cohort 1)\n  Letrozole\n  2.5 mg orally once daily for 5 years\n"
            "INTERVENTION 2:  (Cohort 2)\n  Tamoxifen\n  20 mg orally once daily for 5 years");
}

TEST(LoadTrial, RejectsAlreadyRenderedAndMultilineText) {
  TempDir dir;
  const auto trial_doc = [](const std::string& line) {
    return nlohmann::json{{"Clinical Trial ID", "NCT1"},
                          {"Intervention", {line}},
                          {"Eligibility", nlohmann::json::array()},
                          {"Results", nlohmann::json::array()},
                          {"Adverse Events", nlohmann::json::array()}}
        .dump();
  };
  write_text(dir / "a.json", trial_doc("Cohort A: (Cohort 1)"));
  write_text(dir / "b.json", trial_doc("two\nlines"));
  write_text(dir / "ok.json", trial_doc("Cohort A:"));
  EXPECT_EQ(error_kind([&] { load_trial(dir / "a.json"); }), CorpusError::Kind::MalformedRecord);
  EXPECT_EQ(error_kind([&] { load_trial(dir / "b.json"); }), CorpusError::Kind::MalformedRecord);
  const auto trial = load_trial(dir / "ok.json");
  EXPECT_EQ(trial.sections.size(), 4u);
  EXPECT_EQ(serialize_trial(trial), nlohmann::json::parse(trial_doc("Cohort A:")));
}

TEST(LoadTrial, MissingSectionIsMalformed) {
  TempDir dir;
  write_text(dir / "t.json", R"({"Clinical Trial ID": "NCT1", "Intervention": [], "Results": [], "Eligibility": []})");
  EXPECT_EQ(error_kind([&] { load_trial(dir / "t.json"); }), CorpusError::Kind::MalformedRecord);
}

TEST(RenderEvidence, SingleMatchesSection) {
  TrialMap trials{{"NCT1", testing::make_trial("NCT1", {"Arm 1:", "a"})}};
  const auto s = testing::make_sample("u1", "x");
  EXPECT_EQ(render_evidence(s, trials), render_section(trials.at("NCT1"), s.section));
}

TEST(RenderEvidence, ComparisonHasBothHeadersInOrder) {
  TrialMap trials{{"NCT1", testing::make_trial("NCT1", {"primary text"})},
                  {"NCT2", testing::make_trial("NCT2", {"secondary text"})}};
  const auto s = testing::make_sample("u1", "x", Label::Entailment, SampleType::Comparison);
  EXPECT_EQ(render_evidence(s, trials), "Primary Trial:\nprimary text\nSecondary Trial:\nsecondary text");
}

TEST(RenderEvidence, MissingSecondaryTrial) {
  TrialMap trials{{"NCT1", testing::make_trial("NCT1", {"primary text"})}};
  const auto s = testing::make_sample("u1", "x", Label::Entailment, SampleType::Comparison);
  EXPECT_EQ(error_kind([&] { render_evidence(s, trials); }), CorpusError::Kind::MissingTrial);
  EXPECT_EQ(error_kind([&] { check_trial_references({{"u1", s}}, trials); }), CorpusError::Kind::MissingTrial);
}

class ContrastLinks : public ::testing::Test {
 protected:
  SampleMap samples{{"a", testing::make_sample("a", "x", Label::Entailment)},
                    {"b", testing::make_sample("b", "y", Label::Entailment)},
                    {"c", testing::make_sample("c", "z", Label::Contradiction)}};
};

TEST_F(ContrastLinks, PreservingPairWithSharedLabelAccepted) {
  const auto links = parse_contrast_links(
      nlohmann::json::parse(R"([{"contrast_id": "b", "original_id": "a", "kind": "semantic_preserving"}])"), samples);
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0], (ContrastPair{"b", "a", ContrastKind::SemanticPreserving}));
}

TEST_F(ContrastLinks, AlteringPairWithSharedLabelRejected) {
  const auto doc = nlohmann::json::parse(R"([{"contrast_id": "b", "original_id": "a", "kind": "semantic_altering"}])");
  EXPECT_EQ(error_kind([&] { parse_contrast_links(doc, samples); }), CorpusError::Kind::KindLabelMismatch);
  const auto ok = nlohmann::json::parse(R"([{"contrast_id": "c", "original_id": "a", "kind": "semantic_altering"}])");
  EXPECT_EQ(parse_contrast_links(ok, samples).size(), 1u);
}

TEST_F(ContrastLinks, EmptyFileGivesEmptyList) {
  TempDir dir;
  write_text(dir / "links.json", "[]");
  EXPECT_TRUE(load_contrast_links(dir / "links.json", samples).empty());
}

TEST_F(ContrastLinks, DanglingReference) {
  const auto doc = nlohmann::json::parse(R"([{"contrast_id": "zz", "original_id": "a", "kind": "semantic_altering"}])");
  EXPECT_EQ(error_kind([&] { parse_contrast_links(doc, samples); }), CorpusError::Kind::DanglingReference);
}

TEST(FixtureCorpus, LoadsCleanly) {
  const auto dir = testing::corpus_dir();
  auto samples = load_samples(dir / "dev.json");
  const auto trials = load_trials(dir / "trials");
  EXPECT_NO_THROW(check_trial_references(samples, trials));
  EXPECT_EQ(load_contrast_links(dir / "contrast_links.json", samples).size(), 2u);
}

}  // namespace
}  // namespace ctrnli
