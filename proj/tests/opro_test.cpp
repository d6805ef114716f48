#include <gtest/gtest.h>

#include <random>

#include "ctrnli/opro.hpp"
#include "support/test_support.hpp"

namespace ctrnli {
namespace {

using testing::make_sample;
using testing::TempDir;

std::vector<double> scores(const InstructionPool& pool) {
  std::vector<double> out;
  for (const auto& i : pool.items()) out.push_back(i.f1);
  return out;
}

InstructionPool pool_of(std::size_t capacity, std::vector<double> f1s) {
  InstructionPool pool(capacity);
  for (std::size_t i = 0; i < f1s.size(); ++i) pool = update_pool(pool, Instruction::make("i" + std::to_string(i), f1s[i]));
  return pool;
}

TEST(Instruction, TrimsAndValidates) {
  EXPECT_EQ(Instruction::make("  do it \n", 0.5).text, "do it");
  EXPECT_THROW(Instruction::make("   ", 0.5), std::invalid_argument);
  EXPECT_THROW(Instruction::make("x", 1.5), std::invalid_argument);
  EXPECT_THROW(Instruction::make("x", -0.1), std::invalid_argument);
  EXPECT_THROW(InstructionPool(0), std::invalid_argument);
}

TEST(UpdatePool, Examples) {
  const auto base = pool_of(2, {0.50, 0.60});
  EXPECT_EQ(scores(update_pool(base, Instruction::make("c", 0.55))), (std::vector<double>{0.55, 0.60}));
  EXPECT_EQ(update_pool(base, Instruction::make("c", 0.40)), base);
  EXPECT_EQ(update_pool(base, Instruction::make("c", 0.50)), base);
}

TEST(UpdatePool, CapacityOneKeepsBestSoFar) {
  std::mt19937_64 rng(1);
  InstructionPool pool(1);
  double best = -1;
  for (int i = 0; i < 200; ++i) {
    const double f1 = static_cast<double>(rng() % 101) / 100.0;
    pool = update_pool(pool, Instruction::make("c" + std::to_string(i), f1));
    best = std::max(best, f1);
    ASSERT_EQ(pool.size(), 1u);
    ASSERT_EQ(pool.best().f1, best);
  }
}

TEST(UpdatePool, PropertiesUnderRandomStreams) {
  std::mt19937_64 rng(2);
  for (int round = 0; round < 200; ++round) {
    InstructionPool pool(1 + rng() % 6);
    double previous_min = -1;
    for (int i = 0; i < 30; ++i) {
      pool = update_pool(pool, Instruction::make("c", static_cast<double>(rng() % 21) / 20.0));
      ASSERT_LE(pool.size(), pool.capacity());
      ASSERT_TRUE(std::is_sorted(pool.items().begin(), pool.items().end(),
                                 [](const Instruction& a, const Instruction& b) { return a.f1 < b.f1; }));
      if (pool.size() == pool.capacity()) {
        ASSERT_GE(pool.worst().f1, previous_min);
        previous_min = pool.worst().f1;
      }
    }
  }
}

TEST(InstructionPool, JsonRoundTripAndFile) {
  const auto pool = pool_of(3, {0.25, 0.75});
  EXPECT_EQ(InstructionPool::from_json(pool.to_json()), pool);
  TempDir dir;
  save_pool(pool, dir / "pool.json");
  EXPECT_EQ(load_pool(dir / "pool.json"), pool);
  EXPECT_THROW(InstructionPool::from_json(nlohmann::json::parse(R"({"capacity": 1, "items": [
      {"text": "a", "f1": 0.1}, {"text": "b", "f1": 0.2}]})")),
               std::invalid_argument);
}

TEST(ExtractInstruction, BracketsOrWholeReply) {
  EXPECT_EQ(extract_instruction("Here it is: [Check every number.] Done."), "Check every number.");
  EXPECT_EQ(extract_instruction("  Check every number.\n"), "Check every number.");
  EXPECT_EQ(extract_instruction("[ a ] [b]"), "a");
  EXPECT_EQ(extract_instruction(""), "");
}

TEST(OproEvent, JsonRoundTrip) {
  const OproEvent e{3, "cand \"x\"", 0.625, true};
  EXPECT_EQ(OproEvent::from_json(e.to_json()), e);
  EXPECT_EQ(e.to_json().dump(), R"({"accepted":true,"candidate":"cand \"x\"","f1":0.625,"iter":3})");
}

// Environment with a fixed eval set and a backend driven by a callback.
struct OproHarness {
  std::vector<EvalCase> eval;
  std::shared_ptr<ScriptedBackend> stub;
  std::unique_ptr<LlmClient> client;
  PromptBuilder builder = testing::default_builder();

  OproHarness(std::vector<Label> golds, std::vector<std::string> replies) {
    for (std::size_t i = 0; i < golds.size(); ++i) {
      eval.push_back({make_sample("e" + std::to_string(i), "statement " + std::to_string(i), golds[i]), "evidence"});
    }
    stub = std::make_shared<ScriptedBackend>(std::move(replies));
    client = std::make_unique<LlmClient>(stub, ClientOptions{.model = "m"});
  }
  Engine engine() { return {*client, builder, {}}; }
};

std::string answer(Label l) { return std::string(R"({"answer": ")") + std::string(to_string(l)) + "\"}"; }

// Independent confusion-matrix F1 over a trace.
double oracle_f1(const std::vector<Label>& predicted, const std::vector<Label>& gold) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predicted[i] == Label::Entailment;
    const bool g = gold[i] == Label::Entailment;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return 2 * tp + fp + fn == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
}

TEST(ScoreInstruction, PerfectAndDegenerate) {
  const std::vector<Label> gold = {Label::Entailment, Label::Contradiction, Label::Entailment};
  OproHarness perfect(gold, {answer(gold[0]), answer(gold[1]), answer(gold[2])});
  EXPECT_EQ(score_instruction("I", perfect.eval, perfect.engine()), 1.0);

  const std::vector<Label> all_e(3, Label::Entailment);
  OproHarness degenerate(all_e, {answer(Label::Contradiction), "no idea", answer(Label::Contradiction)});
  EXPECT_EQ(score_instruction("I", degenerate.eval, degenerate.engine()), 0.0);
}

TEST(ScoreInstruction, MatchesConfusionOracleOnTrace) {
  std::mt19937_64 rng(8);
  for (int round = 0; round < 20; ++round) {
    std::vector<Label> gold, scripted;
    std::vector<std::string> replies;
    for (int i = 0; i < 12; ++i) {
      gold.push_back(rng() % 2 ? Label::Entailment : Label::Contradiction);
      const Label p = rng() % 2 ? Label::Entailment : Label::Contradiction;
      scripted.push_back(p);
      replies.push_back(answer(p));
    }
    OproHarness h(gold, replies);
    std::vector<Label> recorded;
    const double f1 = score_instruction("I", h.eval, h.engine(), 1, &recorded);
    EXPECT_EQ(recorded, scripted);
    EXPECT_NEAR(f1, oracle_f1(scripted, gold), 1e-12);
    for (const auto& req : h.stub->requests()) EXPECT_EQ(req.user_text().rfind("I\n", 0), 0u);
  }
}

// Replies for one iteration: the meta reply, then one answer per eval case
// making exactly `correct` of them right (the first `correct` cases).
void script_iteration(std::vector<std::string>& replies, const std::string& meta_reply, const std::vector<Label>& gold,
                      std::size_t correct) {
  replies.push_back(meta_reply);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Label right = gold[i];
    const Label wrong = right == Label::Entailment ? Label::Contradiction : Label::Entailment;
    replies.push_back(answer(i < correct ? right : wrong));
  }
}

TEST(RunOpro, TenIterationsReplayEqualsPool) {
  const std::vector<Label> gold = {Label::Entailment, Label::Contradiction, Label::Entailment, Label::Entailment,
                                   Label::Contradiction, Label::Entailment};
  std::vector<std::string> replies;
  // Seed scoring first.
  for (std::size_t i = 0; i < gold.size(); ++i) replies.push_back(answer(i < 3 ? gold[i] : Label::Contradiction));
  const std::size_t correct_per_iter[] = {1, 4, 6, 2, 5, 3, 6, 0, 5, 4};
  for (int k = 0; k < 10; ++k) {
    script_iteration(replies, "Try: [candidate " + std::to_string(k) + "]", gold, correct_per_iter[k]);
  }
  OproHarness h(gold, replies);
  OproConfig cfg;
  cfg.iterations = 10;
  cfg.capacity = 3;
  cfg.eval_count = gold.size();
  cfg.demo_count = 1;
  OproSplit split{{{"demo evidence", "demo statement", Label::Entailment}}, h.eval};

  const auto engine = h.engine();
  auto seeded = seed_pool(cfg, split.eval, engine);
  std::vector<InstructionPool> snapshots;
  const auto result =
      run_opro(cfg, split, engine, seeded.pool, [&](const OproEvent&, const InstructionPool& p) { snapshots.push_back(p); });
  EXPECT_FALSE(result.aborted);
  EXPECT_EQ(h.stub->remaining(), 0u);
  ASSERT_EQ(result.log.size(), 10u);
  ASSERT_EQ(snapshots.size(), 10u);

  std::vector<OproEvent> full = seeded.log;
  full.insert(full.end(), result.log.begin(), result.log.end());
  InstructionPool replay(cfg.capacity);
  double previous_min = -1;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto& e = full[i];
    EXPECT_EQ(e.iteration, static_cast<int>(i));
    const auto next = update_pool(replay, Instruction::make(e.candidate, e.f1));
    EXPECT_EQ(e.accepted, !(next == replay));
    // While the pool is filling up a low scorer still gets in, so the
    // minimum only has to hold once the pool is full.
    const bool was_full = replay.size() == replay.capacity();
    replay = next;
    if (i > 0) EXPECT_EQ(snapshots[i - 1], replay);
    EXPECT_LE(replay.size(), cfg.capacity);
    if (was_full) EXPECT_GE(replay.worst().f1, previous_min);
    previous_min = replay.worst().f1;
  }
  EXPECT_EQ(replay, result.pool);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_EQ(result.log[k].candidate, "candidate " + std::to_string(k));
  }
  EXPECT_EQ(result.pool.best().f1, 1.0);
}

TEST(RunOpro, ZeroIterationsReturnsInitial) {
  OproHarness h({Label::Entailment}, {});
  OproConfig cfg;
  cfg.iterations = 0;
  const auto initial = pool_of(2, {0.3});
  const auto result = run_opro(cfg, {{{"e", "s", Label::Entailment}}, h.eval}, h.engine(), initial);
  EXPECT_EQ(result.pool, initial);
  EXPECT_TRUE(result.log.empty());
  EXPECT_EQ(h.stub->consumed(), 0u);
}

TEST(RunOpro, MetaRequestsUseSamplingAndDistinctSeeds) {
  const std::vector<Label> gold = {Label::Entailment};
  std::vector<std::string> replies;
  script_iteration(replies, "[same]", gold, 1);
  script_iteration(replies, "[same]", gold, 0);
  OproHarness h(gold, replies);
  OproConfig cfg;
  cfg.iterations = 2;
  run_opro(cfg, {{{"e", "s", Label::Entailment}}, h.eval}, h.engine(), InstructionPool(2));
  std::vector<std::optional<std::uint64_t>> seeds;
  for (const auto& req : h.stub->requests()) {
    if (testing::is_meta_prompt(req.user_text())) {
      EXPECT_TRUE(req.params().sampling_enabled());
      seeds.push_back(req.params().seed());
    } else {
      EXPECT_FALSE(req.params().sampling_enabled());
    }
  }
  ASSERT_EQ(seeds.size(), 2u);
  EXPECT_NE(seeds[0], seeds[1]);
}

TEST(RunOpro, EndpointFailureAbortsWithPartialLog) {
  const std::vector<Label> gold = {Label::Entailment, Label::Contradiction};
  std::vector<std::string> replies;
  script_iteration(replies, "[first]", gold, 2);
  replies.push_back("[second]");  // its scoring calls run past the script
  OproHarness h(gold, replies);
  OproConfig cfg;
  cfg.iterations = 5;
  const auto result = run_opro(cfg, {{{"e", "s", Label::Entailment}}, h.eval}, h.engine(), InstructionPool(2));
  ASSERT_TRUE(result.aborted);
  ASSERT_EQ(result.log.size(), 1u);
  EXPECT_EQ(result.log[0].candidate, "first");
  EXPECT_EQ(result.pool.size(), 1u);
}

TEST(RunOpro, EmptyCandidateIsLoggedNotScored) {
  const std::vector<Label> gold = {Label::Entailment};
  OproHarness h(gold, {"[   ]"});
  OproConfig cfg;
  cfg.iterations = 1;
  const auto result = run_opro(cfg, {{{"e", "s", Label::Entailment}}, h.eval}, h.engine(), InstructionPool(2));
  ASSERT_EQ(result.log.size(), 1u);
  EXPECT_FALSE(result.log[0].accepted);
  EXPECT_EQ(h.stub->consumed(), 1u);
}

TEST(SelectOproSamples, DisjointDeterministicAndSized) {
  SampleMap samples;
  TrialMap trials{{"NCT1", testing::make_trial("NCT1", {"line"})}};
  for (int i = 0; i < 30; ++i) {
    auto s = make_sample("s" + std::to_string(100 + i), "statement " + std::to_string(i),
                         i % 2 ? Label::Entailment : Label::Contradiction);
    if (i % 10 == 0) s.gold.reset();
    samples[s.id] = s;
  }
  OproConfig cfg;
  cfg.demo_count = 5;
  cfg.eval_count = 20;
  cfg.seed = 4;
  const auto a = select_opro_samples(samples, trials, cfg);
  const auto b = select_opro_samples(samples, trials, cfg);
  ASSERT_EQ(a.demos.size(), 5u);
  ASSERT_EQ(a.eval.size(), 20u);
  std::set<std::string> demo_statements, eval_statements;
  for (const auto& d : a.demos) demo_statements.insert(d.statement);
  for (const auto& e : a.eval) {
    EXPECT_TRUE(e.sample.gold.has_value());
    eval_statements.insert(e.sample.statement);
  }
  for (const auto& s : demo_statements) EXPECT_FALSE(eval_statements.count(s));
  EXPECT_TRUE(std::is_sorted(a.eval.begin(), a.eval.end(),
                             [](const EvalCase& x, const EvalCase& y) { return x.sample.id < y.sample.id; }));
  for (std::size_t i = 0; i < a.eval.size(); ++i) EXPECT_EQ(a.eval[i].sample, b.eval[i].sample);

  cfg.eval_count = 23;
  EXPECT_THROW(select_opro_samples(samples, trials, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace ctrnli
