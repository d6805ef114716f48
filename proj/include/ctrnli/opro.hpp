#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrnli/corpus.hpp"
#include "ctrnli/instruction_pool.hpp"
#include "ctrnli/pipeline.hpp"

namespace ctrnli {

inline constexpr std::string_view kSeedInstruction =
    "Decide whether the statement is entailed by or contradicts the report.";

struct OproConfig {
  int iterations = 10;
  std::size_t demo_count = 8;   // N: examples shown in the meta-prompt
  std::size_t eval_count = 50;  // M: held-out samples each candidate is scored on
  std::size_t capacity = 8;     // P: pool size
  std::uint64_t seed = 0;       // sample split and per-iteration request seeds
  std::size_t workers = 1;      // parallel scoring calls within an iteration
  std::string seed_instruction = std::string(kSeedInstruction);

  // Throws std::invalid_argument on non-positive counts.
  void validate() const;
};

struct EvalCase {
  Sample sample;  // carries a gold label
  std::string evidence;
};

struct OproSplit {
  std::vector<LabeledDemo> demos;
  std::vector<EvalCase> eval;
};

/// Draws disjoint demo and eval sets from the gold-labeled samples with a
/// seeded shuffle of the id-sorted list. Throws std::invalid_argument if
/// fewer than demo_count + eval_count labeled samples exist.
OproSplit select_opro_samples(const SampleMap& samples, const TrialMap& trials, const OproConfig& config,
                              const SubtitleRule& rule = {});

// Text inside the first [...] of the reply if there is one, else the whole
// trimmed reply.
std::string extract_instruction(std::string_view reply);

/// Single-call prediction with `instruction` on each eval case, then F1.
/// `predictions`, when given, receives the per-case labels in eval order.
double score_instruction(const std::string& instruction, std::span<const EvalCase> eval, const Engine& engine,
                         std::size_t workers = 1, std::vector<Label>* predictions = nullptr);

struct OproEvent {
  int iteration = 0;  // 0 = seed instruction
  std::string candidate;
  double f1 = 0.0;
  bool accepted = false;

  nlohmann::json to_json() const;
  static OproEvent from_json(const nlohmann::json& doc);
  bool operator==(const OproEvent&) const = default;
};

struct OproResult {
  InstructionPool pool;
  std::vector<OproEvent> log;
  std::optional<std::string> aborted;  // reason, if an LLM error stopped the run
};

using OproEventSink = std::function<void(const OproEvent&, const InstructionPool&)>;

// Scores the seed instruction and returns a pool holding it.
OproResult seed_pool(const OproConfig& config, std::span<const EvalCase> eval, const Engine& engine);

/// Runs `config.iterations` rounds of generate-score-update starting from
/// `initial`. The sink sees every event after the pool update. An LLM error
/// ends the run early with `aborted` set and the log so far.
OproResult run_opro(const OproConfig& config, const OproSplit& split, const Engine& engine, InstructionPool initial,
                    const OproEventSink& sink = {});

}  // namespace ctrnli
