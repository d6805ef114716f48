#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrnli/corpus.hpp"
#include "ctrnli/exemplars.hpp"
#include "ctrnli/instruction_pool.hpp"
#include "ctrnli/metrics.hpp"
#include "ctrnli/pipeline.hpp"

namespace ctrnli {

enum class Strategy { ZeroShotCot, DynamicOneShot, Opro };

std::string_view to_string(Strategy strategy);
// Accepts the CLI spellings: zeroshot-cot, oneshot, opro.
std::optional<Strategy> parse_strategy(std::string_view name);

struct Prediction {
  std::string sample_id;
  Label label = Label::Contradiction;
  AnswerStatus status = AnswerStatus::Fallback;
  std::optional<std::string> reasoning;
  std::optional<std::string> exemplar_id;  // dynamic one-shot only
  std::vector<std::string> prompt_hashes;
  std::optional<std::string> error;  // set when the sample failed and fell back

  bool operator==(const Prediction&) const = default;
};

struct RunOptions {
  std::size_t workers = 4;
  const std::atomic<bool>* cancel = nullptr;
  SubtitleRule subtitles;
  std::size_t checkpoint_every = 25;
  // Called (serialized) each time another `checkpoint_every` samples finish.
  std::function<void(std::size_t done, std::size_t total)> on_checkpoint;
};

// All runners return one prediction per input sample in id order. A sample
// whose calls fail is recorded as a Fallback prediction with `error` set.
// Throws Cancelled if options.cancel fires before every sample is done.

std::vector<Prediction> run_zero_shot_cot(const SampleMap& samples, const TrialMap& trials, const Engine& engine,
                                          const RunOptions& options = {});

// Throws EmptyStore on an empty store.
std::vector<Prediction> run_dynamic_one_shot(const SampleMap& samples, const TrialMap& trials,
                                             const ExemplarStore& store, EmbeddingProvider& embeddings,
                                             const Engine& engine, const SelectionOptions& selection = {},
                                             const RunOptions& options = {});

// Uses the pool's highest-F1 instruction. Throws std::invalid_argument on an
// empty pool.
std::vector<Prediction> run_opro_predict(const SampleMap& samples, const TrialMap& trials,
                                         const InstructionPool& pool, const Engine& engine,
                                         const RunOptions& options = {});

// {"<id>": {"Prediction": "Entailment" | "Contradiction"}}
nlohmann::json predictions_json(const std::vector<Prediction>& predictions);
// Per-sample status, reasoning, exemplar id, prompt hashes, and error note.
nlohmann::json details_json(const std::vector<Prediction>& predictions);

LabelMap parse_predictions(const nlohmann::json& doc);
LabelMap load_predictions(const std::filesystem::path& path);

struct RunManifest {
  Strategy strategy = Strategy::ZeroShotCot;
  std::string model;
  std::map<std::string, std::string> template_versions;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> command;
  std::string started_at;
  std::optional<std::string> finished_at;
  std::string status = "running";  // running | complete | partial | failed | interrupted
  std::size_t total = 0;
  std::size_t completed = 0;
  std::size_t failures = 0;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;

  nlohmann::json to_json() const;
};

std::string utc_timestamp();

}  // namespace ctrnli
