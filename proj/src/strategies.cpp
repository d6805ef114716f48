#include "ctrnli/strategies.hpp"

#include <chrono>
#include <ctime>
#include <mutex>

#include "ctrnli/file_util.hpp"
#include "ctrnli/parallel.hpp"

namespace ctrnli {

namespace {

using PerSample = std::function<Prediction(const Sample&)>;

std::vector<Prediction> run_each(const SampleMap& samples, const RunOptions& options, const PerSample& predict) {
  std::vector<const Sample*> order;
  order.reserve(samples.size());
  for (const auto& [id, s] : samples) order.push_back(&s);

  std::vector<Prediction> out(order.size());
  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(
      order.size(), options.workers,
      [&](std::size_t i) {
        const auto& sample = *order[i];
        try {
          out[i] = predict(sample);
        } catch (const std::exception& e) {
          out[i] = Prediction{};
          out[i].error = e.what();
        }
        out[i].sample_id = sample.id;
        std::lock_guard lock(progress_mutex);
        ++done;
        if (options.on_checkpoint && options.checkpoint_every > 0 && done % options.checkpoint_every == 0) {
          options.on_checkpoint(done, order.size());
        }
      },
      options.cancel);
  return out;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::ZeroShotCot:
      return "zeroshot-cot";
    case Strategy::DynamicOneShot:
      return "oneshot";
    case Strategy::Opro:
      return "opro";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : {Strategy::ZeroShotCot, Strategy::DynamicOneShot, Strategy::Opro}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::vector<Prediction> run_zero_shot_cot(const SampleMap& samples, const TrialMap& trials, const Engine& engine,
                                          const RunOptions& options) {
  return run_each(samples, options, [&](const Sample& sample) {
    auto outcome = run_cot(engine, sample, render_evidence(sample, trials, options.subtitles));
    Prediction p;
    p.label = outcome.answer.label;
    p.status = outcome.answer.status;
    p.reasoning = std::move(outcome.reasoning);
    p.prompt_hashes = std::move(outcome.prompt_hashes);
    return p;
  });
}

std::vector<Prediction> run_dynamic_one_shot(const SampleMap& samples, const TrialMap& trials,
                                             const ExemplarStore& store, EmbeddingProvider& embeddings,
                                             const Engine& engine, const SelectionOptions& selection,
                                             const RunOptions& options) {
  if (store.empty()) throw EmptyStore("dynamic one-shot needs a nonempty exemplar store");
  return run_each(samples, options, [&](const Sample& sample) {
    const auto& exemplar = select_exemplar(sample, embeddings.embed(sample.statement), store, selection);
    const auto request =
        engine.prompts.build_oneshot(sample, render_evidence(sample, trials, options.subtitles), exemplar);
    auto outcome = run_single(engine, request);
    Prediction p;
    p.label = outcome.answer.label;
    p.status = outcome.answer.status;
    p.reasoning = std::move(outcome.raw);
    p.exemplar_id = exemplar.sample_id;
    p.prompt_hashes = {std::move(outcome.prompt_hash)};
    return p;
  });
}

std::vector<Prediction> run_opro_predict(const SampleMap& samples, const TrialMap& trials,
                                         const InstructionPool& pool, const Engine& engine,
                                         const RunOptions& options) {
  if (pool.empty()) throw std::invalid_argument("OPRO prediction needs a nonempty instruction pool");
  const auto instruction = pool.best().text;
  return run_each(samples, options, [&](const Sample& sample) {
    const auto request =
        engine.prompts.build_opro_predict(instruction, sample, render_evidence(sample, trials, options.subtitles));
    auto outcome = run_single(engine, request);
    Prediction p;
    p.label = outcome.answer.label;
    p.status = outcome.answer.status;
    p.prompt_hashes = {std::move(outcome.prompt_hash)};
    return p;
  });
}

nlohmann::json predictions_json(const std::vector<Prediction>& predictions) {
  auto doc = nlohmann::json::object();
  for (const auto& p : predictions) {
    doc[p.sample_id] = {{"Prediction", to_string(p.label)}};
  }
  return doc;
}

nlohmann::json details_json(const std::vector<Prediction>& predictions) {
  auto doc = nlohmann::json::object();
  for (const auto& p : predictions) {
    nlohmann::json record = {
        {"label", to_string(p.label)},
        {"status", to_string(p.status)},
        {"prompt_hashes", p.prompt_hashes},
    };
    if (p.reasoning) record["reasoning"] = *p.reasoning;
    if (p.exemplar_id) record["exemplar_id"] = *p.exemplar_id;
    if (p.error) record["error"] = *p.error;
    doc[p.sample_id] = std::move(record);
  }
  return doc;
}

LabelMap parse_predictions(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("predictions document must be a JSON object");
  LabelMap out;
  for (const auto& [id, record] : doc.items()) {
    if (!record.is_object() || record.size() != 1 || !record.contains("Prediction") ||
        !record["Prediction"].is_string()) {
      throw std::invalid_argument("prediction " + id + " must be {\"Prediction\": <label>}");
    }
    const auto label = parse_label_name(record["Prediction"].get<std::string>());
    if (!label) throw std::invalid_argument("prediction " + id + " has an unknown label");
    out[id] = *label;
  }
  return out;
}

LabelMap load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_json_file(path));
}

nlohmann::json RunManifest::to_json() const {
  return {
      {"strategy", to_string(strategy)},
      {"model", model},
      {"template_versions", template_versions},
      {"config", config},
      {"command", command},
      {"started_at", started_at},
      {"finished_at", finished_at ? nlohmann::json(*finished_at) : nlohmann::json()},
      {"status", status},
      {"total", total},
      {"completed", completed},
      {"failures", failures},
      {"backend_calls", backend_calls},
      {"cache_hits", cache_hits},
  };
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace ctrnli
