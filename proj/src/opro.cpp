#include "ctrnli/opro.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "ctrnli/file_util.hpp"
#include "ctrnli/metrics.hpp"
#include "ctrnli/parallel.hpp"

namespace ctrnli {

Instruction Instruction::make(std::string_view text, double f1) {
  auto stripped = trim(text);
  if (stripped.empty()) throw std::invalid_argument("instruction text is empty");
  if (!(f1 >= 0.0 && f1 <= 1.0)) throw std::invalid_argument("instruction F1 outside [0, 1]");
  return {std::move(stripped), f1};
}

InstructionPool::InstructionPool(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("instruction pool capacity must be positive");
}

const Instruction& InstructionPool::worst() const {
  if (items_.empty()) throw std::logic_error("empty instruction pool");
  return items_.front();
}

const Instruction& InstructionPool::best() const {
  if (items_.empty()) throw std::logic_error("empty instruction pool");
  return items_.back();
}

nlohmann::json InstructionPool::to_json() const {
  auto items = nlohmann::json::array();
  for (const auto& i : items_) items.push_back({{"text", i.text}, {"f1", i.f1}});
  return {{"capacity", capacity_}, {"items", std::move(items)}};
}

InstructionPool InstructionPool::from_json(const nlohmann::json& doc) {
  InstructionPool pool(doc.at("capacity").get<std::size_t>());
  for (const auto& item : doc.at("items")) {
    pool = update_pool(std::move(pool), Instruction::make(item.at("text").get<std::string>(), item.at("f1").get<double>()));
  }
  if (pool.size() != doc.at("items").size()) {
    throw std::invalid_argument("pool file holds more items than its capacity");
  }
  return pool;
}

InstructionPool update_pool(InstructionPool pool, Instruction candidate) {
  auto& items = pool.items_;
  if (items.size() >= pool.capacity_) {
    if (!(candidate.f1 > items.front().f1)) return pool;
    items.erase(items.begin());
  }
  const auto pos = std::upper_bound(items.begin(), items.end(), candidate.f1,
                                    [](double f1, const Instruction& i) { return f1 < i.f1; });
  items.insert(pos, std::move(candidate));
  return pool;
}

InstructionPool load_pool(const std::filesystem::path& path) {
  return InstructionPool::from_json(read_json_file(path));
}

void save_pool(const InstructionPool& pool, const std::filesystem::path& path) {
  write_file_atomic(path, pool.to_json().dump(2) + "\n");
}

void OproConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (demo_count == 0 || eval_count == 0 || capacity == 0 || workers == 0) {
    throw std::invalid_argument("demo_count, eval_count, capacity, and workers must be positive");
  }
  if (trim(seed_instruction).empty()) throw std::invalid_argument("seed instruction is empty");
}

OproSplit select_opro_samples(const SampleMap& samples, const TrialMap& trials, const OproConfig& config,
                              const SubtitleRule& rule) {
  config.validate();
  std::vector<const Sample*> labeled;
  for (const auto& [id, s] : samples) {
    if (s.gold) labeled.push_back(&s);
  }
  if (labeled.size() < config.demo_count + config.eval_count) {
    throw std::invalid_argument("OPRO needs " + std::to_string(config.demo_count + config.eval_count) +
                                " gold-labeled samples, found " + std::to_string(labeled.size()));
  }
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = labeled.size(); i > 1; --i) {
    std::swap(labeled[i - 1], labeled[rng() % i]);
  }
  OproSplit split;
  for (std::size_t i = 0; i < config.demo_count; ++i) {
    const auto& s = *labeled[i];
    split.demos.push_back({render_evidence(s, trials, rule), s.statement, *s.gold});
  }
  std::vector<const Sample*> eval(labeled.begin() + static_cast<std::ptrdiff_t>(config.demo_count),
                                  labeled.begin() + static_cast<std::ptrdiff_t>(config.demo_count + config.eval_count));
  std::sort(eval.begin(), eval.end(), [](const Sample* a, const Sample* b) { return a->id < b->id; });
  for (const auto* s : eval) {
    split.eval.push_back({*s, render_evidence(*s, trials, rule)});
  }
  return split;
}

std::string extract_instruction(std::string_view reply) {
  const auto open = reply.find('[');
  if (open != std::string_view::npos) {
    const auto close = reply.find(']', open + 1);
    if (close != std::string_view::npos) return trim(reply.substr(open + 1, close - open - 1));
  }
  return trim(reply);
}

double score_instruction(const std::string& instruction, std::span<const EvalCase> eval, const Engine& engine,
                         std::size_t workers, std::vector<Label>* predictions) {
  std::vector<Label> labels(eval.size());
  parallel_for(eval.size(), workers, [&](std::size_t i) {
    const auto& c = eval[i];
    labels[i] = run_single(engine, engine.prompts.build_opro_predict(instruction, c.sample, c.evidence)).answer.label;
  });
  LabelMap predicted;
  LabelMap gold;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto& s = eval[i].sample;
    if (!s.gold) throw std::invalid_argument("eval sample " + s.id + " has no gold label");
    predicted[s.id] = labels[i];
    gold[s.id] = *s.gold;
  }
  if (predictions) *predictions = std::move(labels);
  return f1(predicted, gold);
}

nlohmann::json OproEvent::to_json() const {
  return {{"iter", iteration}, {"candidate", candidate}, {"f1", f1}, {"accepted", accepted}};
}

OproEvent OproEvent::from_json(const nlohmann::json& doc) {
  return {doc.at("iter").get<int>(), doc.at("candidate").get<std::string>(), doc.at("f1").get<double>(),
          doc.at("accepted").get<bool>()};
}

OproResult seed_pool(const OproConfig& config, std::span<const EvalCase> eval, const Engine& engine) {
  config.validate();
  const auto seed = Instruction::make(config.seed_instruction, 0.0);
  const double score = score_instruction(seed.text, eval, engine, config.workers);
  OproResult result{update_pool(InstructionPool(config.capacity), Instruction::make(seed.text, score)), {}, {}};
  result.log.push_back({0, seed.text, score, true});
  return result;
}

OproResult run_opro(const OproConfig& config, const OproSplit& split, const Engine& engine, InstructionPool initial,
                    const OproEventSink& sink) {
  config.validate();
  OproResult result{std::move(initial), {}, {}};
  for (int iteration = 1; iteration <= config.iterations; ++iteration) {
    OproEvent event;
    event.iteration = iteration;
    try {
      const auto request_seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(iteration);
      const auto meta = engine.prompts.build_opro_meta(result.pool, split.demos, request_seed);
      event.candidate = extract_instruction(engine.client.complete(meta).content);
      if (!event.candidate.empty()) {
        event.f1 = score_instruction(event.candidate, split.eval, engine, config.workers);
      }
    } catch (const LlmError& e) {
      result.aborted = "iteration " + std::to_string(iteration) + ": " + e.what();
      return result;
    }
    if (!event.candidate.empty()) {
      const auto before = result.pool;
      result.pool = update_pool(std::move(result.pool), Instruction::make(event.candidate, event.f1));
      event.accepted = !(result.pool == before);
    }
    result.log.push_back(event);
    if (sink) sink(event, result.pool);
  }
  return result;
}

}  // namespace ctrnli
