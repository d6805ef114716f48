#include "ctrnli/exemplars.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "ctrnli/file_util.hpp"
#include "ctrnli/parallel.hpp"

namespace ctrnli {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("embedding must have positive dimension");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("embedding holds a non-finite value");
  }
}

DimMismatch::DimMismatch(std::size_t a, std::size_t b)
    : std::invalid_argument("embedding dimensions differ: " + std::to_string(a) + " vs " + std::to_string(b)) {}

double squared_l2(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) throw DimMismatch(a.dim(), b.dim());
  const auto x = a.values();
  const auto y = b.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum;
}

ExemplarStore::ExemplarStore(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("exemplar store dimension must be positive");
}

void ExemplarStore::add(Exemplar exemplar) {
  if (exemplar.embedding.dim() != dim_) throw DimMismatch(exemplar.embedding.dim(), dim_);
  if (trim(exemplar.reasoning).empty()) {
    throw std::invalid_argument("exemplar " + exemplar.sample_id + " has empty reasoning");
  }
  for (const auto& e : exemplars_) {
    if (e.sample_id == exemplar.sample_id) {
      throw std::invalid_argument("duplicate exemplar id " + exemplar.sample_id);
    }
  }
  exemplars_.push_back(std::move(exemplar));
}

void ExemplarStore::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (const auto& e : exemplars_) {
    const nlohmann::json record = {
        {"sample_id", e.sample_id},
        {"statement", e.statement},
        {"embedding", std::vector<double>(e.embedding.values().begin(), e.embedding.values().end())},
        {"reasoning", e.reasoning},
        {"label", to_string(e.label)},
        {"type", to_string(e.type)},
        {"section", to_string(e.section)},
    };
    out << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
  write_file_atomic(path, out.str());
}

ExemplarStore ExemplarStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open exemplar store " + path.string());
  std::optional<ExemplarStore> store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    try {
      const auto record = nlohmann::json::parse(line);
      Exemplar e;
      e.sample_id = record.at("sample_id").get<std::string>();
      e.statement = record.at("statement").get<std::string>();
      e.embedding = Embedding(record.at("embedding").get<std::vector<double>>());
      e.reasoning = record.at("reasoning").get<std::string>();
      const auto label = parse_label_name(record.at("label").get<std::string>());
      const auto type = parse_sample_type(record.at("type").get<std::string>());
      const auto section = parse_section_name(record.at("section").get<std::string>());
      if (!label || !type || !section) throw std::invalid_argument("unknown label, type, or section");
      e.label = *label;
      e.type = *type;
      e.section = *section;
      if (!store) store.emplace(e.embedding.dim());
      store->add(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error(where + ": " + ex.what());
    }
  }
  if (!store) throw EmptyStore("exemplar store " + path.string() + " is empty");
  return std::move(*store);
}

int selection_tier(const Sample& query, const Exemplar& candidate, const SelectionOptions& options) {
  const bool same_type = query.type == candidate.type;
  const bool same_section = query.section == candidate.section;
  if (same_type && same_section) return 0;
  if (same_section && !same_type) return options.section_before_type ? 1 : 2;
  if (same_type && !same_section) return options.section_before_type ? 2 : 1;
  return 3;
}

const Exemplar& select_exemplar(const Sample& query, const Embedding& query_embedding, const ExemplarStore& store,
                                const SelectionOptions& options) {
  if (store.empty()) throw EmptyStore("cannot select from an empty exemplar store");
  const auto pick = [&](bool skip_identical) -> const Exemplar* {
    const Exemplar* best = nullptr;
    std::tuple<int, double, std::string_view> best_key;
    for (const auto& e : store.exemplars()) {
      if (skip_identical && e.statement == query.statement) continue;
      const std::tuple<int, double, std::string_view> key{selection_tier(query, e, options),
                                                          squared_l2(query_embedding, e.embedding), e.sample_id};
      if (!best || key < best_key) {
        best = &e;
        best_key = key;
      }
    }
    return best;
  };
  if (options.exclude_identical_statement) {
    if (const auto* e = pick(true)) return *e;
  }
  return *pick(false);
}

ExemplarStore build_store(std::span<const Sample> train, const CotPipeline& pipeline, EmbeddingProvider& provider,
                          std::size_t workers) {
  for (const auto& s : train) {
    if (!s.gold) throw std::invalid_argument("training sample " + s.id + " has no gold label");
  }
  std::vector<std::optional<Exemplar>> kept(train.size());
  parallel_for(train.size(), workers, [&](std::size_t i) {
    const auto& sample = train[i];
    auto outcome = pipeline(sample);
    if (outcome.answer.label != *sample.gold || trim(outcome.reasoning).empty()) return;
    kept[i] = Exemplar{sample.id,       sample.statement,     provider.embed(sample.statement), std::move(outcome.reasoning),
                       *sample.gold,    sample.type,          sample.section};
  });
  ExemplarStore store(provider.dim());
  for (auto& e : kept) {
    if (e) store.add(std::move(*e));
  }
  if (store.empty()) throw EmptyStore("no training sample was predicted correctly");
  return store;
}

}  // namespace ctrnli
