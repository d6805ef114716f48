#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctrnli/answer.hpp"
#include "ctrnli/corpus.hpp"

namespace ctrnli {

class Embedding {
 public:
  Embedding() = default;
  // Throws std::invalid_argument on an empty vector or non-finite values.
  explicit Embedding(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

class DimMismatch : public std::invalid_argument {
 public:
  DimMismatch(std::size_t a, std::size_t b);
};

// Sum of squared component differences.
double squared_l2(const Embedding& a, const Embedding& b);

class ProviderUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  // Deterministic per provider; must be safe to call concurrently.
  virtual Embedding embed(std::string_view text) = 0;
};

/// Offline provider: hashes the text and expands it into a seeded
/// pseudo-random vector in [-1, 1)^dim. Carries no semantic similarity.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim, std::uint64_t seed = 0);

  std::size_t dim() const override { return dim_; }
  Embedding embed(std::string_view text) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// OpenAI-compatible embeddings endpoint (POST {base}/embeddings).
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string url, std::string model, std::size_t dim, std::string api_key_env = "OPENAI_API_KEY");

  std::size_t dim() const override { return dim_; }
  Embedding embed(std::string_view text) override;

 private:
  std::string origin_;
  std::string path_;
  std::string model_;
  std::size_t dim_;
  std::string token_;
};

struct Exemplar {
  std::string sample_id;
  std::string statement;
  Embedding embedding;
  std::string reasoning;
  Label label = Label::Contradiction;
  SampleType type = SampleType::Single;
  SectionId section = SectionId::Results;

  bool operator==(const Exemplar&) const = default;
};

class EmptyStore : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExemplarStore {
 public:
  explicit ExemplarStore(std::size_t dim);

  // Rejects a wrong dimension, a duplicate id, or empty reasoning.
  void add(Exemplar exemplar);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return exemplars_.size(); }
  bool empty() const { return exemplars_.empty(); }
  const std::vector<Exemplar>& exemplars() const { return exemplars_; }

  // One JSON object per line: sample_id, statement, embedding, reasoning,
  // label, type, section.
  void save(const std::filesystem::path& path) const;
  static ExemplarStore load(const std::filesystem::path& path);

 private:
  std::size_t dim_;
  std::vector<Exemplar> exemplars_;
};

struct SelectionOptions {
  // Prefer same-section over same-type candidates when "both" is unavailable.
  bool section_before_type = true;
  // Skip exemplars whose statement equals the query statement. If that
  // leaves nothing, the full store is used.
  bool exclude_identical_statement = true;
};

// Preference tier of a candidate for a query, 0 (best) to 3.
int selection_tier(const Sample& query, const Exemplar& candidate, const SelectionOptions& options = {});

/// Minimum-distance exemplar in the best nonempty tier; ties go to the
/// smallest sample_id. Throws EmptyStore on an empty store.
const Exemplar& select_exemplar(const Sample& query, const Embedding& query_embedding, const ExemplarStore& store,
                                const SelectionOptions& options = {});

// Result of one zero-shot chain-of-thought pass over a sample.
struct CotOutcome {
  std::string reasoning;
  ParsedAnswer answer;
  std::vector<std::string> prompt_hashes;
};

using CotPipeline = std::function<CotOutcome(const Sample&)>;

/// Runs the pipeline over every training sample and keeps those predicted
/// correctly. Samples must carry gold labels. LLM errors propagate.
/// Throws EmptyStore when no sample qualifies.
ExemplarStore build_store(std::span<const Sample> train, const CotPipeline& pipeline, EmbeddingProvider& provider,
                          std::size_t workers = 1);

}  // namespace ctrnli
