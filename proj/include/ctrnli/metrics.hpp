#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ctrnli/corpus.hpp"

namespace ctrnli {

using LabelMap = std::map<std::string, Label>;

class MissingGold : public std::invalid_argument {
 public:
  explicit MissingGold(const std::string& id) : std::invalid_argument("no gold label for " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class DanglingReference : public std::invalid_argument {
 public:
  explicit DanglingReference(const std::string& id)
      : std::invalid_argument("contrast link references " + id + ", which has no prediction or gold label"),
        id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

enum class F1Mode { EntailmentPositive, Macro };

struct Confusion {
  std::size_t tp = 0;  // positive class: Entailment
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

Confusion confusion(const LabelMap& predictions, const LabelMap& gold);

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Throws MissingGold if a predicted id has no gold label.
double f1(const LabelMap& predictions, const LabelMap& gold, F1Mode mode = F1Mode::EntailmentPositive);

/// Mean |f(y) - f(x)| over semantic-altering pairs whose original y was
/// predicted correctly. Empty when no pair is eligible.
std::optional<double> faithfulness(const LabelMap& predictions, const LabelMap& gold,
                                   std::span<const ContrastPair> links, std::size_t* eligible = nullptr);

/// Mean 1 - |f(y) - f(x)| over semantic-preserving pairs. Empty when there
/// are none.
std::optional<double> consistency(const LabelMap& predictions, const LabelMap& gold,
                                  std::span<const ContrastPair> links, std::size_t* eligible = nullptr);

struct MetricsReport {
  double f1 = 0.0;
  std::optional<double> faithfulness;
  std::optional<double> consistency;
  Confusion counts;
  std::size_t n_faithfulness_pairs = 0;
  std::size_t n_consistency_pairs = 0;
  F1Mode mode = F1Mode::EntailmentPositive;

  nlohmann::json to_json() const;
  // Aligned two-row table: header and values, absent metrics shown as "n/a".
  std::string to_table() const;
};

MetricsReport evaluate(const LabelMap& predictions, const LabelMap& gold, std::span<const ContrastPair> links,
                       F1Mode mode = F1Mode::EntailmentPositive);

}  // namespace ctrnli
