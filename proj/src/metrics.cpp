#include "ctrnli/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

namespace ctrnli {

namespace {

Label lookup(const LabelMap& labels, const std::string& id) {
  auto it = labels.find(id);
  if (it == labels.end()) throw DanglingReference(id);
  return it->second;
}

}  // namespace

Confusion confusion(const LabelMap& predictions, const LabelMap& gold) {
  Confusion c;
  for (const auto& [id, predicted] : predictions) {
    auto it = gold.find(id);
    if (it == gold.end()) throw MissingGold(id);
    const bool pred_pos = predicted == Label::Entailment;
    const bool gold_pos = it->second == Label::Entailment;
    if (pred_pos && gold_pos) {
      ++c.tp;
    } else if (pred_pos) {
      ++c.fp;
    } else if (gold_pos) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  const auto denominator = 2 * tp + fp + fn;
  return denominator == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denominator);
}

double f1(const LabelMap& predictions, const LabelMap& gold, F1Mode mode) {
  const auto c = confusion(predictions, gold);
  const double entail = f1_from_counts(c.tp, c.fp, c.fn);
  if (mode == F1Mode::EntailmentPositive) return entail;
  // With Contradiction as the positive class the roles of tn/tp and fp/fn swap.
  const double contra = f1_from_counts(c.tn, c.fn, c.fp);
  return (entail + contra) / 2.0;
}

std::optional<double> faithfulness(const LabelMap& predictions, const LabelMap& gold,
                                   std::span<const ContrastPair> links, std::size_t* eligible) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& link : links) {
    if (link.kind != ContrastKind::SemanticAltering) continue;
    const int fy = encode(lookup(predictions, link.original_id));
    const int fx = encode(lookup(predictions, link.contrast_id));
    const int gy = encode(lookup(gold, link.original_id));
    if (fy != gy) continue;
    ++n;
    sum += std::abs(fy - fx);
  }
  if (eligible) *eligible = n;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> consistency(const LabelMap& predictions, const LabelMap&,
                                  std::span<const ContrastPair> links, std::size_t* eligible) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& link : links) {
    if (link.kind != ContrastKind::SemanticPreserving) continue;
    const int fy = encode(lookup(predictions, link.original_id));
    const int fx = encode(lookup(predictions, link.contrast_id));
    ++n;
    sum += 1 - std::abs(fy - fx);
  }
  if (eligible) *eligible = n;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

MetricsReport evaluate(const LabelMap& predictions, const LabelMap& gold, std::span<const ContrastPair> links,
                       F1Mode mode) {
  MetricsReport r;
  r.mode = mode;
  r.counts = confusion(predictions, gold);
  r.f1 = f1(predictions, gold, mode);
  r.faithfulness = faithfulness(predictions, gold, links, &r.n_faithfulness_pairs);
  r.consistency = consistency(predictions, gold, links, &r.n_consistency_pairs);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  const auto optional = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  return {
      {"f1", f1},
      {"f1_mode", mode == F1Mode::Macro ? "macro" : "entailment_positive"},
      {"faithfulness", optional(faithfulness)},
      {"consistency", optional(consistency)},
      {"counts",
       {{"tp", counts.tp},
        {"fp", counts.fp},
        {"fn", counts.fn},
        {"tn", counts.tn},
        {"n_faithfulness_pairs", n_faithfulness_pairs},
        {"n_consistency_pairs", n_consistency_pairs}}},
  };
}

std::string MetricsReport::to_table() const {
  const auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
  };
  const std::vector<std::string> header = {"Base F1", "Consistency", "Faithfulness", "Pairs (C/F)"};
  const std::vector<std::string> values = {
      cell(f1), cell(consistency), cell(faithfulness),
      std::to_string(n_consistency_pairs) + "/" + std::to_string(n_faithfulness_pairs)};
  std::ostringstream out;
  for (const auto* row : {&header, &values}) {
    for (std::size_t i = 0; i < row->size(); ++i) {
      if (i > 0) out << "  ";
      out << std::left << std::setw(static_cast<int>(std::max(header[i].size(), values[i].size()))) << (*row)[i];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ctrnli
