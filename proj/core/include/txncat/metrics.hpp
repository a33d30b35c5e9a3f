#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "txncat/model.hpp"
#include "txncat/taxonomy.hpp"
#include "txncat/train.hpp"

namespace txncat {

/// Per-class and aggregate precision/recall/F1 for one taxonomy level, plus
/// the gold-by-predicted confusion matrix. Aggregates are the unweighted mean
/// over classes present in the gold labels.
struct LevelMetrics {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::uint8_t> present;
  std::vector<std::vector<std::uint32_t>> confusion;  // [gold][predicted]
  double aggregate_precision = 0.0;
  double aggregate_recall = 0.0;
  double aggregate_f1 = 0.0;
};

struct Metrics {
  LevelMetrics macro_level;
  LevelMetrics micro_level;
  bool with_tal = true;
  /// Final (macro, micro) predictions whose micro is not a child of the
  /// macro. Exactly zero whenever the taxonomy correction is applied.
  std::size_t hierarchy_violations = 0;
};

LevelMetrics level_metrics(std::span<const std::pair<std::size_t, std::size_t>>
                               gold_predicted_pairs,
                           std::size_t n_classes);

/// Forward passes over the dataset, labels via argmax (taxonomy-corrected
/// micro when with_tal), confusion counts at both levels.
Metrics evaluate(const Model& model, std::span<const EncodedExample> examples,
                 const Taxonomy& taxonomy, bool with_tal);

/// One evaluated fold; either TAL variant may be absent (--no-tal runs).
struct FoldEval {
  std::optional<Metrics> with_tal;
  std::optional<Metrics> without_tal;
};

/// Deterministic JSON document: keys sorted, floats fixed-format, integers
/// plain. config_echo entries are copied into the "config" object verbatim.
std::string metrics_json(std::span<const FoldEval> folds, const Taxonomy& taxonomy,
                         const std::map<std::string, std::string>& config_echo);

}  // namespace txncat
