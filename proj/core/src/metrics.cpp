#include "txncat/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "txncat/error.hpp"

namespace txncat {

LevelMetrics level_metrics(
    std::span<const std::pair<std::size_t, std::size_t>> gold_predicted_pairs,
    std::size_t n_classes) {
  LevelMetrics m;
  m.precision.assign(n_classes, 0.0);
  m.recall.assign(n_classes, 0.0);
  m.f1.assign(n_classes, 0.0);
  m.present.assign(n_classes, 0);
  m.confusion.assign(n_classes, std::vector<std::uint32_t>(n_classes, 0));
  for (const auto& [gold, predicted] : gold_predicted_pairs) {
    if (gold >= n_classes || predicted >= n_classes) {
      throw IndexError("level_metrics: class index out of range");
    }
    ++m.confusion[gold][predicted];
    m.present[gold] = 1;
  }
  std::size_t n_present = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::size_t tp = m.confusion[c][c], fn = 0, fp = 0;
    for (std::size_t other = 0; other < n_classes; ++other) {
      if (other == c) continue;
      fn += m.confusion[c][other];
      fp += m.confusion[other][c];
    }
    m.precision[c] = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall[c] = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double pr = m.precision[c] + m.recall[c];
    m.f1[c] = pr > 0.0 ? 2.0 * m.precision[c] * m.recall[c] / pr : 0.0;
    if (m.present[c]) {
      ++n_present;
      m.aggregate_precision += m.precision[c];
      m.aggregate_recall += m.recall[c];
      m.aggregate_f1 += m.f1[c];
    }
  }
  if (n_present) {
    m.aggregate_precision /= static_cast<double>(n_present);
    m.aggregate_recall /= static_cast<double>(n_present);
    m.aggregate_f1 /= static_cast<double>(n_present);
  }
  return m;
}

Metrics evaluate(const Model& model, std::span<const EncodedExample> examples,
                 const Taxonomy& taxonomy, bool with_tal) {
  if (examples.empty()) throw DataError("evaluate: empty dataset");
  std::vector<std::pair<std::size_t, std::size_t>> macro_pairs, micro_pairs;
  macro_pairs.reserve(examples.size());
  micro_pairs.reserve(examples.size());
  Metrics metrics;
  metrics.with_tal = with_tal;
  for (const EncodedExample& ex : examples) {
    const PredictionPair scores = model_forward(model, ex.name, ex.activity);
    const auto [macro_pred, micro_pred] = predict_labels(scores, taxonomy, with_tal);
    macro_pairs.emplace_back(ex.macro, macro_pred);
    micro_pairs.emplace_back(ex.micro, micro_pred);
    if (taxonomy.parent_of(micro_pred) != macro_pred) ++metrics.hierarchy_violations;
  }
  metrics.macro_level = level_metrics(macro_pairs, taxonomy.macro_count());
  metrics.micro_level = level_metrics(micro_pairs, taxonomy.micro_count());
  return metrics;
}

// ---- deterministic JSON rendering -----------------------------------------

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void append_double_array(std::string& out, const std::vector<double>& values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(values[i]);
  }
  out += ']';
}

void append_summary(std::string& out, const LevelMetrics& level) {
  out += "{\"f1\":" + fmt_double(level.aggregate_f1) +
         ",\"precision\":" + fmt_double(level.aggregate_precision) +
         ",\"recall\":" + fmt_double(level.aggregate_recall) + "}";
}

// Keys in alphabetical order: confusion, f1, precision, present, recall,
// summary.
void append_level(std::string& out, const LevelMetrics& level) {
  out += "{\"confusion\":[";
  for (std::size_t g = 0; g < level.confusion.size(); ++g) {
    if (g) out += ',';
    out += '[';
    for (std::size_t p = 0; p < level.confusion[g].size(); ++p) {
      if (p) out += ',';
      out += std::to_string(level.confusion[g][p]);
    }
    out += ']';
  }
  out += "],\"f1\":";
  append_double_array(out, level.f1);
  out += ",\"precision\":";
  append_double_array(out, level.precision);
  out += ",\"present\":[";
  for (std::size_t c = 0; c < level.present.size(); ++c) {
    if (c) out += ',';
    out += level.present[c] ? '1' : '0';
  }
  out += "],\"recall\":";
  append_double_array(out, level.recall);
  out += ",\"summary\":";
  append_summary(out, level);
  out += '}';
}

struct Stats {
  double mean = 0.0;
  double std_dev = 0.0;
};

Stats fold_stats(const std::vector<double>& values) {
  Stats s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  for (double v : values) s.std_dev += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(s.std_dev / static_cast<double>(values.size()));
  return s;
}

void append_aggregate_entry(std::string& out, const std::string& key,
                            const std::vector<const LevelMetrics*>& levels) {
  std::vector<double> f1, precision, recall;
  for (const LevelMetrics* level : levels) {
    f1.push_back(level->aggregate_f1);
    precision.push_back(level->aggregate_precision);
    recall.push_back(level->aggregate_recall);
  }
  const Stats sf = fold_stats(f1), sp = fold_stats(precision), sr = fold_stats(recall);
  out += "\"" + key + "\":{\"f1\":" + fmt_double(sf.mean) +
         ",\"f1_std\":" + fmt_double(sf.std_dev) +
         ",\"precision\":" + fmt_double(sp.mean) +
         ",\"precision_std\":" + fmt_double(sp.std_dev) +
         ",\"recall\":" + fmt_double(sr.mean) +
         ",\"recall_std\":" + fmt_double(sr.std_dev) + "}";
}

}  // namespace

std::string metrics_json(std::span<const FoldEval> folds, const Taxonomy& taxonomy,
                         const std::map<std::string, std::string>& config_echo) {
  if (folds.empty()) throw DataError("metrics_json: no folds");
  const bool have_tal = folds[0].with_tal.has_value();
  const bool have_no_tal = folds[0].without_tal.has_value();
  for (const FoldEval& fold : folds) {
    if (fold.with_tal.has_value() != have_tal ||
        fold.without_tal.has_value() != have_no_tal) {
      throw DataError("metrics_json: folds disagree on TAL variants");
    }
  }
  if (!have_tal && !have_no_tal) throw DataError("metrics_json: empty folds");

  // The macro level is unaffected by TAL; take it from whichever variant ran.
  const auto macro_of = [&](const FoldEval& fold) -> const LevelMetrics& {
    return have_no_tal ? fold.without_tal->macro_level : fold.with_tal->macro_level;
  };

  std::string out = "{\"aggregate\":{";
  {
    std::vector<const LevelMetrics*> macro_levels;
    for (const FoldEval& fold : folds) macro_levels.push_back(&macro_of(fold));
    append_aggregate_entry(out, "macro_level", macro_levels);
    if (have_no_tal) {
      out += ',';
      std::vector<const LevelMetrics*> levels;
      for (const FoldEval& fold : folds)
        levels.push_back(&fold.without_tal->micro_level);
      append_aggregate_entry(out, "micro_level_no_tal", levels);
    }
    if (have_tal) {
      out += ',';
      std::vector<const LevelMetrics*> levels;
      for (const FoldEval& fold : folds) levels.push_back(&fold.with_tal->micro_level);
      append_aggregate_entry(out, "micro_level_tal", levels);
    }
  }
  out += "},\"config\":{";
  bool first = true;
  for (const auto& [key, value] : config_echo) {
    if (!first) out += ',';
    first = false;
    out += "\"" + json_escape(key) + "\":\"" + json_escape(value) + "\"";
  }
  out += "},\"folds\":[";
  std::size_t violations_tal = 0, violations_no_tal = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f) out += ',';
    out += "{\"fold\":" + std::to_string(f) + ",\"hierarchy_violations\":{";
    bool first_inner = true;
    if (have_no_tal) {
      out += "\"no_tal\":" + std::to_string(folds[f].without_tal->hierarchy_violations);
      violations_no_tal += folds[f].without_tal->hierarchy_violations;
      first_inner = false;
    }
    if (have_tal) {
      if (!first_inner) out += ',';
      out += "\"tal\":" + std::to_string(folds[f].with_tal->hierarchy_violations);
      violations_tal += folds[f].with_tal->hierarchy_violations;
    }
    out += "},\"macro_level\":";
    append_level(out, macro_of(folds[f]));
    if (have_no_tal) {
      out += ",\"micro_level_no_tal\":";
      append_level(out, folds[f].without_tal->micro_level);
    }
    if (have_tal) {
      out += ",\"micro_level_tal\":";
      append_level(out, folds[f].with_tal->micro_level);
    }
    out += '}';
  }
  out += "],\"hierarchy_violations\":{";
  {
    bool first_inner = true;
    if (have_no_tal) {
      out += "\"no_tal\":" + std::to_string(violations_no_tal);
      first_inner = false;
    }
    if (have_tal) {
      if (!first_inner) out += ',';
      out += "\"tal\":" + std::to_string(violations_tal);
    }
  }
  out += "},\"taxonomy\":{\"macro_count\":" + std::to_string(taxonomy.macro_count()) +
         ",\"micro_count\":" + std::to_string(taxonomy.micro_count()) + "}}";
  return out;
}

}  // namespace txncat
