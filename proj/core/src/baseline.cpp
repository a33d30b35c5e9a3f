#include "txncat/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "txncat/error.hpp"
#include "txncat/hash.hpp"
#include "txncat/vocab.hpp"

namespace txncat {

namespace {

SparseVector l2_normalize(std::map<std::uint32_t, double> accum) {
  SparseVector vec;
  double norm_sq = 0.0;
  for (const auto& [idx, value] : accum) {
    if (value != 0.0) norm_sq += value * value;
  }
  if (norm_sq == 0.0) return vec;
  const double inv = 1.0 / std::sqrt(norm_sq);
  vec.entries.reserve(accum.size());
  for (const auto& [idx, value] : accum) {
    if (value != 0.0) vec.entries.emplace_back(idx, value * inv);
  }
  return vec;
}

}  // namespace

double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.entries.size() && j < b.entries.size()) {
    if (a.entries[i].first < b.entries[j].first) ++i;
    else if (a.entries[i].first > b.entries[j].first) ++j;
    else dot += a.entries[i++].second * b.entries[j++].second;
  }
  return dot;
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const std::string> corpus) {
  if (corpus.empty()) throw DataError("tfidf fit: empty corpus");
  // Document frequencies over a lexicographically ordered term index.
  std::map<std::string, std::size_t> df;
  for (const std::string& doc : corpus) {
    std::vector<std::string> tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (std::string& tok : tokens) ++df[std::move(tok)];
  }
  TfidfVectorizer v;
  const double n_docs = static_cast<double>(corpus.size());
  v.idf_.reserve(df.size());
  for (const auto& [term, count] : df) {
    v.term_index_.emplace(term, static_cast<std::uint32_t>(v.idf_.size()));
    v.idf_.push_back(1.0 + std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))));
  }
  return v;
}

SparseVector TfidfVectorizer::transform(std::string_view text) const {
  std::map<std::uint32_t, double> accum;
  for (const std::string& tok : tokenize(text)) {
    const auto it = term_index_.find(tok);
    if (it == term_index_.end()) continue;
    accum[it->second] += idf_[it->second];
  }
  return l2_normalize(std::move(accum));
}

SparseVector hashing_vectorize(std::string_view text, std::size_t n_buckets) {
  if (n_buckets == 0) throw ConfigError("hashing_vectorize: zero buckets");
  std::map<std::uint32_t, double> accum;
  for (const std::string& tok : tokenize(text)) {
    const std::uint64_t h = fnv1a64(tok);
    const auto bucket = static_cast<std::uint32_t>(h % n_buckets);
    accum[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  return l2_normalize(std::move(accum));
}

std::vector<std::size_t> knn_neighbors(const SparseVector& query,
                                       const KnnModel& model, std::size_t k) {
  if (model.vectors.empty()) throw DataError("knn: empty training set");
  if (k == 0) throw ConfigError("knn: k must be >= 1");
  k = std::min(k, model.vectors.size());
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(model.vectors.size());
  for (std::size_t i = 0; i < model.vectors.size(); ++i) {
    scored.emplace_back(sparse_dot(query, model.vectors[i]), i);
  }
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  std::vector<std::size_t> neighbors(k);
  for (std::size_t i = 0; i < k; ++i) neighbors[i] = scored[i].second;
  return neighbors;
}

namespace {

std::size_t vote(const std::vector<std::size_t>& neighbors,
                 const KnnModel& model, bool macro_level) {
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t n : neighbors) {
    const auto& [macro, micro] = model.labels[n];
    ++counts[macro_level ? macro : micro];
  }
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) best_count = std::max(best_count, count);
  // Neighbors are ordered nearest-first; the first one carrying a
  // majority-count label breaks ties.
  for (std::size_t n : neighbors) {
    const auto& [macro, micro] = model.labels[n];
    const std::size_t label = macro_level ? macro : micro;
    if (counts[label] == best_count) return label;
  }
  return 0;  // unreachable: neighbors is non-empty
}

}  // namespace

std::pair<std::size_t, std::size_t> knn_classify(const SparseVector& query,
                                                 const KnnModel& model,
                                                 std::size_t k) {
  if (model.labels.size() != model.vectors.size()) {
    throw ShapeError("knn: " + std::to_string(model.vectors.size()) +
                     " vectors vs " + std::to_string(model.labels.size()) +
                     " labels");
  }
  const std::vector<std::size_t> neighbors = knn_neighbors(query, model, k);
  return {vote(neighbors, model, true), vote(neighbors, model, false)};
}

}  // namespace txncat
