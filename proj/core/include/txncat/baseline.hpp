#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace txncat {

/// Sparse L2-normalized feature vector; entries sorted by index.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
};

/// Dot product of two sparse unit vectors (their cosine similarity).
double sparse_dot(const SparseVector& a, const SparseVector& b);

/// TF-IDF over a fit corpus: tf(t, d) * (1 + ln((1 + N) / (1 + df(t)))),
/// L2-normalized. Terms unseen during fit are dropped at transform time.
class TfidfVectorizer {
 public:
  static TfidfVectorizer fit(std::span<const std::string> corpus);
  SparseVector transform(std::string_view text) const;
  std::size_t vocabulary_size() const { return idf_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> term_index_;
  std::vector<double> idf_;
};

/// Stateless signed-hash bucket counts, L2-normalized. The same text maps to
/// the same vector regardless of any corpus.
SparseVector hashing_vectorize(std::string_view text,
                               std::size_t n_buckets = std::size_t{1} << 15);

struct KnnModel {
  std::vector<SparseVector> vectors;
  std::vector<std::pair<std::size_t, std::size_t>> labels;  // (macro, micro)
};

/// Cosine top-k and independent per-level majority vote; vote ties go to the
/// label of the nearest neighbor carrying a tied label. k larger than the
/// training set is clamped.
std::pair<std::size_t, std::size_t> knn_classify(const SparseVector& query,
                                                 const KnnModel& model,
                                                 std::size_t k);

/// Top-k training indices by similarity (descending, ties by index).
std::vector<std::size_t> knn_neighbors(const SparseVector& query,
                                       const KnnModel& model, std::size_t k);

}  // namespace txncat
