#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "txncat/dataset.hpp"
#include "txncat/taxonomy.hpp"

namespace txncat {

/// Controls for the synthetic transaction generator that stands in for the
/// proprietary source streams.
struct SynthConfig {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 1;
  /// Probability that the activity descriptor is swapped for another micro's
  /// canonical descriptor (a merchant registered under the wrong activity).
  double activity_corruption_rate = 0.0;
  /// Probability that the merchant name is a generic one carrying no category
  /// signal at all.
  double name_ambiguity_rate = 0.0;
  /// Per-macro sampling weights, aligned with taxonomy macro indices. Empty
  /// selects the defaults: the reference card-stream distribution for the
  /// shipped taxonomy (heavy Shopping head, 70-sample tax tail), uniform for
  /// any other taxonomy.
  std::vector<double> macro_weights;

  void validate(const Taxonomy& taxonomy) const;
};

/// Per-micro merchant-name word pools. Pools are pairwise disjoint nonsense
/// tokens so class separability is controlled entirely by the generator
/// configuration, never by accidental lexical overlap.
class WordPools {
 public:
  /// TSV format: "<micro_name>\t<word> <word> ...", one row per micro.
  static WordPools load(const std::filesystem::path& path, const Taxonomy& taxonomy);
  /// Deterministic generated pools (what the shipped file contains for the
  /// shipped taxonomy); useful for ad-hoc taxonomies in tests.
  static WordPools synthetic(const Taxonomy& taxonomy);

  std::span<const std::string> pool(std::size_t micro_idx) const;
  std::string serialize(const Taxonomy& taxonomy) const;
  void save(const Taxonomy& taxonomy, const std::filesystem::path& path) const;

 private:
  std::vector<std::vector<std::string>> pools_;
};

/// Generic merchant-name words shared by every category (no class signal).
std::span<const std::string> generic_name_words();

/// The canonical business-activity descriptor for a micro category:
/// normalized micro name followed by normalized macro name. Unique per micro.
std::string canonical_activity(const Taxonomy& taxonomy, std::size_t micro_idx);

/// Default per-macro weights (reference card-stream counts for the shipped
/// taxonomy's macro names, uniform otherwise).
std::vector<double> default_macro_weights(const Taxonomy& taxonomy);

/// Seeded synthetic dataset: labels follow the macro weights with uniform
/// micros inside each macro; names come from the micro's word pool (or the
/// generic pool at the ambiguity rate); activities are canonical descriptors
/// (or another micro's at the corruption rate).
Dataset generate_synthetic(const Taxonomy& taxonomy, const WordPools& pools,
                           const SynthConfig& config);

}  // namespace txncat
