#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace txncat {

/// Two-level retail category DAG: every micro category has exactly one macro
/// parent, every macro has at least one child. Indices follow file order and
/// are stable across loads.
class Taxonomy {
 public:
  /// Loads the TSV interchange format: one "<macro>\t<micro>" row per micro
  /// category, UTF-8, ordered. Validation failures name the line.
  static Taxonomy load(const std::filesystem::path& path);
  static Taxonomy deserialize(std::string_view text);
  static Taxonomy from_pairs(
      const std::vector<std::pair<std::string, std::string>>& rows);

  std::size_t macro_count() const { return macros_.size(); }
  std::size_t micro_count() const { return micros_.size(); }
  const std::string& macro_name(std::size_t macro_idx) const;
  const std::string& micro_name(std::size_t micro_idx) const;
  std::size_t parent_of(std::size_t micro_idx) const;
  std::span<const std::size_t> children_of(std::size_t macro_idx) const;
  std::optional<std::size_t> macro_index(std::string_view name) const;
  std::optional<std::size_t> micro_index(std::string_view name) const;

  /// Canonical TSV form; hash() is FNV-1a over it.
  std::string serialize() const;
  std::uint64_t hash() const;

 private:
  std::vector<std::string> macros_;
  std::vector<std::string> micros_;
  std::vector<std::size_t> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::unordered_map<std::string, std::size_t> macro_index_;
  std::unordered_map<std::string, std::size_t> micro_index_;
};

/// Binary suppression mask over micro categories: bit i is 1 iff micro i is a
/// child of the given macro.
using Mask = std::vector<std::uint8_t>;

Mask build_mask(const Taxonomy& taxonomy, std::size_t macro_idx);

/// Index of the largest score; ties break to the lowest index.
std::size_t argmax(std::span<const double> scores);

/// Point-wise suppression of micro scores outside the winning macro:
/// returns build_mask(taxonomy, argmax(macro_scores)) (.) micro_scores.
std::vector<double> taxonomy_attention(std::span<const double> macro_scores,
                                       std::span<const double> micro_scores,
                                       const Taxonomy& taxonomy);

/// Micro prediction under the hierarchy constraint: the best-scoring child of
/// the winning macro. When every child scores exactly zero the macro's
/// "Other ..." child is reported if present, else its lowest-index child, so
/// a micro label is always emitted.
std::size_t constrained_micro_argmax(std::span<const double> corrected_scores,
                                     const Taxonomy& taxonomy,
                                     std::size_t macro_idx);

}  // namespace txncat
