#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "txncat/taxonomy.hpp"

namespace txncat {

/// One labeled (or unlabeled) example: the two textual descriptors plus an
/// optional dual label. When both labels are present the micro must be a
/// child of the macro.
struct Transaction {
  std::string merchant_name;
  std::string activity;
  std::optional<std::size_t> macro_label;
  std::optional<std::size_t> micro_label;
};

using Dataset = std::vector<Transaction>;

/// Reads the CSV interchange format (header
/// "merchant_name,activity,macro,micro"; empty label cells mean unlabeled).
/// Label names resolve against the taxonomy; unknown names and micro/macro
/// mismatches raise errors naming the row.
Dataset load_csv(const std::filesystem::path& path, const Taxonomy& taxonomy);

/// Writes the same format atomically (temp file + rename).
void save_csv(const Dataset& dataset, const Taxonomy& taxonomy,
              const std::filesystem::path& path);

/// Per-macro example counts, descending (ties by macro index).
std::vector<std::pair<std::size_t, std::size_t>> dataset_stats(
    const Dataset& dataset, const Taxonomy& taxonomy);

}  // namespace txncat
