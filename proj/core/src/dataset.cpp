#include "txncat/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "txncat/error.hpp"

namespace txncat {

namespace {

// Minimal RFC-4180 row parser: handles quoted fields with "" escapes.
std::vector<std::string> split_csv_row(const std::string& line, std::size_t row_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) {
    throw DataError("csv row " + std::to_string(row_no) + ": unterminated quote");
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

constexpr const char* kHeader = "merchant_name,activity,macro,micro";

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    throw DataError("dataset header must be '" + std::string(kHeader) +
                    "', got '" + line + "'");
  }
  Dataset dataset;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_row(line, row_no);
    if (fields.size() != 4) {
      throw DataError("csv row " + std::to_string(row_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    }
    Transaction txn;
    txn.merchant_name = fields[0];
    txn.activity = fields[1];
    if (!fields[2].empty()) {
      const auto idx = taxonomy.macro_index(fields[2]);
      if (!idx) {
        throw DataError("csv row " + std::to_string(row_no) +
                        ": unknown macro category '" + fields[2] + "'");
      }
      txn.macro_label = *idx;
    }
    if (!fields[3].empty()) {
      const auto idx = taxonomy.micro_index(fields[3]);
      if (!idx) {
        throw DataError("csv row " + std::to_string(row_no) +
                        ": unknown micro category '" + fields[3] + "'");
      }
      txn.micro_label = *idx;
    }
    if (txn.macro_label && txn.micro_label &&
        taxonomy.parent_of(*txn.micro_label) != *txn.macro_label) {
      throw DataError("csv row " + std::to_string(row_no) + ": micro '" + fields[3] +
                      "' is not a child of macro '" + fields[2] + "'");
    }
    dataset.push_back(std::move(txn));
  }
  return dataset;
}

void save_csv(const Dataset& dataset, const Taxonomy& taxonomy,
              const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << kHeader << '\n';
    for (const Transaction& txn : dataset) {
      out << csv_escape(txn.merchant_name) << ',' << csv_escape(txn.activity) << ',';
      if (txn.macro_label) out << csv_escape(taxonomy.macro_name(*txn.macro_label));
      out << ',';
      if (txn.micro_label) out << csv_escape(taxonomy.micro_name(*txn.micro_label));
      out << '\n';
    }
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::pair<std::size_t, std::size_t>> dataset_stats(
    const Dataset& dataset, const Taxonomy& taxonomy) {
  std::vector<std::pair<std::size_t, std::size_t>> counts;
  counts.reserve(taxonomy.macro_count());
  for (std::size_t m = 0; m < taxonomy.macro_count(); ++m) counts.emplace_back(m, 0);
  for (const Transaction& txn : dataset) {
    if (txn.macro_label) ++counts[*txn.macro_label].second;
  }
  std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  return counts;
}

}  // namespace txncat
