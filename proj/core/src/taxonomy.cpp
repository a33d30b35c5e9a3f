#include "txncat/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include "txncat/error.hpp"
#include "txncat/hash.hpp"

namespace txncat {

Taxonomy Taxonomy::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& rows) {
  Taxonomy t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [macro, micro] = rows[i];
    const std::string where = "taxonomy line " + std::to_string(i + 1);
    if (macro.empty() || micro.empty()) {
      throw ValidationError(where + ": empty category name");
    }
    if (t.micro_index_.contains(micro)) {
      throw ValidationError(where + ": micro category '" + micro +
                            "' listed more than once");
    }
    std::size_t macro_idx;
    if (const auto it = t.macro_index_.find(macro); it != t.macro_index_.end()) {
      macro_idx = it->second;
    } else {
      macro_idx = t.macros_.size();
      t.macro_index_.emplace(macro, macro_idx);
      t.macros_.push_back(macro);
      t.children_.emplace_back();
    }
    const std::size_t micro_idx = t.micros_.size();
    t.micro_index_.emplace(micro, micro_idx);
    t.micros_.push_back(micro);
    t.parent_.push_back(macro_idx);
    t.children_[macro_idx].push_back(micro_idx);
  }
  if (t.micros_.empty()) throw ValidationError("taxonomy: no categories");
  return t;
}

Taxonomy Taxonomy::deserialize(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ValidationError("taxonomy line " + std::to_string(line_no) +
                            ": expected '<macro>\\t<micro>'");
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return from_pairs(rows);
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open taxonomy file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

const std::string& Taxonomy::macro_name(std::size_t macro_idx) const {
  if (macro_idx >= macros_.size()) {
    throw IndexError("macro index " + std::to_string(macro_idx) +
                     " out of range for " + std::to_string(macros_.size()));
  }
  return macros_[macro_idx];
}

const std::string& Taxonomy::micro_name(std::size_t micro_idx) const {
  if (micro_idx >= micros_.size()) {
    throw IndexError("micro index " + std::to_string(micro_idx) +
                     " out of range for " + std::to_string(micros_.size()));
  }
  return micros_[micro_idx];
}

std::size_t Taxonomy::parent_of(std::size_t micro_idx) const {
  if (micro_idx >= parent_.size()) {
    throw IndexError("micro index " + std::to_string(micro_idx) +
                     " out of range for " + std::to_string(parent_.size()));
  }
  return parent_[micro_idx];
}

std::span<const std::size_t> Taxonomy::children_of(std::size_t macro_idx) const {
  if (macro_idx >= children_.size()) {
    throw IndexError("macro index " + std::to_string(macro_idx) +
                     " out of range for " + std::to_string(children_.size()));
  }
  return children_[macro_idx];
}

std::optional<std::size_t> Taxonomy::macro_index(std::string_view name) const {
  const auto it = macro_index_.find(std::string(name));
  if (it == macro_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Taxonomy::micro_index(std::string_view name) const {
  const auto it = micro_index_.find(std::string(name));
  if (it == micro_index_.end()) return std::nullopt;
  return it->second;
}

std::string Taxonomy::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < micros_.size(); ++i) {
    out += macros_[parent_[i]];
    out += '\t';
    out += micros_[i];
    out += '\n';
  }
  return out;
}

std::uint64_t Taxonomy::hash() const { return fnv1a64(serialize()); }

Mask build_mask(const Taxonomy& taxonomy, std::size_t macro_idx) {
  if (macro_idx >= taxonomy.macro_count()) {
    throw IndexError("build_mask: macro index " + std::to_string(macro_idx) +
                     " out of range for " +
                     std::to_string(taxonomy.macro_count()));
  }
  Mask mask(taxonomy.micro_count(), 0);
  for (std::size_t micro = 0; micro < taxonomy.micro_count(); ++micro) {
    if (taxonomy.parent_of(micro) == macro_idx) mask[micro] = 1;
  }
  return mask;
}

std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::vector<double> taxonomy_attention(std::span<const double> macro_scores,
                                       std::span<const double> micro_scores,
                                       const Taxonomy& taxonomy) {
  if (macro_scores.size() != taxonomy.macro_count() ||
      micro_scores.size() != taxonomy.micro_count()) {
    throw ShapeError("taxonomy_attention: got " +
                     std::to_string(macro_scores.size()) + "/" +
                     std::to_string(micro_scores.size()) +
                     " scores for a taxonomy of " +
                     std::to_string(taxonomy.macro_count()) + "/" +
                     std::to_string(taxonomy.micro_count()));
  }
  const Mask mask = build_mask(taxonomy, argmax(macro_scores));
  std::vector<double> corrected(micro_scores.begin(), micro_scores.end());
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    if (!mask[i]) corrected[i] = 0.0;
  }
  return corrected;
}

std::size_t constrained_micro_argmax(std::span<const double> corrected_scores,
                                     const Taxonomy& taxonomy,
                                     std::size_t macro_idx) {
  const auto children = taxonomy.children_of(macro_idx);
  std::size_t best = children.front();
  bool any_positive = false;
  for (std::size_t child : children) {
    if (corrected_scores[child] > 0.0 &&
        (!any_positive || corrected_scores[child] > corrected_scores[best])) {
      best = child;
      any_positive = true;
    }
  }
  if (any_positive) return best;
  // Everything suppressed to zero: fall back to the macro's catch-all child.
  for (std::size_t child : children) {
    if (taxonomy.micro_name(child).starts_with("Other")) return child;
  }
  return children.front();
}

}  // namespace txncat
