#include "txncat/synth.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "txncat/error.hpp"
#include "txncat/rng.hpp"
#include "txncat/vocab.hpp"

namespace txncat {

namespace {

constexpr std::size_t kWordsPerPool = 6;

// Reference card-stream distribution for the shipped taxonomy.
const std::map<std::string, double>& card_stream_weights() {
  static const std::map<std::string, double> weights{
      {"Food", 30405},          {"Groceries", 21559},
      {"Shopping", 40194},      {"Transport", 18175},
      {"Other Category", 1098}, {"Health", 10426},
      {"Personal Care", 10272}, {"Pets", 3645},
      {"Home", 19640},          {"Tax & Tribute", 70},
      {"Bill", 8306},           {"Entertainment", 1962},
      {"Education", 4514},      {"Travel", 2116},
      {"Donation", 1745},
  };
  return weights;
}

// Nonsense but pronounceable 4-letter word, unique per index.
std::string nonsense_word(std::size_t idx) {
  static constexpr char consonants[] = "bdfgjklmnprstvz";
  static constexpr char vowels[] = "aeiou";
  constexpr std::size_t n_syllables = 15 * 5;
  const auto syllable = [&](std::size_t s) {
    return std::string{consonants[s / 5], vowels[s % 5]};
  };
  return syllable(idx / n_syllables % n_syllables) + syllable(idx % n_syllables);
}

}  // namespace

void SynthConfig::validate(const Taxonomy& taxonomy) const {
  if (activity_corruption_rate < 0.0 || activity_corruption_rate > 1.0) {
    throw ConfigError("synth: activity_corruption_rate outside [0, 1]");
  }
  if (name_ambiguity_rate < 0.0 || name_ambiguity_rate > 1.0) {
    throw ConfigError("synth: name_ambiguity_rate outside [0, 1]");
  }
  if (!macro_weights.empty()) {
    if (macro_weights.size() != taxonomy.macro_count()) {
      throw ConfigError("synth: " + std::to_string(macro_weights.size()) +
                        " weights for " + std::to_string(taxonomy.macro_count()) +
                        " macro categories");
    }
    double total = 0.0;
    for (double w : macro_weights) {
      if (w < 0.0) throw ConfigError("synth: negative macro weight");
      total += w;
    }
    if (total <= 0.0) throw ConfigError("synth: macro weights sum to zero");
  }
}

WordPools WordPools::synthetic(const Taxonomy& taxonomy) {
  WordPools pools;
  pools.pools_.resize(taxonomy.micro_count());
  for (std::size_t micro = 0; micro < taxonomy.micro_count(); ++micro) {
    for (std::size_t w = 0; w < kWordsPerPool; ++w) {
      pools.pools_[micro].push_back(nonsense_word(micro * kWordsPerPool + w));
    }
  }
  return pools;
}

WordPools WordPools::load(const std::filesystem::path& path,
                          const Taxonomy& taxonomy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open word pool file " + path.string());
  WordPools pools;
  pools.pools_.resize(taxonomy.micro_count());
  std::vector<std::uint8_t> seen(taxonomy.micro_count(), 0);
  std::set<std::string> all_words;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("word pools line " + std::to_string(line_no) +
                            ": expected '<micro>\\t<words>'");
    }
    const std::string micro_name = line.substr(0, tab);
    const auto micro = taxonomy.micro_index(micro_name);
    if (!micro) {
      throw ValidationError("word pools line " + std::to_string(line_no) +
                            ": unknown micro category '" + micro_name + "'");
    }
    if (seen[*micro]) {
      throw ValidationError("word pools line " + std::to_string(line_no) +
                            ": duplicate entry for '" + micro_name + "'");
    }
    seen[*micro] = 1;
    std::istringstream words(line.substr(tab + 1));
    std::string word;
    while (words >> word) {
      if (!all_words.insert(word).second) {
        throw ValidationError("word pools line " + std::to_string(line_no) +
                              ": word '" + word + "' appears in two pools");
      }
      pools.pools_[*micro].push_back(word);
    }
    if (pools.pools_[*micro].empty()) {
      throw ValidationError("word pools line " + std::to_string(line_no) +
                            ": empty pool for '" + micro_name + "'");
    }
  }
  for (std::size_t micro = 0; micro < taxonomy.micro_count(); ++micro) {
    if (!seen[micro]) {
      throw ValidationError("word pools: no pool for micro category '" +
                            taxonomy.micro_name(micro) + "'");
    }
  }
  return pools;
}

std::span<const std::string> WordPools::pool(std::size_t micro_idx) const {
  if (micro_idx >= pools_.size()) {
    throw IndexError("word pool index " + std::to_string(micro_idx) +
                     " out of range for " + std::to_string(pools_.size()));
  }
  return pools_[micro_idx];
}

std::string WordPools::serialize(const Taxonomy& taxonomy) const {
  std::string out;
  for (std::size_t micro = 0; micro < pools_.size(); ++micro) {
    out += taxonomy.micro_name(micro);
    out += '\t';
    for (std::size_t w = 0; w < pools_[micro].size(); ++w) {
      if (w) out += ' ';
      out += pools_[micro][w];
    }
    out += '\n';
  }
  return out;
}

void WordPools::save(const Taxonomy& taxonomy,
                     const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << serialize(taxonomy);
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::span<const std::string> generic_name_words() {
  static const std::vector<std::string> words{
      "store", "center", "prime",  "global", "city",
      "royal", "express", "silver", "golden", "united",
  };
  return words;
}

std::string canonical_activity(const Taxonomy& taxonomy, std::size_t micro_idx) {
  std::string out;
  for (const std::string& tok : tokenize(taxonomy.micro_name(micro_idx))) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  for (const std::string& tok : tokenize(taxonomy.macro_name(taxonomy.parent_of(micro_idx)))) {
    out += ' ';
    out += tok;
  }
  return out;
}

std::vector<double> default_macro_weights(const Taxonomy& taxonomy) {
  const auto& table = card_stream_weights();
  std::vector<double> weights;
  weights.reserve(taxonomy.macro_count());
  for (std::size_t m = 0; m < taxonomy.macro_count(); ++m) {
    const auto it = table.find(taxonomy.macro_name(m));
    if (it == table.end()) {
      return std::vector<double>(taxonomy.macro_count(), 1.0);
    }
    weights.push_back(it->second);
  }
  return weights;
}

Dataset generate_synthetic(const Taxonomy& taxonomy, const WordPools& pools,
                           const SynthConfig& config) {
  config.validate(taxonomy);
  std::vector<double> weights =
      config.macro_weights.empty() ? default_macro_weights(taxonomy) : config.macro_weights;
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) {
    total += weights[m];
    cumulative[m] = total;
  }

  Rng rng(config.seed);
  const auto draw_macro = [&]() {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(it - cumulative.begin(), weights.size() - 1);
  };
  const auto draw_micro = [&](std::size_t macro) {
    const auto children = taxonomy.children_of(macro);
    return children[rng.below(children.size())];
  };
  const auto draw_words = [&](std::span<const std::string> pool, std::size_t count) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::string name;
    for (std::size_t i = 0; i < std::min(count, order.size()); ++i) {
      std::swap(order[i], order[i + rng.below(order.size() - i)]);
      if (i) name += ' ';
      name += pool[order[i]];
    }
    return name;
  };

  Dataset dataset;
  dataset.reserve(config.n_samples);
  for (std::size_t s = 0; s < config.n_samples; ++s) {
    const std::size_t macro = draw_macro();
    const std::size_t micro = draw_micro(macro);

    Transaction txn;
    txn.macro_label = macro;
    txn.micro_label = micro;

    const bool ambiguous = rng.uniform() < config.name_ambiguity_rate;
    const std::size_t name_len = 1 + rng.below(3);
    txn.merchant_name = ambiguous ? draw_words(generic_name_words(), name_len)
                                  : draw_words(pools.pool(micro), name_len);

    const bool corrupted = rng.uniform() < config.activity_corruption_rate;
    std::size_t activity_micro = micro;
    if (corrupted && taxonomy.micro_count() > 1) {
      // Wrong registrations skew toward common activities, so the fake
      // descriptor follows the same label distribution.
      do {
        activity_micro = draw_micro(draw_macro());
      } while (activity_micro == micro);
    }
    txn.activity = canonical_activity(taxonomy, activity_micro);
    dataset.push_back(std::move(txn));
  }
  return dataset;
}

}  // namespace txncat
