#include "txncat/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "txncat/error.hpp"
#include "txncat/hash.hpp"

namespace txncat {

namespace {

bool is_word_byte(unsigned char c) {
  if (c >= 0x80) return true;  // keep UTF-8 sequences (accents) intact
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<unk>"} {
  ids_.emplace(tokens_[0], kPad);
  ids_.emplace(tokens_[1], kUnk);
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus,
                             std::size_t min_freq) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;  // ordered map keeps ties stable
  for (const std::string& text : corpus)
    for (std::string& tok : tokenize(text)) ++freq[std::move(tok)];

  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(freq.size());
  for (auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  for (auto& [tok, n] : kept) {
    const auto id = static_cast<std::uint32_t>(vocab.tokens_.size());
    vocab.ids_.emplace(tok, id);
    vocab.tokens_.push_back(tok);
  }
  return vocab;
}

std::uint32_t Vocabulary::id_of(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(std::uint32_t id) const {
  if (id >= tokens_.size()) {
    throw IndexError("token_of: id " + std::to_string(id) +
                     " out of range for vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t id = 0; id < tokens_.size(); ++id) {
    out += std::to_string(id);
    out += '\t';
    out += tokens_[id];
    out += '\n';
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << serialize();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.ids_.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError("vocabulary line " + std::to_string(line_no) +
                            ": missing tab separator");
    }
    const std::string id_str = line.substr(0, tab);
    const std::string token = line.substr(tab + 1);
    std::size_t id = 0;
    try {
      id = std::stoul(id_str);
    } catch (const std::exception&) {
      throw ValidationError("vocabulary line " + std::to_string(line_no) +
                            ": bad id '" + id_str + "'");
    }
    if (id != vocab.tokens_.size()) {
      throw ValidationError("vocabulary line " + std::to_string(line_no) +
                            ": ids must be contiguous from 0");
    }
    if (!vocab.ids_.emplace(token, static_cast<std::uint32_t>(id)).second) {
      throw ValidationError("vocabulary line " + std::to_string(line_no) +
                            ": duplicate token '" + token + "'");
    }
    vocab.tokens_.push_back(token);
  }
  if (vocab.tokens_.size() < 2 || vocab.tokens_[0] != "<pad>" ||
      vocab.tokens_[1] != "<unk>") {
    throw ValidationError("vocabulary: reserved entries 0=<pad>, 1=<unk> missing");
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

std::uint64_t Vocabulary::hash() const { return fnv1a64(serialize()); }

EncodedSentence EncodedSentence::blank(std::size_t max_len) {
  EncodedSentence s;
  s.ids.assign(max_len, Vocabulary::kPad);
  return s;
}

EncodedSentence encode_text(std::string_view text, const Vocabulary& vocab,
                            std::size_t max_len) {
  if (max_len == 0) throw ConfigError("encode_text: max_len must be >= 1");
  EncodedSentence out = EncodedSentence::blank(max_len);
  const std::vector<std::string> tokens = tokenize(text);
  for (const std::string& tok : tokens) {
    if (out.true_length == max_len) break;
    out.ids[out.true_length++] = vocab.id_of(tok);
  }
  return out;
}

}  // namespace txncat
