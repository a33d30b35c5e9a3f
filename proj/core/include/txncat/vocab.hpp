#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace txncat {

/// Normalizes text into tokens: ASCII letters are lowercased, runs of
/// non-alphanumeric ASCII split tokens, empty pieces are dropped. Bytes
/// outside ASCII (accented pt-br characters, any UTF-8 continuation) are kept
/// verbatim as token characters.
std::vector<std::string> tokenize(std::string_view text);

/// Token table with reserved ids PAD=0 and UNK=1. Ids for real tokens start
/// at 2 and are assigned by descending corpus frequency, ties broken
/// lexicographically, which makes construction deterministic.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;

  static Vocabulary build(std::span<const std::string> corpus, std::size_t min_freq);
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary deserialize(std::string_view text);

  /// Line-oriented serialization: "<id>\t<token>\n", ids contiguous from 0.
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  std::uint32_t id_of(std::string_view token) const;
  const std::string& token_of(std::uint32_t id) const;
  std::size_t size() const { return tokens_.size(); }

  /// FNV-1a over serialize(); stored in checkpoints for integrity checks.
  std::uint64_t hash() const;

 private:
  Vocabulary();
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t, std::hash<std::string>,
                     std::equal_to<>>
      ids_;
};

/// Fixed-length token-id encoding of one descriptor. Positions at and past
/// true_length are PAD; PAD never precedes a real token.
struct EncodedSentence {
  std::vector<std::uint32_t> ids;
  std::size_t true_length = 0;

  bool empty() const { return true_length == 0; }
  static EncodedSentence blank(std::size_t max_len);
};

EncodedSentence encode_text(std::string_view text, const Vocabulary& vocab,
                            std::size_t max_len);

}  // namespace txncat
