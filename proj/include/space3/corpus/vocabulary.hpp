#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "space3/corpus/dialog.hpp"

namespace space3::corpus {

using TokenId = int;

/// Lowercased word-level tokenization: whitespace separates words and every
/// ASCII punctuation character except '_' becomes its own token.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kMask = 2;
  static constexpr TokenId kBou = 3;
  static constexpr TokenId kEou = 4;
  static constexpr TokenId kBos = 5;
  static constexpr TokenId kEos = 6;
  static constexpr TokenId kNumSpecial = 7;

  /// Counts word tokens over every turn. Words with frequency >= min_freq
  /// get ids ordered by descending frequency, ties alphabetical. Throws
  /// std::invalid_argument on an empty corpus.
  static Vocabulary build(const std::vector<Dialog>& dialogs, std::size_t min_freq);

  /// Rebuilds a vocabulary from its full token list in id order; the first
  /// kNumSpecial entries must be the special tokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  static const std::vector<std::string>& special_tokens();

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool contains(std::string_view token) const;
  static bool is_special(TokenId id) { return id >= 0 && id < kNumSpecial; }

  std::vector<TokenId> encode(std::string_view text) const;
  /// Space-joined tokens, skipping [PAD], [BOS] and [EOS].
  std::string decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace space3::corpus
