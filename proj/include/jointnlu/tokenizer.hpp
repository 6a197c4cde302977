#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jointnlu/label_map.hpp"

namespace jointnlu {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kContinuationPrefix = "##";

// Words longer than this many characters are not segmented.
inline constexpr std::size_t kMaxWordChars = 100;

// Immutable WordPiece vocabulary. Ids are dense in [0, size()).
class Vocabulary {
 public:
  // Throws DataError on duplicates or a missing special token.
  explicit Vocabulary(std::vector<std::string> tokens);

  // One token per line, line index = id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  std::optional<int> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int pad_id_ = -1, unk_id_ = -1, cls_id_ = -1, sep_id_ = -1;
};

// Induces a vocabulary by frequency-ranked pair merges over the corpus words,
// emitted in WordPiece surface form. The result always holds the special
// tokens and every corpus character in both initial and "##" form, so every
// corpus word tokenizes without [UNK].
Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t target_size);

// Greedy longest-match-first segmentation of one (lowercased) word.
std::vector<std::string> tokenize_word(std::string_view word, const Vocabulary& vocab);

// ASCII lowercasing; other bytes pass through unchanged.
std::string to_lower(std::string_view text);
// Whitespace split followed by lowercasing.
std::vector<std::string> split_words(std::string_view text);
// UTF-8 code point boundaries; malformed bytes count as single characters.
std::vector<std::string_view> utf8_chars(std::string_view text);

struct TokenizedExample {
  std::vector<int> token_ids;
  // 1 exactly at the first sub-token of each kept word.
  std::vector<unsigned char> word_start_mask;
  std::optional<int> intent_label;
  std::optional<std::vector<int>> slot_label_ids;
  // Words kept after truncation, and words in the input.
  std::size_t kept_words = 0;
  std::size_t input_words = 0;

  std::vector<std::size_t> word_start_positions() const;
};

// [CLS] + sub-tokens of each word + [SEP]. Sequences longer than max_len are
// truncated by dropping trailing whole words so the mask and slot labels stay
// aligned. Throws DataError on label/word count mismatch or unknown labels.
TokenizedExample encode_example(std::span<const std::string> words,
                                std::optional<std::span<const std::string>> slot_labels,
                                std::optional<std::string_view> intent, const Vocabulary& vocab,
                                const LabelMaps& labels, std::size_t max_len);

}  // namespace jointnlu
