#include "jointnlu/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

bool is_special(std::string_view token) {
  return token == kPadToken || token == kUnkToken || token == kClsToken || token == kSepToken;
}

std::string strip_continuation(std::string_view piece) {
  if (piece.starts_with(kContinuationPrefix)) piece.remove_prefix(kContinuationPrefix.size());
  return std::string(piece);
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw DataError("empty vocabulary entry at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }
  auto special = [&](std::string_view name) {
    auto id = find(name);
    if (!id) throw DataError("vocabulary is missing special token " + std::string(name));
    return *id;
  };
  pad_id_ = special(kPadToken);
  unk_id_ = special(kUnkToken);
  cls_id_ = special(kClsToken);
  sep_id_ = special(kSepToken);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file '" + path.string() + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string_view> utf8_chars(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = lead < 0xF0 ? 3 : 1;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const auto start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) words.push_back(to_lower(text.substr(start, i - start)));
  }
  return words;
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t target_size) {
  std::map<std::string, long> word_counts;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) {
      if (!w.empty()) ++word_counts[w];
    }
  }
  if (word_counts.empty()) throw DataError("build_vocab: empty corpus");

  std::set<std::string> chars;
  for (const auto& [w, n] : word_counts) {
    for (auto c : utf8_chars(w)) chars.emplace(c);
  }

  std::vector<std::string> tokens{std::string(kPadToken), std::string(kUnkToken),
                                  std::string(kClsToken), std::string(kSepToken)};
  const std::size_t required = tokens.size() + 2 * chars.size();
  if (target_size < required) {
    throw ConfigError("build_vocab: target size " + std::to_string(target_size) +
                      " cannot hold the " + std::to_string(required) +
                      " special and character tokens of this corpus");
  }
  std::set<std::string> present(tokens.begin(), tokens.end());
  auto add_token = [&](const std::string& t) {
    if (present.insert(t).second) tokens.push_back(t);
  };
  for (const auto& c : chars) add_token(c);
  for (const auto& c : chars) add_token(std::string(kContinuationPrefix) + c);

  // Symbols are interned surface strings; each distinct word is a symbol list.
  std::vector<std::string> surfaces;
  std::map<std::string, int> symbol_ids;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = symbol_ids.emplace(s, static_cast<int>(surfaces.size()));
    if (inserted) surfaces.push_back(s);
    return it->second;
  };
  struct Word {
    std::vector<int> symbols;
    long count;
  };
  std::vector<Word> words;
  for (const auto& [w, n] : word_counts) {
    Word word{{}, n};
    bool first = true;
    for (auto c : utf8_chars(w)) {
      word.symbols.push_back(
          intern(first ? std::string(c) : std::string(kContinuationPrefix) + std::string(c)));
      first = false;
    }
    words.push_back(std::move(word));
  }

  using Pair = std::pair<int, int>;
  std::map<Pair, long> pair_counts;
  auto count_pairs = [&](const Word& w, long sign) {
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
      auto& slot = pair_counts[{w.symbols[i], w.symbols[i + 1]}];
      slot += sign * w.count;
    }
  };
  for (const auto& w : words) count_pairs(w, +1);

  while (tokens.size() < target_size) {
    const Pair* best = nullptr;
    long best_count = 0;
    for (const auto& [pair, n] : pair_counts) {
      if (n <= 0) continue;
      if (n > best_count ||
          (n == best_count &&
           std::tie(surfaces[pair.first], surfaces[pair.second]) <
               std::tie(surfaces[best->first], surfaces[best->second]))) {
        best = &pair;
        best_count = n;
      }
    }
    if (!best) break;
    const Pair merge = *best;
    const std::string merged = surfaces[merge.first] + strip_continuation(surfaces[merge.second]);
    const int merged_id = intern(merged);
    if (!is_special(merged)) add_token(merged);

    for (auto& w : words) {
      bool hit = false;
      for (std::size_t i = 0; i + 1 < w.symbols.size() && !hit; ++i) {
        hit = w.symbols[i] == merge.first && w.symbols[i + 1] == merge.second;
      }
      if (!hit) continue;
      count_pairs(w, -1);
      std::vector<int> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == merge.first &&
            w.symbols[i + 1] == merge.second) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(w.symbols[i]);
        }
      }
      w.symbols = std::move(next);
      count_pairs(w, +1);
    }
    std::erase_if(pair_counts, [](const auto& kv) { return kv.second <= 0; });
  }
  return Vocabulary(std::move(tokens));
}

std::vector<std::string> tokenize_word(std::string_view word, const Vocabulary& vocab) {
  const auto chars = utf8_chars(word);
  if (chars.empty() || chars.size() > kMaxWordChars) return {std::string(kUnkToken)};

  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < chars.size()) {
    std::size_t end = chars.size();
    std::optional<std::string> match;
    while (end > start) {
      const auto begin_byte = static_cast<std::size_t>(chars[start].data() - word.data());
      const auto end_byte =
          static_cast<std::size_t>(chars[end - 1].data() - word.data()) + chars[end - 1].size();
      std::string candidate(word.substr(begin_byte, end_byte - begin_byte));
      if (start > 0) candidate.insert(0, kContinuationPrefix);
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (!match) return {std::string(kUnkToken)};
    pieces.push_back(std::move(*match));
    start = end;
  }
  return pieces;
}

std::vector<std::size_t> TokenizedExample::word_start_positions() const {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < word_start_mask.size(); ++i) {
    if (word_start_mask[i]) positions.push_back(i);
  }
  return positions;
}

TokenizedExample encode_example(std::span<const std::string> words,
                                std::optional<std::span<const std::string>> slot_labels,
                                std::optional<std::string_view> intent, const Vocabulary& vocab,
                                const LabelMaps& labels, std::size_t max_len) {
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  if (slot_labels && slot_labels->size() != words.size()) {
    throw DataError("encode_example: " + std::to_string(words.size()) + " words but " +
                    std::to_string(slot_labels->size()) + " slot labels");
  }

  TokenizedExample ex;
  ex.input_words = words.size();
  if (intent) ex.intent_label = labels.intents.id(std::string(*intent));
  std::vector<int> slot_ids;
  if (slot_labels) {
    for (const auto& s : *slot_labels) slot_ids.push_back(labels.slots.id(s));
  }

  ex.token_ids.push_back(vocab.cls_id());
  ex.word_start_mask.push_back(0);
  const std::size_t budget = max_len - 2;
  for (const auto& w : words) {
    const auto pieces = tokenize_word(w, vocab);
    if (ex.token_ids.size() - 1 + pieces.size() > budget) break;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      ex.token_ids.push_back(*vocab.find(pieces[p]));
      ex.word_start_mask.push_back(p == 0 ? 1 : 0);
    }
    ++ex.kept_words;
  }
  ex.token_ids.push_back(vocab.sep_id());
  ex.word_start_mask.push_back(0);

  if (slot_labels) {
    slot_ids.resize(ex.kept_words);
    ex.slot_label_ids = std::move(slot_ids);
  }
  return ex;
}

}  // namespace jointnlu
