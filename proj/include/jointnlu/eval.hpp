#pragma once

#include <compare>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace jointnlu {

using TagSequence = std::vector<std::string>;

// A labelled span; start and end are inclusive word indices.
struct Chunk {
  std::string type;
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const Chunk&) const = default;
};

// conlleval chunking: B-x opens a chunk, and so does an I-x that does not
// continue a chunk of type x. A tag without a B-/I- prefix is treated as B-.
std::set<Chunk> extract_chunks(std::span<const std::string> tags);

struct ChunkScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_chunks = 0;
  std::size_t predicted_chunks = 0;
  std::size_t correct_chunks = 0;
};

// Micro-averaged chunk precision / recall / F1 over all sequences.
ChunkScores slot_f1(std::span<const TagSequence> gold, std::span<const TagSequence> predicted);

double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> predicted);

// Fraction of individual words tagged correctly (a diagnostic, not a
// headline metric).
double tag_accuracy(std::span<const TagSequence> gold, std::span<const TagSequence> predicted);

// Fraction of utterances whose intent and whole tag sequence are both right.
double frame_accuracy(std::span<const std::string> gold_intents,
                      std::span<const std::string> predicted_intents,
                      std::span<const TagSequence> gold_tags,
                      std::span<const TagSequence> predicted_tags);

struct Metrics {
  double intent_accuracy = 0.0;
  double slot_precision = 0.0;
  double slot_recall = 0.0;
  double slot_f1 = 0.0;
  double frame_accuracy = 0.0;
  std::size_t examples = 0;
  std::size_t gold_chunks = 0;
  std::size_t predicted_chunks = 0;
  std::size_t correct_chunks = 0;
};

Metrics compute_metrics(std::span<const std::string> gold_intents,
                        std::span<const std::string> predicted_intents,
                        std::span<const TagSequence> gold_tags,
                        std::span<const TagSequence> predicted_tags);

// Percentage with one decimal, e.g. 0.9863 -> "98.6".
std::string format_percent(double fraction);
// Table with Intent / Slot / Sent columns.
std::string format_report(const Metrics& m, const std::string& title);
nlohmann::json to_json(const Metrics& m);

}  // namespace jointnlu
