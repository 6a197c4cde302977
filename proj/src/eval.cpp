#include "jointnlu/eval.hpp"

#include <cstdio>
#include <optional>
#include <sstream>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

struct ParsedTag {
  char prefix;  // 'B', 'I', or 'O'
  std::string type;
};

ParsedTag parse_tag(const std::string& tag) {
  if (tag == "O") return {'O', {}};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
    return {tag[0], tag.substr(2)};
  }
  return {'B', tag};
}

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a) + " gold vs " +
                     std::to_string(b) + " predicted");
  }
}

}  // namespace

std::set<Chunk> extract_chunks(std::span<const std::string> tags) {
  std::set<Chunk> chunks;
  std::optional<Chunk> open;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto tag = parse_tag(tags[i]);
    const bool continues = tag.prefix == 'I' && open && open->type == tag.type;
    if (continues) {
      open->end = i;
      continue;
    }
    if (open) chunks.insert(*open);
    open.reset();
    if (tag.prefix != 'O') open = Chunk{tag.type, i, i};
  }
  if (open) chunks.insert(*open);
  return chunks;
}

ChunkScores slot_f1(std::span<const TagSequence> gold, std::span<const TagSequence> predicted) {
  check_same_size(gold.size(), predicted.size(), "slot_f1: sequence count");
  ChunkScores s;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != predicted[i].size()) {
      throw ShapeError("slot_f1: sequence " + std::to_string(i) + " has " +
                       std::to_string(gold[i].size()) + " gold tags but " +
                       std::to_string(predicted[i].size()) + " predicted");
    }
    const auto g = extract_chunks(gold[i]);
    const auto p = extract_chunks(predicted[i]);
    s.gold_chunks += g.size();
    s.predicted_chunks += p.size();
    for (const auto& c : p) s.correct_chunks += g.count(c);
  }
  if (s.predicted_chunks) s.precision = double(s.correct_chunks) / double(s.predicted_chunks);
  if (s.gold_chunks) s.recall = double(s.correct_chunks) / double(s.gold_chunks);
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

double intent_accuracy(std::span<const std::string> gold, std::span<const std::string> predicted) {
  check_same_size(gold.size(), predicted.size(), "intent_accuracy");
  if (gold.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == predicted[i];
  return double(hits) / double(gold.size());
}

double tag_accuracy(std::span<const TagSequence> gold, std::span<const TagSequence> predicted) {
  check_same_size(gold.size(), predicted.size(), "tag_accuracy: sequence count");
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    check_same_size(gold[i].size(), predicted[i].size(), "tag_accuracy: sequence length");
    for (std::size_t n = 0; n < gold[i].size(); ++n) hits += gold[i][n] == predicted[i][n];
    total += gold[i].size();
  }
  return total ? double(hits) / double(total) : 0.0;
}

double frame_accuracy(std::span<const std::string> gold_intents,
                      std::span<const std::string> predicted_intents,
                      std::span<const TagSequence> gold_tags,
                      std::span<const TagSequence> predicted_tags) {
  check_same_size(gold_intents.size(), predicted_intents.size(), "frame_accuracy: intents");
  check_same_size(gold_tags.size(), predicted_tags.size(), "frame_accuracy: tag sequences");
  check_same_size(gold_intents.size(), gold_tags.size(), "frame_accuracy: intents vs tags");
  if (gold_intents.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold_intents.size(); ++i) {
    hits += gold_intents[i] == predicted_intents[i] && gold_tags[i] == predicted_tags[i];
  }
  return double(hits) / double(gold_intents.size());
}

Metrics compute_metrics(std::span<const std::string> gold_intents,
                        std::span<const std::string> predicted_intents,
                        std::span<const TagSequence> gold_tags,
                        std::span<const TagSequence> predicted_tags) {
  Metrics m;
  m.examples = gold_intents.size();
  m.intent_accuracy = intent_accuracy(gold_intents, predicted_intents);
  const auto chunks = slot_f1(gold_tags, predicted_tags);
  m.slot_precision = chunks.precision;
  m.slot_recall = chunks.recall;
  m.slot_f1 = chunks.f1;
  m.gold_chunks = chunks.gold_chunks;
  m.predicted_chunks = chunks.predicted_chunks;
  m.correct_chunks = chunks.correct_chunks;
  m.frame_accuracy = frame_accuracy(gold_intents, predicted_intents, gold_tags, predicted_tags);
  return m;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

std::string format_report(const Metrics& m, const std::string& title) {
  std::ostringstream os;
  os << title << " (" << m.examples << " utterances)\n"
     << "  Intent   Slot     Sent\n"
     << "  " << format_percent(m.intent_accuracy) << "     " << format_percent(m.slot_f1)
     << "     " << format_percent(m.frame_accuracy) << '\n'
     << "  slot precision " << format_percent(m.slot_precision) << ", recall "
     << format_percent(m.slot_recall) << " (" << m.correct_chunks << " correct / "
     << m.predicted_chunks << " predicted / " << m.gold_chunks << " gold chunks)\n";
  return os.str();
}

nlohmann::json to_json(const Metrics& m) {
  return {{"Intent", m.intent_accuracy * 100.0},
          {"Slot", m.slot_f1 * 100.0},
          {"Sent", m.frame_accuracy * 100.0},
          {"slot_precision", m.slot_precision * 100.0},
          {"slot_recall", m.slot_recall * 100.0},
          {"examples", m.examples},
          {"gold_chunks", m.gold_chunks},
          {"predicted_chunks", m.predicted_chunks},
          {"correct_chunks", m.correct_chunks}};
}

}  // namespace jointnlu
