#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "jointnlu/label_map.hpp"

namespace jointnlu {

// One utterance: lowercased words, one BIO slot tag per word, intent label.
struct Record {
  std::vector<std::string> words;
  std::vector<std::string> slot_labels;
  std::string intent;
  // Set when an unseen dev/test label was replaced during mapping.
  bool remapped = false;
};

using Split = std::vector<Record>;

inline constexpr const char* kTrainSplit = "train";
inline constexpr const char* kDevSplit = "valid";
inline constexpr const char* kTestSplit = "test";

// Reserved intent for dev/test intents never seen in training.
inline constexpr const char* kUnknownIntent = "UNK";
inline constexpr const char* kOutsideTag = "O";

// Reads <dir>/<split>/{seq.in, seq.out, label}. Throws DataError on missing
// files, differing line counts, or a word/tag count mismatch (1-based line).
Split load_split(const std::filesystem::path& dir, const std::string& split_name);

struct Dataset {
  Split train;
  Split dev;
  Split test;
  LabelMaps labels;
};

// Intent map: reserved UNK id 0, then sorted training intents.
// Slot map: "O" id 0, then sorted training tags.
LabelMaps build_label_maps(const Split& train);

// Unseen intents become UNK and unseen slot tags become "O"; such records
// are flagged via Record::remapped.
Split map_to_known_labels(const Split& split, const LabelMaps& labels);

// Loads all three splits and builds label maps from train. Dev and test are
// returned unmapped.
Dataset load_dataset(const std::filesystem::path& dir);

struct DatasetStats {
  std::size_t train_size;
  std::size_t dev_size;
  std::size_t test_size;
  std::size_t train_slot_labels;
  std::size_t train_intents;
};

inline constexpr DatasetStats kSnipsStats{13084, 700, 700, 72, 7};
inline constexpr DatasetStats kAtisStats{4478, 500, 893, 120, 21};

DatasetStats compute_stats(const Dataset& dataset);

struct ValidationReport {
  DatasetStats actual{};
  std::vector<std::string> mismatches;
  std::vector<std::string> bio_violations;  // training tags not of the form O, B-x, I-x
  std::size_t dev_unseen_intents = 0, test_unseen_intents = 0;
  std::size_t dev_unseen_slot_tags = 0, test_unseen_slot_tags = 0;
  std::size_t dev_oov_words = 0, dev_words = 0;
  std::size_t test_oov_words = 0, test_words = 0;

  bool ok() const { return mismatches.empty(); }
  std::string to_string() const;
};

ValidationReport validate_dataset(const Dataset& dataset, const DatasetStats& expected);

bool is_bio_tag(const std::string& tag);

}  // namespace jointnlu
