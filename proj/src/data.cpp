#include "jointnlu/data.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "jointnlu/error.hpp"
#include "jointnlu/tokenizer.hpp"

namespace jointnlu {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> split_fields(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string field;
  while (in >> field) out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

}  // namespace

bool is_bio_tag(const std::string& tag) {
  if (tag == kOutsideTag) return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

Split load_split(const std::filesystem::path& dir, const std::string& split_name) {
  const auto base = dir / split_name;
  const auto words = read_lines(base / "seq.in");
  const auto tags = read_lines(base / "seq.out");
  const auto intents = read_lines(base / "label");
  if (words.size() != tags.size() || words.size() != intents.size()) {
    throw DataError(base.string() + ": line counts differ (seq.in " + std::to_string(words.size()) +
                    ", seq.out " + std::to_string(tags.size()) + ", label " +
                    std::to_string(intents.size()) + "); first unmatched line is " +
                    std::to_string(std::min({words.size(), tags.size(), intents.size()}) + 1));
  }
  Split split;
  split.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    Record r;
    r.words = split_words(words[i]);
    r.slot_labels = split_fields(tags[i]);
    r.intent = trim(intents[i]);
    if (r.words.empty()) {
      throw DataError(base.string() + ": utterance " + std::to_string(i + 1) + " is empty");
    }
    if (r.words.size() != r.slot_labels.size()) {
      throw DataError(base.string() + ": utterance " + std::to_string(i + 1) + " has " +
                      std::to_string(r.words.size()) + " words but " +
                      std::to_string(r.slot_labels.size()) + " slot tags");
    }
    if (r.intent.empty()) {
      throw DataError(base.string() + ": utterance " + std::to_string(i + 1) + " has no intent");
    }
    split.push_back(std::move(r));
  }
  return split;
}

LabelMaps build_label_maps(const Split& train) {
  std::set<std::string> intents, slots;
  for (const auto& r : train) {
    intents.insert(r.intent);
    slots.insert(r.slot_labels.begin(), r.slot_labels.end());
  }
  std::vector<std::string> intent_list{kUnknownIntent};
  for (const auto& i : intents) {
    if (i != kUnknownIntent) intent_list.push_back(i);
  }
  std::vector<std::string> slot_list{kOutsideTag};
  for (const auto& s : slots) {
    if (s != kOutsideTag) slot_list.push_back(s);
  }
  return {LabelMap(std::move(intent_list)), LabelMap(std::move(slot_list))};
}

Split map_to_known_labels(const Split& split, const LabelMaps& labels) {
  Split out = split;
  for (auto& r : out) {
    if (!labels.intents.find(r.intent)) {
      r.intent = kUnknownIntent;
      r.remapped = true;
    }
    for (auto& s : r.slot_labels) {
      if (!labels.slots.find(s)) {
        s = kOutsideTag;
        r.remapped = true;
      }
    }
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("data directory '" + dir.string() + "' does not exist");
  }
  Dataset d;
  d.train = load_split(dir, kTrainSplit);
  d.dev = load_split(dir, kDevSplit);
  d.test = load_split(dir, kTestSplit);
  if (d.train.empty()) throw DataError("training split in '" + dir.string() + "' is empty");
  d.labels = build_label_maps(d.train);
  return d;
}

DatasetStats compute_stats(const Dataset& dataset) {
  std::set<std::string> intents, slots;
  for (const auto& r : dataset.train) {
    intents.insert(r.intent);
    slots.insert(r.slot_labels.begin(), r.slot_labels.end());
  }
  return {dataset.train.size(), dataset.dev.size(), dataset.test.size(), slots.size(),
          intents.size()};
}

ValidationReport validate_dataset(const Dataset& dataset, const DatasetStats& expected) {
  ValidationReport report;
  report.actual = compute_stats(dataset);
  auto compare = [&](const char* what, std::size_t got, std::size_t want) {
    if (got != want) {
      report.mismatches.push_back(std::string(what) + ": expected " + std::to_string(want) +
                                  ", found " + std::to_string(got));
    }
  };
  compare("train utterances", report.actual.train_size, expected.train_size);
  compare("dev utterances", report.actual.dev_size, expected.dev_size);
  compare("test utterances", report.actual.test_size, expected.test_size);
  compare("train slot labels", report.actual.train_slot_labels, expected.train_slot_labels);
  compare("train intents", report.actual.train_intents, expected.train_intents);

  std::set<std::string> train_words, train_tags, train_intents, bad_tags;
  for (const auto& r : dataset.train) {
    train_words.insert(r.words.begin(), r.words.end());
    train_tags.insert(r.slot_labels.begin(), r.slot_labels.end());
    train_intents.insert(r.intent);
  }
  for (const auto& t : train_tags) {
    if (!is_bio_tag(t)) bad_tags.insert(t);
  }
  report.bio_violations.assign(bad_tags.begin(), bad_tags.end());

  auto scan = [&](const Split& split, std::size_t& unseen_intents, std::size_t& unseen_tags,
                  std::size_t& oov, std::size_t& total) {
    for (const auto& r : split) {
      if (!train_intents.count(r.intent)) ++unseen_intents;
      for (const auto& t : r.slot_labels) unseen_tags += train_tags.count(t) ? 0 : 1;
      for (const auto& w : r.words) oov += train_words.count(w) ? 0 : 1;
      total += r.words.size();
    }
  };
  scan(dataset.dev, report.dev_unseen_intents, report.dev_unseen_slot_tags, report.dev_oov_words,
       report.dev_words);
  scan(dataset.test, report.test_unseen_intents, report.test_unseen_slot_tags,
       report.test_oov_words, report.test_words);
  return report;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  os << "train/dev/test utterances: " << actual.train_size << " / " << actual.dev_size << " / "
     << actual.test_size << '\n'
     << "train slot labels: " << actual.train_slot_labels
     << ", train intents: " << actual.train_intents << '\n'
     << "dev: " << dev_unseen_intents << " unseen intents, " << dev_unseen_slot_tags
     << " unseen slot tags, " << dev_oov_words << "/" << dev_words << " out-of-vocabulary words\n"
     << "test: " << test_unseen_intents << " unseen intents, " << test_unseen_slot_tags
     << " unseen slot tags, " << test_oov_words << "/" << test_words
     << " out-of-vocabulary words\n";
  for (const auto& t : bio_violations) os << "non-BIO training tag: " << t << '\n';
  for (const auto& m : mismatches) os << "MISMATCH " << m << '\n';
  return os.str();
}

}  // namespace jointnlu
