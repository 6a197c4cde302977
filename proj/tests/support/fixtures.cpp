#include "fixtures.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "gradcheck.hpp"

namespace jointnlu::testing {

std::filesystem::path data_root() { return JOINTNLU_TEST_DATA_DIR; }
std::filesystem::path small_data_dir() { return data_root() / "snips_like_small"; }
std::filesystem::path proxy_data_dir() { return data_root() / "snips_like_proxy"; }

std::filesystem::path fresh_temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("jointnlu_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

EncoderConfig tiny_config(std::size_t vocab_size, std::size_t max_len) {
  EncoderConfig c;
  c.num_layers = 2;
  c.hidden_size = 16;
  c.num_heads = 2;
  c.intermediate_size = 32;
  c.max_len = max_len;
  c.vocab_size = vocab_size;
  c.dropout_p = 0.0;
  return c;
}

CrfParams random_crf(std::size_t labels, std::uint64_t seed, bool requires_grad) {
  return {random_tensor({labels, labels}, seed, 1.0, requires_grad),
          random_tensor({labels}, seed + 1, 1.0, requires_grad),
          random_tensor({labels}, seed + 2, 1.0, requires_grad)};
}

BruteForceCrf brute_force_crf(const Tensor& emissions, const CrfParams& crf) {
  const std::size_t n = emissions.rows(), l = emissions.cols();
  std::vector<int> labels(n, 0);
  BruteForceCrf out;
  out.best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> scores;
  for (;;) {
    double s = crf.start_scores.at(labels[0]) + crf.end_scores.at(labels[n - 1]);
    for (std::size_t i = 0; i < n; ++i) s += emissions.at(i, labels[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) s += crf.transitions.at(labels[i], labels[i + 1]);
    scores.push_back(s);
    if (s > out.best_score) {
      out.best_score = s;
      out.best = labels;
    }
    std::size_t pos = n;
    while (pos > 0 && static_cast<std::size_t>(++labels[pos - 1]) == l) labels[--pos] = 0;
    if (pos == 0) break;
  }
  const double m = out.best_score;
  double total = 0.0;
  for (double s : scores) total += std::exp(s - m);
  out.log_partition = m + std::log(total);
  return out;
}

Metrics majority_baseline(const Split& train, const Split& test, const LabelMaps& labels) {
  auto argmax = [](const std::map<std::string, std::size_t>& counts) {
    std::string best;
    std::size_t best_count = 0;
    for (const auto& [key, count] : counts) {
      if (count > best_count) best = key, best_count = count;  // map order: ties go to smallest
    }
    return best;
  };
  std::map<std::string, std::size_t> intent_counts;
  std::map<std::string, std::map<std::string, std::size_t>> tag_counts;
  for (const auto& r : train) {
    ++intent_counts[r.intent];
    for (std::size_t i = 0; i < r.words.size(); ++i) ++tag_counts[r.words[i]][r.slot_labels[i]];
  }
  const auto majority_intent = argmax(intent_counts);
  std::map<std::string, std::string> word_tag;
  for (const auto& [word, counts] : tag_counts) word_tag[word] = argmax(counts);

  const auto mapped = map_to_known_labels(test, labels);
  std::vector<std::string> gold_intents, predicted_intents;
  std::vector<TagSequence> gold_tags, predicted_tags;
  for (std::size_t k = 0; k < test.size(); ++k) {
    gold_intents.push_back(test[k].intent);
    predicted_intents.push_back(majority_intent);
    gold_tags.push_back(mapped[k].slot_labels);
    TagSequence tags;
    for (const auto& w : test[k].words) {
      const auto it = word_tag.find(w);
      tags.push_back(it == word_tag.end() ? kOutsideTag : it->second);
    }
    predicted_tags.push_back(std::move(tags));
  }
  return compute_metrics(gold_intents, predicted_intents, gold_tags, predicted_tags);
}

}  // namespace jointnlu::testing
