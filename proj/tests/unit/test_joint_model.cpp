#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "grad_cases.hpp"
#include "jointnlu/error.hpp"
#include "jointnlu/joint_model.hpp"
#include "jointnlu/ops.hpp"
#include "jointnlu/trainer.hpp"

using namespace jointnlu;
using testing::tiny_config;

namespace {

void zero_heads(JointModel& m) {
  for (auto t : {m.intent_weight, m.intent_bias, m.slot_weight, m.slot_bias}) {
    for (double& v : t.mutable_values()) v = 0.0;
  }
}

void perturb(JointModel& m, std::uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& [name, p] : m.named_parameters()) {
    for (double& v : p.mutable_values()) v += noise(rng);
  }
}

// -log p(intent) - sum_n log p(slot_n), from separately computed softmaxes.
double independent_nll(const TokenizedExample& ex, const JointModel& m) {
  NoGradGuard guard;
  const auto out = encode(SequenceBatch::single(ex.token_ids), m.encoder, {});
  const auto pi = softmax(intent_logits(out.cls_states, m), 1);
  double nll = -std::log(pi.at(0, static_cast<std::size_t>(*ex.intent_label)));
  const auto ps = softmax(slot_logits(out.hidden_states, ex.word_start_mask, m), 1);
  for (std::size_t n = 0; n < ex.slot_label_ids->size(); ++n) {
    nll -= std::log(ps.at(n, static_cast<std::size_t>((*ex.slot_label_ids)[n])));
  }
  return nll;
}

LabelMaps toy_labels(std::size_t intents, std::size_t slots) {
  std::vector<std::string> i{"UNK"}, s{"O"};
  for (std::size_t k = 1; k < intents; ++k) i.push_back("intent" + std::to_string(k));
  for (std::size_t k = 1; k < slots; ++k) s.push_back("B-s" + std::to_string(k));
  return {LabelMap(i), LabelMap(s)};
}

}  // namespace

TEST_CASE("parameter names, variants and clone independence") {
  auto m = JointModel::initialize(tiny_config(12), 3, 4, Variant::kSoftmax, 1);
  auto c = JointModel::initialize(tiny_config(12), 3, 4, Variant::kCrf, 1);
  auto has = [](const JointModel& model, const std::string& name) {
    for (const auto& [n, t] : model.named_parameters()) {
      if (n == name) return true;
    }
    return false;
  };
  CHECK(has(m, "intent.weight"));
  CHECK(has(m, "slot.bias"));
  CHECK_FALSE(has(m, "crf.transitions"));
  CHECK(has(c, "crf.transitions"));
  CHECK(c.variant() == Variant::kCrf);
  for (double v : c.crf->transitions.values()) CHECK(v == 0.0);
  CHECK(m.intent_weight.shape() == Shape{3, 16});
  CHECK(m.slot_weight.shape() == Shape{4, 16});

  auto copy = m.clone();
  copy.intent_bias.mutable_values()[0] = 5.0;
  CHECK(m.intent_bias.at(0) == 0.0);
  m.copy_values_from(copy);
  CHECK(m.intent_bias.at(0) == 5.0);
  CHECK_THROWS_AS(m.copy_values_from(c), ShapeError);
  CHECK(parse_variant("crf") == Variant::kCrf);
  CHECK_THROWS_AS(parse_variant("lstm"), ConfigError);
}

TEST_CASE("intent_logits: zero head is uniform, hand-set head is exact") {
  auto config = tiny_config(12);
  config.hidden_size = 4;
  auto m = JointModel::initialize(config, 2, 3, Variant::kSoftmax, 2);
  zero_heads(m);
  const auto h = Tensor::from_values({4}, {1, -2, 0.5, 3});
  const auto p = softmax(intent_logits(h, m), 0);
  CHECK(p.at(0) == doctest::Approx(0.5));
  const std::vector<double> w{1, 0, 2, -1, 0.5, 0.5, 0, 1};
  std::copy(w.begin(), w.end(), m.intent_weight.mutable_values().begin());
  m.intent_bias.mutable_values()[1] = 0.25;
  const auto z = intent_logits(h, m);
  CHECK(z.at(0) == doctest::Approx(1 + 1 - 3));           // 1*1 + 2*0.5 - 1*3
  CHECK(z.at(1) == doctest::Approx(0.5 - 1 + 3 + 0.25));  // 0.5*1 + 0.5*-2 + 1*3 + b
  CHECK_THROWS_AS(intent_logits(Tensor::zeros({5}), m), ShapeError);
}

TEST_CASE("slot_logits selects first sub-token rows only") {
  auto config = tiny_config(12);
  config.hidden_size = 2;
  config.num_heads = 1;
  auto m = JointModel::initialize(config, 2, 2, Variant::kSoftmax, 3);
  const std::vector<double> w{1, 2, -1, 0};
  std::copy(w.begin(), w.end(), m.slot_weight.mutable_values().begin());
  m.slot_bias.mutable_values()[0] = 0.5;
  m.slot_bias.mutable_values()[1] = 0.0;
  // [CLS] w1 w2a ##w2b w3 [SEP]
  const std::vector<unsigned char> mask{0, 1, 1, 0, 1, 0};
  auto h = Tensor::from_values({6, 2}, {9, 9, 1, 1, 2, -1, 7, 7, 0, 3, 9, 9});
  const auto z = slot_logits(h, mask, m);
  CHECK(z.shape() == Shape{3, 2});
  CHECK(z.at(0, 0) == doctest::Approx(3.5));
  CHECK(z.at(0, 1) == doctest::Approx(-1));
  CHECK(z.at(1, 0) == doctest::Approx(0.5));
  CHECK(z.at(2, 0) == doctest::Approx(6.5));
  // Perturbing masked-out rows ([CLS], continuation, [SEP]) changes nothing.
  for (std::size_t r : {0, 3, 5}) {
    h.mutable_values()[r * 2] += 100;
  }
  const auto z2 = slot_logits(h, mask, m);
  CHECK(std::equal(z.values().begin(), z.values().end(), z2.values().begin()));
  const std::vector<unsigned char> short_mask{0, 1};
  CHECK_THROWS_AS(slot_logits(h, short_mask, m), ShapeError);
}

TEST_CASE("zero heads give ln K + N ln L") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t k = 2 + trial % 4, l = 2 + trial % 3;
    auto m = JointModel::initialize(tiny_config(12), k, l, Variant::kSoftmax, trial);
    zero_heads(m);
    const auto ex = testing::random_example(rng, 12, k, l, 5);
    const auto n = static_cast<double>(ex.slot_label_ids->size());
    CHECK(joint_loss(ex, m, {}).item() ==
          doctest::Approx(std::log(double(k)) + n * std::log(double(l))).epsilon(1e-12));
  }
}

TEST_CASE("certain predictions give near-zero loss") {
  auto m = JointModel::initialize(tiny_config(12), 3, 3, Variant::kSoftmax, 5);
  zero_heads(m);
  m.intent_bias.mutable_values()[1] = 40;
  m.slot_bias.mutable_values()[2] = 40;
  TokenizedExample ex{{2, 5, 3}, {0, 1, 0}, 1, std::vector<int>{2}, 1, 1};
  CHECK(joint_loss(ex, m, {}).item() < 1e-9);
}

TEST_CASE("factorization holds on 100 random models and examples") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    auto m = JointModel::initialize(tiny_config(12), 2 + trial % 3, 2 + trial % 4,
                                    Variant::kSoftmax, trial);
    perturb(m, trial + 100, 0.3);
    const auto ex = testing::random_example(rng, 12, m.intent_count(), m.slot_count(), 6);
    const double loss = joint_loss(ex, m, {}).item();
    CHECK(std::abs(loss - independent_nll(ex, m)) < 1e-9);
    CHECK(loss >= 0.0);
  }
}

TEST_CASE("single-task objectives are the two factors of the joint loss") {
  std::mt19937_64 rng(7);
  auto m = JointModel::initialize(tiny_config(12), 3, 4, Variant::kSoftmax, 7);
  perturb(m, 8, 0.3);
  const auto ex = testing::random_example(rng, 12, 3, 4, 5);
  const double joint = joint_loss(ex, m, {}).item();
  const double intent = joint_loss(ex, m, {}, Objective::kIntentOnly).item();
  const double slots = joint_loss(ex, m, {}, Objective::kSlotOnly).item();
  CHECK(joint == doctest::Approx(intent + slots).epsilon(1e-12));
  TokenizedExample unlabeled = ex;
  unlabeled.slot_label_ids.reset();
  CHECK_THROWS_AS(joint_loss(unlabeled, m, {}), DataError);
  CHECK_NOTHROW(joint_loss(unlabeled, m, {}, Objective::kIntentOnly));
}

TEST_CASE("crf variant: intent term unchanged, slot term is crf_nll") {
  std::mt19937_64 rng(8);
  auto m = JointModel::initialize(tiny_config(12), 3, 3, Variant::kCrf, 9);
  perturb(m, 10, 0.3);
  const auto ex = testing::random_example(rng, 12, 3, 3, 4);
  const double intent = joint_loss(ex, m, {}, Objective::kIntentOnly).item();
  NoGradGuard guard;
  const auto out = encode(SequenceBatch::single(ex.token_ids), m.encoder, {});
  const auto emissions = slot_logits(out.hidden_states, ex.word_start_mask, m);
  const double expected = intent + crf_nll(emissions, *ex.slot_label_ids, *m.crf).item();
  CHECK(joint_loss(ex, m, {}).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("batch loss and gradient are means of per-example values") {
  for (auto variant : {Variant::kSoftmax, Variant::kCrf}) {
    std::mt19937_64 rng(9);
    auto m = JointModel::initialize(tiny_config(12), 3, 4, variant, 11);
    perturb(m, 12, 0.3);
    std::vector<TokenizedExample> examples;
    for (int i = 0; i < 5; ++i) examples.push_back(testing::random_example(rng, 12, 3, 4, 6));
    std::vector<const TokenizedExample*> batch;
    for (const auto& e : examples) batch.push_back(&e);
    const auto params = m.named_parameters();

    zero_gradients(params);
    const auto bl = batch_loss(batch, m, {});
    bl.backward();
    std::vector<std::vector<double>> batch_grads;
    for (const auto& [n, p] : params) batch_grads.emplace_back(p.grad().begin(), p.grad().end());

    zero_gradients(params);
    double mean_loss = 0;
    for (const auto& e : examples) {
      const auto l = joint_loss(e, m, {});
      mean_loss += l.item() / 5.0;
      scale(l, 1.0 / 5.0).backward();
    }
    CHECK(std::abs(bl.item() - mean_loss) < 1e-6);
    double worst = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (std::size_t i = 0; i < batch_grads[k].size(); ++i) {
        worst = std::max(worst, std::abs(batch_grads[k][i] - params[k].second.grad()[i]));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("argmax invariance under a constant intent shift") {
  std::mt19937_64 rng(10);
  auto m = JointModel::initialize(tiny_config(12), 4, 3, Variant::kSoftmax, 13);
  perturb(m, 14, 0.3);
  std::vector<TokenizedExample> examples;
  for (int i = 0; i < 20; ++i) examples.push_back(testing::random_example(rng, 12, 4, 3, 5));
  const auto before = decode_batch(examples, m);
  for (double& b : m.intent_bias.mutable_values()) b += 3.7;
  const auto after = decode_batch(examples, m);
  for (std::size_t i = 0; i < examples.size(); ++i) CHECK(before[i].intent == after[i].intent);
}

TEST_CASE("batched decoding equals one-at-a-time decoding") {
  for (auto variant : {Variant::kSoftmax, Variant::kCrf}) {
    std::mt19937_64 rng(11);
    auto m = JointModel::initialize(tiny_config(12), 4, 3, variant, 15);
    perturb(m, 16, 0.3);
    std::vector<TokenizedExample> examples;
    for (int i = 0; i < 9; ++i) examples.push_back(testing::random_example(rng, 12, 4, 3, 6));
    const auto batched = decode_batch(examples, m, 4);
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto single = decode_batch(std::span(&examples[i], 1), m);
      CHECK(single[0].intent == batched[i].intent);
      CHECK(single[0].slot_ids == batched[i].slot_ids);
      CHECK(std::abs(single[0].intent_probability - batched[i].intent_probability) < 1e-12);
    }
  }
}

TEST_CASE("predict on the case-study query gives one slot per word, deterministically") {
  const auto words = split_words("need to see mother joan of the angels in one second");
  std::vector<std::vector<std::string>> corpus{words};
  const auto vocab = build_vocab(corpus, 60);
  const auto labels = toy_labels(3, 5);
  auto config = tiny_config(vocab.size(), 50);
  const auto m = JointModel::initialize(config, 3, 5, Variant::kSoftmax, 17);
  const auto a = predict(words, m, vocab, labels);
  CHECK(a.slots.size() == 11);
  CHECK(a.intent_distribution.size() == 3);
  const auto b = predict(words, m, vocab, labels);
  CHECK(a.intent == b.intent);
  CHECK(a.slots == b.slots);
  CHECK(a.intent_probability == b.intent_probability);
  const std::vector<std::string> none;
  CHECK_THROWS_AS(predict(none, m, vocab, labels), DataError);
}

TEST_CASE("words cut by max_len are tagged O") {
  const auto words = split_words("need to see mother joan of the angels in one second");
  std::vector<std::vector<std::string>> corpus{words};
  const auto vocab = build_vocab(corpus, 60);
  const auto m = JointModel::initialize(tiny_config(vocab.size(), 6), 3, 5, Variant::kCrf, 18);
  const auto p = predict(words, m, vocab, toy_labels(3, 5));
  CHECK(p.slots.size() == 11);
  CHECK(p.slots.back() == "O");
}

TEST_CASE("a model overfit on one example reproduces it") {
  for (auto variant : {Variant::kSoftmax, Variant::kCrf}) {
    const auto words = split_words("play the new song by adele");
    const std::vector<std::string> tags{"O", "O", "B-s2", "B-s1", "O", "B-s3"};
    std::vector<std::vector<std::string>> corpus{words};
    const auto vocab = build_vocab(corpus, 40);
    const auto labels = toy_labels(4, 4);
    const auto ex = encode_example(words, std::span<const std::string>(tags), "intent2", vocab,
                                   labels, 16);
    auto m = JointModel::initialize(tiny_config(vocab.size(), 16), 4, 4, variant, 19);
    TrainConfig tc;
    tc.learning_rate = 1e-2;
    tc.batch_size = 1;
    tc.max_epochs = 60;
    tc.dropout_p = 0.0;
    train(std::span(&ex, 1), m, tc);
    const auto p = predict(words, m, vocab, labels);
    CHECK(p.intent == "intent2");
    CHECK(p.slots == tags);
  }
}
