#include "jointnlu/joint_model.hpp"

#include <algorithm>
#include <cmath>

#include "jointnlu/error.hpp"
#include "jointnlu/ops.hpp"

namespace jointnlu {

namespace {

constexpr double kHeadInitStddev = 0.02;
// Padded positions are masked out of attention and losses, so any in-range id
// serves as filler.
constexpr int kFillerId = 0;

Tensor head_dropout(const Tensor& x, const JointModel& model, const ForwardContext& ctx) {
  const double p = model.config().dropout_p;
  if (!ctx.training || p == 0.0) return x;
  if (!ctx.rng) throw ConfigError("training forward pass needs a random generator");
  return dropout(x, p, true, *ctx.rng);
}

std::size_t argmax(std::span<const double> xs) {
  return static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

Tensor deep_copy(const Tensor& t) {
  return Tensor::from_values(t.shape(), std::vector<double>(t.values().begin(), t.values().end()),
                             t.requires_grad());
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::kCrf ? "crf" : "softmax"; }

Variant parse_variant(std::string_view name) {
  if (name == "softmax") return Variant::kSoftmax;
  if (name == "crf") return Variant::kCrf;
  throw ConfigError("unknown model variant '" + std::string(name) + "' (expected softmax or crf)");
}

JointModel JointModel::initialize(const EncoderConfig& config, std::size_t intent_count,
                                  std::size_t slot_count, Variant variant, std::uint64_t seed) {
  if (intent_count == 0 || slot_count == 0) {
    throw ConfigError("model needs at least one intent and one slot label");
  }
  std::mt19937_64 rng(seed);
  JointModel m;
  m.encoder = Encoder::initialize(config, rng);
  const auto h = config.hidden_size;
  m.intent_weight = truncated_normal({intent_count, h}, kHeadInitStddev, rng);
  m.intent_bias = Tensor::zeros({intent_count});
  m.slot_weight = truncated_normal({slot_count, h}, kHeadInitStddev, rng);
  m.slot_bias = Tensor::zeros({slot_count});
  for (auto* t : {&m.intent_weight, &m.intent_bias, &m.slot_weight, &m.slot_bias}) {
    t->set_requires_grad(true);
  }
  if (variant == Variant::kCrf) m.crf = CrfParams::zeros(slot_count);
  return m;
}

NamedTensors JointModel::named_parameters() const {
  auto out = encoder.named_parameters();
  out.emplace_back("intent.weight", intent_weight);
  out.emplace_back("intent.bias", intent_bias);
  out.emplace_back("slot.weight", slot_weight);
  out.emplace_back("slot.bias", slot_bias);
  if (crf) {
    out.emplace_back("crf.transitions", crf->transitions);
    out.emplace_back("crf.start", crf->start_scores);
    out.emplace_back("crf.end", crf->end_scores);
  }
  return out;
}

JointModel JointModel::clone() const {
  JointModel m = *this;
  auto copy = [](Tensor& t) { t = deep_copy(t); };
  copy(m.encoder.word_embeddings);
  copy(m.encoder.position_embeddings);
  copy(m.encoder.segment_embedding);
  copy(m.encoder.embedding_norm_gain);
  copy(m.encoder.embedding_norm_bias);
  for (auto& l : m.encoder.layers) {
    for (auto* t : {&l.query_w, &l.query_b, &l.key_w, &l.key_b, &l.value_w, &l.value_b,
                    &l.output_w, &l.output_b, &l.attention_norm_gain, &l.attention_norm_bias,
                    &l.ffn_in_w, &l.ffn_in_b, &l.ffn_out_w, &l.ffn_out_b, &l.ffn_norm_gain,
                    &l.ffn_norm_bias}) {
      copy(*t);
    }
  }
  copy(m.intent_weight);
  copy(m.intent_bias);
  copy(m.slot_weight);
  copy(m.slot_bias);
  if (m.crf) {
    copy(m.crf->transitions);
    copy(m.crf->start_scores);
    copy(m.crf->end_scores);
  }
  return m;
}

void JointModel::copy_values_from(const JointModel& other) {
  auto dst = named_parameters();
  auto src = other.named_parameters();
  if (dst.size() != src.size()) throw ShapeError("copy_values_from: models differ in structure");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].first != src[i].first || dst[i].second.shape() != src[i].second.shape()) {
      throw ShapeError("copy_values_from: parameter '" + dst[i].first + "' differs");
    }
    auto values = src[i].second.values();
    std::copy(values.begin(), values.end(), dst[i].second.mutable_values().begin());
  }
}

Tensor intent_logits(const Tensor& h1, const JointModel& model) {
  if (h1.ndim() == 1) {
    const auto logits = linear(reshape(h1, {1, h1.dim(0)}), model.intent_weight, model.intent_bias);
    return reshape(logits, {model.intent_count()});
  }
  return linear(h1, model.intent_weight, model.intent_bias);
}

Tensor slot_logits(const Tensor& hidden_states, std::span<const unsigned char> word_start_mask,
                   const JointModel& model) {
  if (hidden_states.ndim() != 2 || hidden_states.rows() != word_start_mask.size()) {
    throw ShapeError("slot_logits: mask of length " + std::to_string(word_start_mask.size()) +
                     " for hidden states " + shape_str(hidden_states.shape()));
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < word_start_mask.size(); ++i) {
    if (word_start_mask[i]) rows.push_back(i);
  }
  return linear(gather_rows(hidden_states, rows), model.slot_weight, model.slot_bias);
}

Tensor batch_loss(std::span<const TokenizedExample* const> batch, const JointModel& model,
                  const ForwardContext& ctx, Objective objective) {
  if (batch.empty()) throw DataError("batch_loss: empty batch");
  const bool want_intent = objective != Objective::kSlotOnly;
  const bool want_slots = objective != Objective::kIntentOnly;

  std::vector<std::vector<int>> sequences;
  for (const auto* ex : batch) {
    if (want_intent && !ex->intent_label) throw DataError("example has no intent label");
    if (want_slots && !ex->slot_label_ids) throw DataError("example has no slot labels");
    sequences.push_back(ex->token_ids);
  }
  const auto packed = SequenceBatch::pack(sequences, kFillerId);
  const auto encoded = encode(packed, model.encoder, ctx);

  std::vector<Tensor> terms;
  if (want_intent) {
    std::vector<std::size_t> targets;
    for (const auto* ex : batch) targets.push_back(static_cast<std::size_t>(*ex->intent_label));
    const auto logits = intent_logits(head_dropout(encoded.cls_states, model, ctx), model);
    terms.push_back(cross_entropy_rows(logits, targets));
  }
  if (want_slots) {
    std::vector<std::size_t> rows, targets, offsets{0};
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto starts = batch[b]->word_start_positions();
      const auto& labels = *batch[b]->slot_label_ids;
      if (labels.size() != starts.size()) {
        throw DataError("example has " + std::to_string(labels.size()) + " slot labels for " +
                        std::to_string(starts.size()) + " words");
      }
      for (std::size_t n = 0; n < starts.size(); ++n) {
        rows.push_back(packed.row(b, starts[n]));
        targets.push_back(static_cast<std::size_t>(labels[n]));
      }
      offsets.push_back(rows.size());
    }
    if (!rows.empty()) {
      const auto selected = head_dropout(gather_rows(encoded.hidden_states, rows), model, ctx);
      const auto emissions = linear(selected, model.slot_weight, model.slot_bias);
      if (!model.crf) {
        terms.push_back(cross_entropy_rows(emissions, targets));
      } else {
        for (std::size_t b = 0; b < batch.size(); ++b) {
          if (offsets[b + 1] == offsets[b]) continue;
          terms.push_back(crf_nll(slice(emissions, 0, offsets[b], offsets[b + 1]),
                                  *batch[b]->slot_label_ids, *model.crf));
        }
      }
    }
  }
  Tensor total = terms.empty() ? Tensor::scalar(0.0) : terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return scale(total, 1.0 / static_cast<double>(batch.size()));
}

Tensor joint_loss(const TokenizedExample& example, const JointModel& model,
                  const ForwardContext& ctx, Objective objective) {
  const TokenizedExample* one[] = {&example};
  return batch_loss(one, model, ctx, objective);
}

std::vector<DecodedExample> decode_batch(std::span<const TokenizedExample> examples,
                                         const JointModel& model, std::size_t batch_size) {
  NoGradGuard no_grad;
  const ForwardContext ctx{};
  std::vector<DecodedExample> out;
  out.reserve(examples.size());
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t begin = 0; begin < examples.size(); begin += batch_size) {
    const auto end = std::min(examples.size(), begin + batch_size);
    std::vector<std::vector<int>> sequences;
    for (auto i = begin; i < end; ++i) sequences.push_back(examples[i].token_ids);
    const auto packed = SequenceBatch::pack(sequences, kFillerId);
    const auto encoded = encode(packed, model.encoder, ctx);
    const auto probs = softmax(intent_logits(encoded.cls_states, model), 1);
    const auto k = model.intent_count();
    for (auto i = begin; i < end; ++i) {
      const auto b = i - begin;
      DecodedExample d;
      const auto row = probs.values().subspan(b * k, k);
      d.intent_distribution.assign(row.begin(), row.end());
      d.intent = static_cast<int>(argmax(row));
      d.intent_probability = row[static_cast<std::size_t>(d.intent)];

      const auto starts = examples[i].word_start_positions();
      if (!starts.empty()) {
        std::vector<std::size_t> rows;
        for (auto s : starts) rows.push_back(packed.row(b, s));
        const auto emissions =
            linear(gather_rows(encoded.hidden_states, rows), model.slot_weight, model.slot_bias);
        if (model.crf) {
          d.slot_ids = viterbi_decode(emissions, *model.crf).labels;
        } else {
          const auto l = model.slot_count();
          for (std::size_t n = 0; n < starts.size(); ++n) {
            d.slot_ids.push_back(static_cast<int>(argmax(emissions.values().subspan(n * l, l))));
          }
        }
      }
      out.push_back(std::move(d));
    }
  }
  return out;
}

Prediction to_prediction(const DecodedExample& decoded, std::size_t input_words,
                         const LabelMaps& labels) {
  Prediction p;
  p.intent = labels.intents.label(decoded.intent);
  p.intent_probability = decoded.intent_probability;
  p.intent_distribution = decoded.intent_distribution;
  for (int id : decoded.slot_ids) p.slots.push_back(labels.slots.label(id));
  const std::string outside = labels.slots.find("O") ? "O" : labels.slots.label(0);
  p.slots.resize(std::max(input_words, p.slots.size()), outside);
  return p;
}

Prediction predict(std::span<const std::string> words, const JointModel& model,
                   const Vocabulary& vocab, const LabelMaps& labels) {
  if (words.empty()) throw DataError("predict: empty query");
  const auto example =
      encode_example(words, std::nullopt, std::nullopt, vocab, labels, model.config().max_len);
  const auto decoded = decode_batch(std::span(&example, 1), model);
  return to_prediction(decoded.front(), words.size(), labels);
}

}  // namespace jointnlu
