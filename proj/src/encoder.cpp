#include "jointnlu/encoder.hpp"

#include <cmath>
#include <limits>

#include "jointnlu/error.hpp"
#include "jointnlu/ops.hpp"

namespace jointnlu {

namespace {

constexpr double kInitStddev = 0.02;

Tensor param(Tensor t) {
  t.set_requires_grad(true);
  return t;
}

Tensor dropout_for(const Tensor& x, const EncoderConfig& config, const ForwardContext& ctx) {
  if (!ctx.training || config.dropout_p == 0.0) return x;
  if (!ctx.rng) throw ConfigError("training forward pass needs a random generator");
  return dropout(x, config.dropout_p, true, *ctx.rng);
}

}  // namespace

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("encoder config: " + msg); };
  if (num_layers == 0) fail("num_layers must be positive");
  if (hidden_size == 0 || num_heads == 0) fail("hidden_size and num_heads must be positive");
  if (hidden_size % num_heads != 0) {
    fail("hidden_size " + std::to_string(hidden_size) + " is not divisible by num_heads " +
         std::to_string(num_heads));
  }
  if (intermediate_size == 0) fail("intermediate_size must be positive");
  if (max_len < 2) fail("max_len must be at least 2");
  if (vocab_size == 0) fail("vocab_size must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout_p must be in [0, 1)");
  if (!(layer_norm_epsilon > 0.0)) fail("layer_norm_epsilon must be positive");
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"num_layers", c.num_layers},
                     {"hidden_size", c.hidden_size},
                     {"num_heads", c.num_heads},
                     {"intermediate_size", c.intermediate_size},
                     {"max_len", c.max_len},
                     {"vocab_size", c.vocab_size},
                     {"dropout_p", c.dropout_p},
                     {"layer_norm_epsilon", c.layer_norm_epsilon}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.num_layers = j.value("num_layers", c.num_layers);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.intermediate_size = j.value("intermediate_size", c.intermediate_size);
  c.max_len = j.value("max_len", c.max_len);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.dropout_p = j.value("dropout_p", c.dropout_p);
  c.layer_norm_epsilon = j.value("layer_norm_epsilon", c.layer_norm_epsilon);
}

SequenceBatch SequenceBatch::single(std::span<const int> ids) {
  SequenceBatch batch;
  batch.ids.assign(ids.begin(), ids.end());
  batch.lengths = {ids.size()};
  batch.seq_len = ids.size();
  return batch;
}

SequenceBatch SequenceBatch::pack(std::span<const std::vector<int>> sequences, int pad_id) {
  SequenceBatch batch;
  for (const auto& s : sequences) batch.seq_len = std::max(batch.seq_len, s.size());
  batch.ids.assign(sequences.size() * batch.seq_len, pad_id);
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    std::copy(sequences[b].begin(), sequences[b].end(), batch.ids.begin() + batch.row(b, 0));
    batch.lengths.push_back(sequences[b].size());
  }
  return batch;
}

Tensor truncated_normal(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) {
    double z;
    do {
      z = normal(rng);
    } while (std::abs(z) > 2.0);
    v = z * stddev;
  }
  return Tensor::from_values(std::move(shape), std::move(values));
}

Encoder Encoder::initialize(const EncoderConfig& config, std::mt19937_64& rng) {
  config.validate();
  const auto h = config.hidden_size, inter = config.intermediate_size;
  auto weight = [&](Shape s) { return param(truncated_normal(std::move(s), kInitStddev, rng)); };
  auto zeros = [](std::size_t n) { return param(Tensor::zeros({n})); };
  auto ones = [](std::size_t n) { return param(Tensor::full({n}, 1.0)); };

  Encoder enc;
  enc.config = config;
  enc.word_embeddings = weight({config.vocab_size, h});
  enc.position_embeddings = weight({config.max_len, h});
  enc.segment_embedding = weight({1, h});
  enc.embedding_norm_gain = ones(h);
  enc.embedding_norm_bias = zeros(h);
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    EncoderLayer l;
    l.query_w = weight({h, h});
    l.query_b = zeros(h);
    l.key_w = weight({h, h});
    l.key_b = zeros(h);
    l.value_w = weight({h, h});
    l.value_b = zeros(h);
    l.output_w = weight({h, h});
    l.output_b = zeros(h);
    l.attention_norm_gain = ones(h);
    l.attention_norm_bias = zeros(h);
    l.ffn_in_w = weight({inter, h});
    l.ffn_in_b = zeros(inter);
    l.ffn_out_w = weight({h, inter});
    l.ffn_out_b = zeros(h);
    l.ffn_norm_gain = ones(h);
    l.ffn_norm_bias = zeros(h);
    enc.layers.push_back(std::move(l));
  }
  return enc;
}

NamedTensors Encoder::named_parameters(const std::string& prefix) const {
  NamedTensors out{{prefix + "embeddings.word", word_embeddings},
                   {prefix + "embeddings.position", position_embeddings},
                   {prefix + "embeddings.segment", segment_embedding},
                   {prefix + "embeddings.norm.gain", embedding_norm_gain},
                   {prefix + "embeddings.norm.bias", embedding_norm_bias}};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const auto p = prefix + "layer." + std::to_string(i) + ".";
    out.insert(out.end(), {{p + "attention.query.weight", l.query_w},
                           {p + "attention.query.bias", l.query_b},
                           {p + "attention.key.weight", l.key_w},
                           {p + "attention.key.bias", l.key_b},
                           {p + "attention.value.weight", l.value_w},
                           {p + "attention.value.bias", l.value_b},
                           {p + "attention.output.weight", l.output_w},
                           {p + "attention.output.bias", l.output_b},
                           {p + "attention.norm.gain", l.attention_norm_gain},
                           {p + "attention.norm.bias", l.attention_norm_bias},
                           {p + "ffn.in.weight", l.ffn_in_w},
                           {p + "ffn.in.bias", l.ffn_in_b},
                           {p + "ffn.out.weight", l.ffn_out_w},
                           {p + "ffn.out.bias", l.ffn_out_b},
                           {p + "ffn.norm.gain", l.ffn_norm_gain},
                           {p + "ffn.norm.bias", l.ffn_norm_bias}});
  }
  return out;
}

Tensor embed(const SequenceBatch& batch, const Encoder& encoder, const ForwardContext& ctx) {
  const auto& config = encoder.config;
  if (batch.seq_len > config.max_len) {
    throw ShapeError("sequence length " + std::to_string(batch.seq_len) + " exceeds max_len " +
                     std::to_string(config.max_len));
  }
  if (batch.ids.size() != batch.batch_size() * batch.seq_len) {
    throw ShapeError("malformed batch: " + std::to_string(batch.ids.size()) + " ids for " +
                     std::to_string(batch.batch_size()) + " x " + std::to_string(batch.seq_len));
  }
  std::vector<std::size_t> positions(batch.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % batch.seq_len;

  auto tokens = embedding_lookup(encoder.word_embeddings, batch.ids);
  auto summed = add(tokens, gather_rows(encoder.position_embeddings, positions));
  summed = add(summed, reshape(encoder.segment_embedding, {config.hidden_size}));
  auto normed = layer_norm(summed, encoder.embedding_norm_gain, encoder.embedding_norm_bias,
                           config.layer_norm_epsilon);
  return dropout_for(normed, config, ctx);
}

AttentionOutput multi_head_self_attention(const Tensor& x, const SequenceBatch& batch,
                                          const EncoderLayer& layer, const EncoderConfig& config,
                                          const ForwardContext& ctx) {
  const auto seq = batch.seq_len;
  if (x.ndim() != 2 || x.rows() != batch.batch_size() * seq || x.cols() != config.hidden_size) {
    throw ShapeError("attention input " + shape_str(x.shape()) + " does not match batch " +
                     std::to_string(batch.batch_size()) + " x " + std::to_string(seq) +
                     " x hidden " + std::to_string(config.hidden_size));
  }
  const auto head_dim = config.hidden_size / config.num_heads;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const auto q = linear(x, layer.query_w, layer.query_b);
  const auto k = linear(x, layer.key_w, layer.key_b);
  const auto v = linear(x, layer.value_w, layer.value_b);

  AttentionOutput result;
  std::vector<Tensor> per_sequence;
  per_sequence.reserve(batch.batch_size());
  for (std::size_t b = 0; b < batch.batch_size(); ++b) {
    const auto r0 = batch.row(b, 0);
    const auto qb = slice(q, 0, r0, r0 + seq);
    const auto kb = slice(k, 0, r0, r0 + seq);
    const auto vb = slice(v, 0, r0, r0 + seq);
    Tensor mask;
    if (batch.lengths[b] < seq) {
      std::vector<double> m(seq, 0.0);
      for (std::size_t t = batch.lengths[b]; t < seq; ++t) {
        m[t] = -std::numeric_limits<double>::infinity();
      }
      mask = Tensor::from_values({seq}, std::move(m));
    }
    std::vector<Tensor> heads;
    heads.reserve(config.num_heads);
    for (std::size_t h = 0; h < config.num_heads; ++h) {
      const auto c0 = h * head_dim;
      const auto qh = slice(qb, 1, c0, c0 + head_dim);
      const auto kh = slice(kb, 1, c0, c0 + head_dim);
      const auto vh = slice(vb, 1, c0, c0 + head_dim);
      auto scores = scale(matmul(qh, transpose(kh)), inv_sqrt_d);
      if (mask.defined()) scores = add(scores, mask);
      auto probs = softmax(scores, 1);
      result.weights.push_back(probs);
      heads.push_back(matmul(dropout_for(probs, config, ctx), vh));
    }
    per_sequence.push_back(concat(heads, 1));
  }
  const auto context = concat(per_sequence, 0);
  const auto projected = dropout_for(linear(context, layer.output_w, layer.output_b), config, ctx);
  result.output = layer_norm(add(x, projected), layer.attention_norm_gain,
                             layer.attention_norm_bias, config.layer_norm_epsilon);
  return result;
}

Tensor feed_forward(const Tensor& x, const EncoderLayer& layer, const EncoderConfig& config,
                    const ForwardContext& ctx) {
  const auto inner = gelu(linear(x, layer.ffn_in_w, layer.ffn_in_b));
  const auto projected = dropout_for(linear(inner, layer.ffn_out_w, layer.ffn_out_b), config, ctx);
  return layer_norm(add(x, projected), layer.ffn_norm_gain, layer.ffn_norm_bias,
                    config.layer_norm_epsilon);
}

EncoderOutput encode(const SequenceBatch& batch, const Encoder& encoder, const ForwardContext& ctx) {
  auto x = embed(batch, encoder, ctx);
  for (const auto& layer : encoder.layers) {
    x = multi_head_self_attention(x, batch, layer, encoder.config, ctx).output;
    x = feed_forward(x, layer, encoder.config, ctx);
  }
  std::vector<std::size_t> cls_rows;
  for (std::size_t b = 0; b < batch.batch_size(); ++b) cls_rows.push_back(batch.row(b, 0));
  return {x, gather_rows(x, cls_rows)};
}

}  // namespace jointnlu
