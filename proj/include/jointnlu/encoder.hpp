#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jointnlu/tensor.hpp"

namespace jointnlu {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

struct EncoderConfig {
  std::size_t num_layers = 4;
  std::size_t hidden_size = 128;
  std::size_t num_heads = 4;
  std::size_t intermediate_size = 512;
  std::size_t max_len = 50;
  std::size_t vocab_size = 0;
  double dropout_p = 0.1;
  double layer_norm_epsilon = 1e-12;

  // Throws ConfigError.
  void validate() const;

  bool operator==(const EncoderConfig&) const = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

// Dropout switch and randomness for one forward pass.
struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

// Batch of token sequences padded to a common length and packed row-major:
// row b * seq_len + t holds token t of sequence b.
struct SequenceBatch {
  std::vector<int> ids;
  std::vector<std::size_t> lengths;
  std::size_t seq_len = 0;

  std::size_t batch_size() const { return lengths.size(); }
  std::size_t row(std::size_t b, std::size_t t) const { return b * seq_len + t; }

  static SequenceBatch single(std::span<const int> ids);
  static SequenceBatch pack(std::span<const std::vector<int>> sequences, int pad_id);
};

struct EncoderLayer {
  Tensor query_w, query_b, key_w, key_b, value_w, value_b, output_w, output_b;
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b;
  Tensor ffn_norm_gain, ffn_norm_bias;
};

struct Encoder {
  EncoderConfig config;
  Tensor word_embeddings;      // vocab_size x hidden
  Tensor position_embeddings;  // max_len x hidden
  Tensor segment_embedding;    // 1 x hidden, one constant segment
  Tensor embedding_norm_gain, embedding_norm_bias;
  std::vector<EncoderLayer> layers;

  // Truncated normal (stddev 0.02, cut at two stddevs) weights, zero biases,
  // unit layer-norm gains.
  static Encoder initialize(const EncoderConfig& config, std::mt19937_64& rng);

  NamedTensors named_parameters(const std::string& prefix = "encoder.") const;
};

struct AttentionOutput {
  Tensor output;                 // residual + layer norm applied
  std::vector<Tensor> weights;   // per (sequence, head): T x T, row = query
};

struct EncoderOutput {
  Tensor hidden_states;  // (batch * seq_len) x hidden
  // [CLS] rows, batch x hidden.
  Tensor cls_states;
};

Tensor truncated_normal(Shape shape, double stddev, std::mt19937_64& rng);

// Sum of token, position, and segment embeddings, then layer norm and dropout.
Tensor embed(const SequenceBatch& batch, const Encoder& encoder, const ForwardContext& ctx);

// Scaled dot-product attention over every unpadded position of each sequence
// (no causal mask). Padded keys get -inf logits.
AttentionOutput multi_head_self_attention(const Tensor& x, const SequenceBatch& batch,
                                          const EncoderLayer& layer, const EncoderConfig& config,
                                          const ForwardContext& ctx);

Tensor feed_forward(const Tensor& x, const EncoderLayer& layer, const EncoderConfig& config,
                    const ForwardContext& ctx);

EncoderOutput encode(const SequenceBatch& batch, const Encoder& encoder, const ForwardContext& ctx);

}  // namespace jointnlu
