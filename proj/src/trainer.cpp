#include "jointnlu/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::kIntentOnly:
      return "intent_only";
    case Objective::kSlotOnly:
      return "slot_only";
    case Objective::kJoint:
      break;
  }
  return "joint";
}

Objective parse_objective(const std::string& name) {
  if (name == "joint") return Objective::kJoint;
  if (name == "intent_only") return Objective::kIntentOnly;
  if (name == "slot_only") return Objective::kSlotOnly;
  throw ConfigError("unknown objective '" + name + "'");
}

std::size_t resolve_threads(std::size_t requested, std::size_t work) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(work, 1));
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout_p must be in [0, 1)");
  if (batch_size == 0) fail("batch_size must be at least 1");
  if (max_epochs == 0) fail("max_epochs must be at least 1");
  if (max_len < 2) fail("max_len must be at least 2");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail("Adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},       {"epoch_grid", c.epoch_grid},
                     {"dropout_p", c.dropout_p},         {"max_len", c.max_len},
                     {"seed", c.seed},                   {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},       {"adam_epsilon", c.adam_epsilon},
                     {"clip_norm", c.clip_norm},         {"eval_threads", c.eval_threads},
                     {"objective", objective_name(c.objective)}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.epoch_grid = j.value("epoch_grid", c.epoch_grid);
  c.dropout_p = j.value("dropout_p", c.dropout_p);
  c.max_len = j.value("max_len", c.max_len);
  c.seed = j.value("seed", c.seed);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.eval_threads = j.value("eval_threads", c.eval_threads);
  if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
}

void adam_step(const NamedTensors& params, AdamState& state, const AdamConfig& config) {
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& [name, p] : params) {
      state.first_moment.emplace_back(p.numel(), 0.0);
      state.second_moment.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("Adam state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k].second;
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (m.size() != p.numel()) throw ShapeError("Adam state shape mismatch for " + params[k].first);
    auto values = p.mutable_values();
    const bool has_grad = p.has_grad();
    auto grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = has_grad ? grad[i] : 0.0;
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

double clip_gradients(const NamedTensors& params, double max_norm) {
  double squared = 0.0;
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) squared += g * g;
  }
  const double norm = std::sqrt(squared);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto [name, p] : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void zero_gradients(const NamedTensors& params) {
  for (auto [name, p] : params) p.zero_grad();
}

std::vector<TokenizedExample> encode_split(const Split& mapped_split, const Vocabulary& vocab,
                                           const LabelMaps& labels, std::size_t max_len) {
  std::vector<TokenizedExample> out;
  out.reserve(mapped_split.size());
  for (const auto& r : mapped_split) {
    out.push_back(encode_example(r.words, std::span<const std::string>(r.slot_labels), r.intent,
                                 vocab, labels, max_len));
  }
  return out;
}

EvalSet make_eval_set(const Split& split, const Vocabulary& vocab, const LabelMaps& labels,
                      std::size_t max_len) {
  const auto mapped = map_to_known_labels(split, labels);
  EvalSet set;
  set.examples = encode_split(mapped, vocab, labels, max_len);
  for (std::size_t i = 0; i < split.size(); ++i) {
    set.gold_intents.push_back(split[i].intent);
    set.gold_tags.push_back(mapped[i].slot_labels);
  }
  return set;
}

std::vector<DecodedExample> decode_parallel(const JointModel& model,
                                            std::span<const TokenizedExample> examples,
                                            std::size_t threads) {
  const auto workers = resolve_threads(threads, examples.size());
  if (workers <= 1) return decode_batch(examples, model);
  std::vector<std::vector<DecodedExample>> parts(workers);
  std::vector<std::thread> pool;
  const auto chunk = (examples.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const auto begin = std::min(examples.size(), w * chunk);
    const auto end = std::min(examples.size(), begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      parts[w] = decode_batch(examples.subspan(begin, end - begin), model);
    });
  }
  for (auto& t : pool) t.join();
  std::vector<DecodedExample> out;
  out.reserve(examples.size());
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
  return out;
}

Metrics score_decoded(std::span<const DecodedExample> intent_source,
                      std::span<const DecodedExample> slot_source, const EvalSet& set,
                      const LabelMaps& labels) {
  if (intent_source.size() != set.examples.size() || slot_source.size() != set.examples.size()) {
    throw ShapeError("score_decoded: decoded count does not match evaluation set");
  }
  std::vector<std::string> intents;
  std::vector<TagSequence> tags;
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    const auto words = set.gold_tags[i].size();
    intents.push_back(to_prediction(intent_source[i], words, labels).intent);
    tags.push_back(to_prediction(slot_source[i], words, labels).slots);
  }
  return compute_metrics(set.gold_intents, intents, set.gold_tags, tags);
}

Metrics evaluate(const JointModel& model, const EvalSet& set, const LabelMaps& labels,
                 std::size_t threads) {
  const auto decoded = decode_parallel(model, set.examples, threads);
  return score_decoded(decoded, decoded, set, labels);
}

TrainResult train(std::span<const TokenizedExample> train_set, JointModel& model,
                  const TrainConfig& config, const EvalSet* dev, const LabelMaps* labels,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("train: empty training set");
  if (dev && !labels) throw ConfigError("train: dev evaluation needs label maps");

  const auto params = model.named_parameters();
  AdamState adam;
  const AdamConfig adam_config{config.learning_rate, config.adam_beta1, config.adam_beta2,
                               config.adam_epsilon};
  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const ForwardContext ctx{true, &dropout_rng};

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::optional<JointModel> best;
  double best_frame = -1.0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const auto end = std::min(order.size(), begin + config.batch_size);
      std::vector<const TokenizedExample*> batch;
      for (auto i = begin; i < end; ++i) batch.push_back(&train_set[order[i]]);
      const auto loss = batch_loss(batch, model, ctx, config.objective);
      if (!std::isfinite(loss.item())) {
        throw NumericError("non-finite training loss " + std::to_string(loss.item()) +
                           " at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(begin) + " (step " + std::to_string(adam.step + 1) +
                           ")");
      }
      zero_gradients(params);
      loss.backward();
      clip_gradients(params, config.clip_norm);
      adam_step(params, adam, adam_config);
      loss_sum += loss.item() * static_cast<double>(end - begin);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(order.size());
    if (dev) {
      record.dev = evaluate(model, *dev, *labels, config.eval_threads);
      if (record.dev->frame_accuracy > best_frame) {
        best_frame = record.dev->frame_accuracy;
        result.best_epoch = epoch;
        best = model.clone();
      }
    } else {
      result.best_epoch = epoch;
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record, model);
  }
  if (best) model.copy_values_from(*best);
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,dev_intent_acc,dev_slot_f1,dev_frame_acc\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << r.train_loss;
    if (r.dev) {
      os << ',' << r.dev->intent_accuracy << ',' << r.dev->slot_f1 << ',' << r.dev->frame_accuracy;
    } else {
      os << ",,,";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace jointnlu
