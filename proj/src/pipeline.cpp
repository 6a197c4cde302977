#include "jointnlu/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
}

std::vector<std::vector<std::string>> corpus_of(const Split& split) {
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(split.size());
  for (const auto& r : split) corpus.push_back(r.words);
  return corpus;
}

std::string metrics_line(const Metrics& m) {
  return "intent " + format_percent(m.intent_accuracy) + "  slot " + format_percent(m.slot_f1) +
         "  sent " + format_percent(m.frame_accuracy);
}

// Encoder config completed from the vocabulary and the training settings.
EncoderConfig resolve_encoder(const RunConfig& config, const Vocabulary& vocab) {
  EncoderConfig enc = config.encoder;
  enc.vocab_size = vocab.size();
  enc.max_len = config.train.max_len;
  enc.dropout_p = config.train.dropout_p;
  enc.validate();
  return enc;
}

struct PreparedData {
  Dataset dataset;
  Vocabulary vocab;
  std::vector<TokenizedExample> train;
  std::optional<EvalSet> dev;
  std::optional<EvalSet> test;
};

PreparedData prepare(const RunConfig& config, std::ostream& log) {
  auto dataset = load_dataset(config.data_dir);
  log << "loaded " << dataset.train.size() << " train / " << dataset.dev.size() << " dev / "
      << dataset.test.size() << " test utterances; " << dataset.labels.intents.size()
      << " intent ids, " << dataset.labels.slots.size() << " slot ids\n";
  auto vocab = config.vocab_path.empty()
                   ? build_vocab(corpus_of(dataset.train), config.vocab_size)
                   : Vocabulary::load(config.vocab_path);
  const auto max_len = config.train.max_len;
  auto train = encode_split(map_to_known_labels(dataset.train, dataset.labels), vocab,
                            dataset.labels, max_len);
  std::optional<EvalSet> dev, test;
  if (!dataset.dev.empty()) dev = make_eval_set(dataset.dev, vocab, dataset.labels, max_len);
  if (!dataset.test.empty()) test = make_eval_set(dataset.test, vocab, dataset.labels, max_len);
  return {std::move(dataset), std::move(vocab), std::move(train), std::move(dev), std::move(test)};
}

}  // namespace

void RunConfig::validate() const {
  if (data_dir.empty()) throw ConfigError("a data directory is required");
  if (vocab_size < 8) throw ConfigError("vocab_size is too small");
  if (no_joint_epochs == 0) throw ConfigError("no_joint_epochs must be at least 1");
  train.validate();
}

RunConfig apply_config_json(const nlohmann::json& j, RunConfig base) {
  try {
    if (!j.is_object()) throw ConfigError("a config must be a JSON object");
    if (j.contains("data_dir")) base.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("vocab")) base.vocab_path = j.at("vocab").get<std::string>();
    if (j.contains("out_dir")) base.out_dir = j.at("out_dir").get<std::string>();
    base.vocab_size = j.value("vocab_size", base.vocab_size);
    base.no_joint_epochs = j.value("no_joint_epochs", base.no_joint_epochs);
    if (j.contains("variant")) base.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("encoder")) j.at("encoder").get_to(base.encoder);
    if (j.contains("train")) j.at("train").get_to(base.train);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return base;
}

RunConfig apply_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  try {
    return apply_config_json(j, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
}

nlohmann::json to_json(const RunConfig& config) {
  return {{"data_dir", config.data_dir.string()},
          {"vocab", config.vocab_path.string()},
          {"out_dir", config.out_dir.string()},
          {"vocab_size", config.vocab_size},
          {"no_joint_epochs", config.no_joint_epochs},
          {"variant", to_string(config.variant)},
          {"encoder", config.encoder},
          {"train", config.train}};
}

VocabStats vocab_stats(const Vocabulary& vocab, const Split& split) {
  VocabStats s;
  s.size = vocab.size();
  for (const auto& r : split) {
    for (const auto& w : r.words) {
      ++s.words;
      const auto pieces = tokenize_word(w, vocab);
      s.unk_words += pieces.size() == 1 && pieces.front() == kUnkToken;
    }
  }
  return s;
}

Vocabulary run_build_vocab(const std::filesystem::path& data_dir, std::size_t size,
                           const std::filesystem::path& out, std::ostream& log) {
  const auto train = load_split(data_dir, kTrainSplit);
  auto vocab = build_vocab(corpus_of(train), size);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  vocab.save(out);
  const auto stats = vocab_stats(vocab, train);
  log << "vocabulary: " << stats.size << " tokens written to " << out.string() << '\n'
      << "training words: " << stats.words << ", mapped to [UNK]: " << stats.unk_words << '\n';
  return vocab;
}

TrainOutcome run_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  auto data = prepare(config, log);
  const auto enc = resolve_encoder(config, data.vocab);
  auto model = JointModel::initialize(enc, data.dataset.labels.intents.size(),
                                      data.dataset.labels.slots.size(), config.variant,
                                      config.train.seed);

  auto report = [&](const EpochRecord& r, const JointModel&) {
    log << "epoch " << r.epoch << "  train_loss " << r.train_loss;
    if (r.dev) log << "  dev " << metrics_line(*r.dev);
    log << '\n';
  };
  TrainOutcome outcome;
  outcome.result = train(data.train, model, config.train, data.dev ? &*data.dev : nullptr,
                         &data.dataset.labels, report);
  log << "selected epoch " << outcome.result.best_epoch << '\n';

  std::filesystem::create_directories(config.out_dir);
  const auto vocab_file = config.out_dir / "vocab.txt";
  data.vocab.save(vocab_file);
  data.dataset.labels.intents.save(config.out_dir / "intent_labels.txt");
  data.dataset.labels.slots.save(config.out_dir / "slot_labels.txt");
  write_text(config.out_dir / "history.csv", history_csv(outcome.result.history));
  write_text(config.out_dir / "config.json", to_json(config).dump(2) + "\n");
  outcome.checkpoint = config.out_dir / "model.ckpt";
  // Relative to the checkpoint, so the file does not depend on where out_dir lives.
  save_checkpoint(outcome.checkpoint, model, data.dataset.labels, data.vocab,
                  vocab_file.filename().string(), config.train);
  log << "checkpoint written to " << outcome.checkpoint.string() << '\n';
  return outcome;
}

Metrics run_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                 const std::string& split, std::size_t threads) {
  const auto ckpt = load_checkpoint(checkpoint);
  const auto records = load_split(data_dir, split);
  const auto set = make_eval_set(records, ckpt.vocab, ckpt.labels, ckpt.model.config().max_len);
  return evaluate(ckpt.model, set, ckpt.labels, threads);
}

Prediction run_predict(const Checkpoint& checkpoint, const std::string& query) {
  const auto words = split_words(query);
  return predict(words, checkpoint.model, checkpoint.vocab, checkpoint.labels);
}

std::vector<AblationRow> run_ablate(const RunConfig& config, std::ostream& log) {
  config.validate();
  auto data = prepare(config, log);
  if (!data.dev) throw DataError("ablation needs a non-empty dev split");
  const auto enc = resolve_encoder(config, data.vocab);
  const auto& labels = data.dataset.labels;
  const auto threads = config.train.eval_threads;

  auto evaluate_pair = [&](const JointModel& intent_model, const JointModel& slot_model,
                           AblationRow& row) {
    auto score = [&](const EvalSet& set) {
      const auto intents = decode_parallel(intent_model, set.examples, threads);
      if (&intent_model == &slot_model) return score_decoded(intents, intents, set, labels);
      const auto slots = decode_parallel(slot_model, set.examples, threads);
      return score_decoded(intents, slots, set, labels);
    };
    row.dev = score(*data.dev);
    if (data.test) row.test = score(*data.test);
  };

  std::vector<std::size_t> grid = config.train.epoch_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() == 0) throw ConfigError("epoch grid must hold positive values");

  // Constant learning rate and a seeded shuffle make the model after e epochs
  // of one long run identical to a run with max_epochs = e.
  std::vector<AblationRow> rows;
  TrainConfig joint_cfg = config.train;
  joint_cfg.max_epochs = grid.back();
  joint_cfg.objective = Objective::kJoint;
  auto joint = JointModel::initialize(enc, labels.intents.size(), labels.slots.size(),
                                      config.variant, joint_cfg.seed);
  train(data.train, joint, joint_cfg, nullptr, nullptr,
        [&](const EpochRecord& r, const JointModel& m) {
          if (!std::binary_search(grid.begin(), grid.end(), r.epoch)) return;
          AblationRow row{"joint", r.epoch, {}, std::nullopt};
          evaluate_pair(m, m, row);
          log << "joint @ " << r.epoch << " epochs: dev " << metrics_line(row.dev) << '\n';
          rows.push_back(std::move(row));
        });

  TrainConfig single_cfg = config.train;
  single_cfg.max_epochs = config.no_joint_epochs;
  single_cfg.objective = Objective::kIntentOnly;
  auto intent_only = JointModel::initialize(enc, labels.intents.size(), labels.slots.size(),
                                            config.variant, config.train.seed + 1);
  train(data.train, intent_only, single_cfg);
  single_cfg.objective = Objective::kSlotOnly;
  auto slot_only = JointModel::initialize(enc, labels.intents.size(), labels.slots.size(),
                                          config.variant, config.train.seed + 2);
  train(data.train, slot_only, single_cfg);
  AblationRow row{"no joint", config.no_joint_epochs, {}, std::nullopt};
  evaluate_pair(intent_only, slot_only, row);
  log << "no joint @ " << row.epochs << " epochs: dev " << metrics_line(row.dev) << '\n';
  rows.push_back(std::move(row));

  std::filesystem::create_directories(config.out_dir);
  write_text(config.out_dir / "ablation.csv", ablation_csv(rows));
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "model,epochs,dev_intent,dev_slot,dev_sent,test_intent,test_slot,test_sent\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.epochs << ',' << r.dev.intent_accuracy << ',' << r.dev.slot_f1 << ','
       << r.dev.frame_accuracy;
    if (r.test) {
      os << ',' << r.test->intent_accuracy << ',' << r.test->slot_f1 << ','
         << r.test->frame_accuracy;
    } else {
      os << ",,,";
    }
    os << '\n';
  }
  return os.str();
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "Model       Epochs  Intent  Slot   (dev)   Intent  Slot   (test)\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-11s %6zu  %6s  %5s          %6s  %5s\n", r.model.c_str(),
                  r.epochs, format_percent(r.dev.intent_accuracy).c_str(),
                  format_percent(r.dev.slot_f1).c_str(),
                  r.test ? format_percent(r.test->intent_accuracy).c_str() : "-",
                  r.test ? format_percent(r.test->slot_f1).c_str() : "-");
    os << line;
  }
  return os.str();
}

}  // namespace jointnlu
