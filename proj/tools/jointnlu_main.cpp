// Command-line front end: build-vocab, train, eval, predict, ablate, validate.
//
// Exit codes: 0 success, 1 unexpected failure, 2 bad configuration or
// arguments, 3 bad data or checkpoint file, 4 numeric failure in training.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "jointnlu/error.hpp"
#include "jointnlu/pipeline.hpp"

namespace {

using namespace jointnlu;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Flags that override config-file values only when given.
struct RunFlags {
  std::string data_dir, vocab, out_dir, config, variant;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, max_len, vocab_size, layers, hidden, heads,
      intermediate, threads;
  std::optional<double> lr, dropout;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool data_required) {
  cmd->add_option("--data-dir", f.data_dir, "Directory with train/valid/test splits")
      ->required(data_required);
  cmd->add_option("--config", f.config, "JSON config file (flags take precedence)");
  cmd->add_option("--vocab", f.vocab, "Existing vocabulary file (default: build from train)");
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  cmd->add_option("--variant", f.variant, "softmax or crf")
      ->check(CLI::IsMember({"softmax", "crf"}));
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--epochs", f.epochs, "Maximum training epochs");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--batch-size", f.batch_size, "Mini-batch size");
  cmd->add_option("--max-len", f.max_len, "Maximum sequence length in sub-tokens");
  cmd->add_option("--dropout", f.dropout, "Dropout probability");
  cmd->add_option("--vocab-size", f.vocab_size, "Target vocabulary size when building one");
  cmd->add_option("--layers", f.layers, "Encoder layers");
  cmd->add_option("--hidden", f.hidden, "Hidden size");
  cmd->add_option("--heads", f.heads, "Attention heads");
  cmd->add_option("--intermediate", f.intermediate, "Feed-forward inner size");
  cmd->add_option("--threads", f.threads, "Evaluation threads (0: all cores)");
}

RunConfig resolve(const RunFlags& f) {
  RunConfig c;
  if (!f.config.empty()) c = apply_config_file(f.config, c);
  if (!f.data_dir.empty()) c.data_dir = f.data_dir;
  if (!f.vocab.empty()) c.vocab_path = f.vocab;
  if (!f.out_dir.empty()) c.out_dir = f.out_dir;
  if (!f.variant.empty()) c.variant = parse_variant(f.variant);
  if (f.seed) c.train.seed = *f.seed;
  if (f.epochs) c.train.max_epochs = *f.epochs;
  if (f.lr) c.train.learning_rate = *f.lr;
  if (f.batch_size) c.train.batch_size = *f.batch_size;
  if (f.max_len) c.train.max_len = *f.max_len;
  if (f.dropout) c.train.dropout_p = *f.dropout;
  if (f.vocab_size) c.vocab_size = *f.vocab_size;
  if (f.layers) c.encoder.num_layers = *f.layers;
  if (f.hidden) c.encoder.hidden_size = *f.hidden;
  if (f.heads) c.encoder.num_heads = *f.heads;
  if (f.intermediate) c.encoder.intermediate_size = *f.intermediate;
  if (f.threads) c.train.eval_threads = *f.threads;
  return c;
}

void print_prediction(const Prediction& p, const std::vector<std::string>& words, bool json) {
  if (json) {
    nlohmann::json j{{"words", words},
                     {"intent", p.intent},
                     {"intent_probability", p.intent_probability},
                     {"slots", p.slots}};
    std::cout << j.dump() << '\n';
    return;
  }
  std::cout << "intent: " << p.intent << " (p=" << p.intent_probability << ")\n";
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::cout << "  " << words[i] << '\t' << p.slots[i] << '\n';
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Joint intent classification and slot filling"};
  app.require_subcommand(1);

  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build a WordPiece vocabulary from train");
  std::string vocab_data, vocab_out = "vocab.txt";
  std::size_t vocab_size = 8000;
  vocab_cmd->add_option("--data-dir", vocab_data, "Dataset directory")->required();
  vocab_cmd->add_option("--size", vocab_size, "Target vocabulary size");
  vocab_cmd->add_option("--out", vocab_out, "Output vocabulary file");

  RunFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a joint model");
  add_run_flags(train_cmd, train_flags, false);

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a split");
  std::string eval_ckpt, eval_data, eval_split = kTestSplit, eval_json;
  std::size_t eval_threads = 0;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--data-dir", eval_data, "Dataset directory")->required();
  eval_cmd->add_option("--split", eval_split, "train, valid or test");
  eval_cmd->add_option("--threads", eval_threads, "Worker threads (0: all cores)");
  eval_cmd->add_option("--json", eval_json, "Also write metrics as JSON to this file");

  auto* predict_cmd = app.add_subcommand("predict", "Label utterances");
  std::string predict_ckpt, predict_query;
  bool predict_as_json = false;
  predict_cmd->add_option("--checkpoint", predict_ckpt, "Checkpoint file")->required();
  predict_cmd->add_option("--query", predict_query, "Utterance (default: one per stdin line)");
  predict_cmd->add_flag("--json", predict_as_json, "One JSON object per utterance");

  RunFlags ablate_flags;
  std::size_t no_joint_epochs = 0;
  auto* ablate_cmd = app.add_subcommand("ablate", "Joint model over the epoch grid vs no joint");
  add_run_flags(ablate_cmd, ablate_flags, false);
  ablate_cmd->add_option("--no-joint-epochs", no_joint_epochs,
                         "Epochs for each single-task baseline model");

  auto* validate_cmd = app.add_subcommand("validate", "Check a dataset against expected sizes");
  std::string validate_data, validate_expect = "none";
  validate_cmd->add_option("--data-dir", validate_data, "Dataset directory")->required();
  validate_cmd->add_option("--expect", validate_expect, "snips, atis or none")
      ->check(CLI::IsMember({"snips", "atis", "none"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*vocab_cmd) {
    run_build_vocab(vocab_data, vocab_size, vocab_out, std::cout);
  } else if (*train_cmd) {
    run_train(resolve(train_flags), std::cout);
  } else if (*eval_cmd) {
    const auto m = run_eval(eval_ckpt, eval_data, eval_split, eval_threads);
    std::cout << format_report(m, eval_split);
    if (!eval_json.empty()) {
      std::ofstream out(eval_json);
      if (!out) throw Error("cannot write '" + eval_json + "'");
      out << to_json(m).dump(2) << '\n';
    }
  } else if (*predict_cmd) {
    const auto ckpt = load_checkpoint(predict_ckpt);
    auto handle = [&](const std::string& line) {
      const auto words = split_words(line);
      if (words.empty()) return;
      print_prediction(run_predict(ckpt, line), words, predict_as_json);
    };
    if (!predict_query.empty()) {
      handle(predict_query);
    } else {
      for (std::string line; std::getline(std::cin, line);) handle(line);
    }
  } else if (*ablate_cmd) {
    auto config = resolve(ablate_flags);
    if (no_joint_epochs) config.no_joint_epochs = no_joint_epochs;
    const auto rows = run_ablate(config, std::cout);
    std::cout << '\n' << ablation_table(rows);
  } else if (*validate_cmd) {
    const auto dataset = load_dataset(validate_data);
    std::optional<DatasetStats> expected;
    if (validate_expect == "snips") expected = kSnipsStats;
    if (validate_expect == "atis") expected = kAtisStats;
    const auto report = validate_dataset(dataset, expected.value_or(compute_stats(dataset)));
    std::cout << report.to_string();
    if (!report.ok()) return kExitData;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const jointnlu::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const jointnlu::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const jointnlu::FormatError& e) {
    std::cerr << "file format error: " << e.what() << '\n';
    return kExitData;
  } catch (const jointnlu::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}
