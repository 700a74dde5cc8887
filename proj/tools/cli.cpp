#include "cli.hpp"

#include <ostream>
#include <string>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <nlohmann/json.hpp>

#include "morphtag/checkpoint.hpp"
#include "morphtag/config.hpp"
#include "morphtag/corpus.hpp"
#include "morphtag/model_io.hpp"
#include "morphtag/pretrain.hpp"
#include "morphtag/tag_io.hpp"
#include "morphtag/trainer.hpp"

namespace morphtag {

namespace {

using nlohmann::json;
using Model = TaggerModel<float>;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string train, dev, test, out, metrics_out;
  std::string lexicon, embeddings, char_init, tag_filter;
  std::string model, corpus, input, output, base, format;
  std::size_t threads = 0;
  std::size_t epochs = 0;
  std::size_t freeze_epochs = 0;
  bool freeze_epochs_set = false;
  long long seed = -1;
};

json load_config_json(const Options& o) {
  json j = json::object();
  if (!o.config_path.empty()) {
    j = json::parse(read_file(o.config_path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError(o.config_path + ": config must be a JSON object");
  }
  return j;
}

void apply_overrides(json& j, const Options& o) {
  for (const auto& s : o.overrides) apply_override(j, s);
}

TrainConfig train_config(const Options& o) {
  json j = load_config_json(o);
  if (!o.lexicon.empty()) j["lexicon_path"] = o.lexicon;
  if (!o.embeddings.empty()) j["embeddings_path"] = o.embeddings;
  if (!o.char_init.empty()) j["char_init_path"] = o.char_init;
  if (!o.tag_filter.empty()) j["tag_filter_path"] = o.tag_filter;
  if (o.threads) j["threads"] = o.threads;
  if (o.epochs) j["max_epochs"] = o.epochs;
  if (o.seed >= 0) j["seed"] = std::uint64_t(o.seed);
  if (o.freeze_epochs_set) j["freeze_epochs"] = o.freeze_epochs;
  apply_overrides(j, o);
  return train_config_from_json(j);
}

std::shared_ptr<const GrammemeLexicon> lexicon_override(const Options& o) {
  if (o.lexicon.empty()) return nullptr;
  return std::make_shared<const GrammemeLexicon>(read_grammeme_lexicon(o.lexicon));
}

TrainHooks<float> progress_hooks(std::ostream& err) {
  TrainHooks<float> hooks;
  hooks.log = [&err](const std::string& line) { err << line << std::endl; };
  return hooks;
}

json checkpoint_extra(const TrainConfig& cfg, const MetricsReport& report) {
  return {{"train_config", to_json(cfg)}, {"lexicon_path", cfg.lexicon_path}, {"metrics", report.to_json()}};
}

void finish_training(TrainResult<float>& result, const TrainConfig& cfg, const Options& o, std::ostream& out,
                     std::ostream& err) {
  if (!o.test.empty()) {
    const Corpus test = read_corpus(o.test);
    std::vector<std::string> filter;
    if (!cfg.tag_filter_path.empty()) filter = read_tag_filter(cfg.tag_filter_path);
    const EvalResult r =
        evaluate(result.model, test, filter.empty() ? nullptr : &filter, cfg.batch_size, cfg.threads);
    result.report.test_acc = r.accuracy;
    result.report.test_tokens = r.total;
    err << "test accuracy " << r.accuracy << " over " << r.total << " tokens" << std::endl;
  }
  save_tagger(o.out, result.model, checkpoint_extra(cfg, result.report));
  if (!o.metrics_out.empty()) write_file(o.metrics_out, result.report.jsonl());
  err << "best epoch " << result.report.best_epoch << " dev accuracy " << result.report.best_dev_acc << ", saved "
      << o.out << std::endl;
  out << result.report.to_json().dump() << "\n";
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = train_config(o);
  const Corpus train = read_corpus(o.train);
  const Corpus dev = read_corpus(o.dev);
  err << "train: " << train.size() << " sentences, " << count_tokens(train) << " tokens; dev: " << dev.size()
      << " sentences, " << count_tokens(dev) << " tokens" << std::endl;
  auto result = train_from_scratch<float>(train, dev, cfg, progress_hooks(err));
  finish_training(result, cfg, o, out, err);
  return kOk;
}

int cmd_transfer(const Options& o, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = train_config(o);
  Model base = load_tagger<float>(o.base, lexicon_override(o));
  const Corpus train = read_corpus(o.train);
  const Corpus dev = read_corpus(o.dev);
  err << "transfer from " << o.base << ", freezing shared layers for " << cfg.freeze_epochs << " epochs"
      << std::endl;
  auto result = transfer(base, train, dev, cfg, progress_hooks(err));
  finish_training(result, cfg, o, out, err);
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  Model model = load_tagger<float>(o.model, lexicon_override(o));
  const Corpus corpus = read_corpus(o.corpus);
  std::vector<std::string> filter;
  if (!o.tag_filter.empty()) filter = read_tag_filter(o.tag_filter);
  const EvalResult r = evaluate(model, corpus, filter.empty() ? nullptr : &filter, 32, o.threads ? o.threads : 1);
  err << "accuracy " << r.accuracy << " (" << r.correct << "/" << r.total << ")" << std::endl;
  json j = {{"accuracy", r.accuracy}, {"correct", r.correct}, {"tokens", r.total}};
  if (!filter.empty()) j["tag_filter"] = filter;
  out << j.dump() << "\n";
  return kOk;
}

int cmd_tag(const Options& o, std::ostream&, std::ostream& err) {
  Model model = load_tagger<float>(o.model, lexicon_override(o));
  CorpusFormat format = guess_format(o.input);
  if (o.format == "tsv") format = CorpusFormat::tsv;
  if (o.format == "conllu") format = CorpusFormat::conllu;
  const std::string tagged = tag_text(model, read_file(o.input), format, 32, o.threads ? o.threads : 1, o.input);
  write_file(o.output, tagged);
  err << "tagged " << o.input << " -> " << o.output << std::endl;
  return kOk;
}

int cmd_pretrain(const Options& o, std::ostream& out, std::ostream& err) {
  json j = load_config_json(o);
  if (o.epochs) j["epochs"] = o.epochs;
  if (o.seed >= 0) j["seed"] = std::uint64_t(o.seed);
  apply_overrides(j, o);
  const PretrainConfig cfg = pretrain_config_from_json(j);
  const Corpus train = read_corpus(o.train);
  const EmbeddingTable table = read_embeddings_text(o.embeddings);
  const auto words = select_pretrain_words(train, table, cfg.use_all_embedding_words, cfg.features.lowercase);
  if (words.empty()) throw DataError("no training word has a pretrained vector");
  const Vocabs vocabs = build_vocabs(train, {1, 0, cfg.features.lowercase});
  Rng rng(cfg.seed);
  CharEncoder<float> encoder(cfg.features, vocabs.chars.size(), rng);
  PretrainHead<float> head(encoder.output_dim(), table, words, cfg.output_frozen, rng);
  err << "pretraining on " << words.size() << " words" << std::endl;
  PretrainHooks hooks;
  std::string metrics;
  hooks.after_epoch = [&](std::size_t epoch, double loss) {
    err << "epoch " << epoch << " loss " << loss << std::endl;
    metrics += json{{"epoch", epoch}, {"loss", loss}}.dump() + "\n";
  };
  const auto losses = pretrain(encoder, head, vocabs.chars, cfg, rng, hooks);
  write_checkpoint(o.out, char_encoder_checkpoint(encoder, head, vocabs.chars, cfg.features,
                                                  {{"pretrain_config", to_json(cfg)}, {"epoch_losses", losses}}));
  if (!o.metrics_out.empty()) write_file(o.metrics_out, metrics);
  out << json{{"words", words.size()}, {"final_loss", losses.back()}}.dump() << "\n";
  return kOk;
}

void add_config_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (keys in docs/config.md)")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "Override a config key, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--metrics-out", o.metrics_out, "Write per-epoch metrics as JSON lines");
}

void add_training_options(CLI::App* cmd, Options& o) {
  add_config_options(cmd, o);
  cmd->add_option("--train", o.train, "Training corpus (CoNLL-U or TSV)")->required();
  cmd->add_option("--dev", o.dev, "Development corpus")->required();
  cmd->add_option("--out", o.out, "Output checkpoint")->required();
  cmd->add_option("--test", o.test, "Test corpus, evaluated with the best model");
  cmd->add_option("--lexicon", o.lexicon, "Grammeme lexicon (form<TAB>tag<TAB>frequency)");
  cmd->add_option("--embeddings", o.embeddings, "Pretrained word vectors (text format)");
  cmd->add_option("--char-init", o.char_init, "Pretrained char encoder checkpoint");
  cmd->add_option("--tag-filter", o.tag_filter, "Categories used to score --test");
  cmd->add_option("--epochs", o.epochs, "Maximum number of epochs");
  cmd->add_option("--threads", o.threads, "Evaluation worker threads");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural morphological tagger", "morphtag"};
  app.require_subcommand(1);
  app.fallthrough(false);
  Options o;

  auto* pretrain_cmd = app.add_subcommand("pretrain-char", "Pretrain the char encoder against word vectors");
  add_config_options(pretrain_cmd, o);
  pretrain_cmd->add_option("--train", o.train, "Corpus whose words are used")->required();
  pretrain_cmd->add_option("--embeddings", o.embeddings, "Pretrained word vectors (text format)")->required();
  pretrain_cmd->add_option("--out", o.out, "Output char encoder checkpoint")->required();
  pretrain_cmd->add_option("--epochs", o.epochs, "Number of epochs");

  auto* train_cmd = app.add_subcommand("train", "Train a tagger");
  add_training_options(train_cmd, o);

  auto* transfer_cmd = app.add_subcommand("transfer", "Fine-tune a trained tagger on a new tagset");
  add_training_options(transfer_cmd, o);
  transfer_cmd->add_option("--base", o.base, "Base tagger checkpoint")->required();
  transfer_cmd->add_option("--freeze-epochs", o.freeze_epochs, "Epochs with shared layers frozen");

  auto* eval_cmd = app.add_subcommand("eval", "Token accuracy of a tagger on a corpus");
  eval_cmd->add_option("--model", o.model, "Tagger checkpoint")->required();
  eval_cmd->add_option("--corpus", o.corpus, "Gold corpus")->required();
  eval_cmd->add_option("--tag-filter", o.tag_filter, "Score only POS plus these categories");
  eval_cmd->add_option("--lexicon", o.lexicon, "Lexicon replacing the path stored in the checkpoint");
  eval_cmd->add_option("--threads", o.threads, "Worker threads");

  auto* tag_cmd = app.add_subcommand("tag", "Tag a pre-tokenized file");
  tag_cmd->add_option("--model", o.model, "Tagger checkpoint")->required();
  tag_cmd->add_option("--input", o.input, "Forms-only TSV or CoNLL-U")->required();
  tag_cmd->add_option("--output", o.output, "Output path")->required();
  tag_cmd->add_option("--format", o.format, "Input format (default: from the extension)")
      ->check(CLI::IsMember({"tsv", "conllu"}));
  tag_cmd->add_option("--lexicon", o.lexicon, "Lexicon replacing the path stored in the checkpoint");
  tag_cmd->add_option("--threads", o.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kUsage;
  }

  o.freeze_epochs_set = transfer_cmd->count("--freeze-epochs") > 0;

  try {
    if (pretrain_cmd->parsed()) return cmd_pretrain(o, out, err);
    if (train_cmd->parsed()) return cmd_train(o, out, err);
    if (transfer_cmd->parsed()) return cmd_transfer(o, out, err);
    if (eval_cmd->parsed()) return cmd_eval(o, out, err);
    if (tag_cmd->parsed()) return cmd_tag(o, out, err);
  } catch (const ConfigError& e) {
    err << "morphtag: configuration error: " << e.what() << std::endl;
    return kUsage;
  } catch (const Error& e) {
    err << "morphtag: " << e.what() << std::endl;
    return kData;
  } catch (const std::exception& e) {
    err << "morphtag: " << e.what() << std::endl;
    return kData;
  }
  err << app.help();
  return kUsage;
}

}  // namespace morphtag
