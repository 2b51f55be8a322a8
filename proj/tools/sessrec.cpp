// Command-line front end wiring the full pipeline:
//   synth -> preprocess -> train -> evaluate, plus metrics-table plotting.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sessrec/data/dataset_io.hpp"
#include "sessrec/data/events.hpp"
#include "sessrec/data/sessions.hpp"
#include "sessrec/io/checkpoint.hpp"
#include "sessrec/io/config.hpp"
#include "sessrec/io/model_io.hpp"
#include "sessrec/models/repeatnet.hpp"
#include "sessrec/models/srgnn.hpp"
#include "sessrec/train/curves.hpp"
#include "sessrec/train/fit.hpp"
#include "sessrec/train/metrics.hpp"
#include "sessrec/train/synth.hpp"

namespace fs = std::filesystem;
using namespace sessrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::int64_t> seed;
  std::vector<std::string> overrides;  // key=value pairs
};

io::RunConfig load_config(const CommonArgs& args, bool config_required) {
  io::KeyValues kv;
  if (!args.config_path.empty()) {
    kv = io::KeyValues::parse_file(args.config_path);
  } else if (config_required) {
    throw ConfigError("--config is required for this command");
  }
  for (const std::string& setting : args.overrides) {
    const std::size_t eq = setting.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + setting + "'");
    kv.set(setting.substr(0, eq), setting.substr(eq + 1));
  }
  if (args.seed) kv.set("seed", std::to_string(*args.seed));
  return io::RunConfig::from(kv);
}

fs::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required for this command");
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

void check_side_support(const io::RunConfig& cfg) {
  if (!cfg.train.use_side) return;
  if (cfg.profile.side_kind == data::SideKind::none)
    throw ConfigError("train.use_side needs a dataset profile with side information");
  if (cfg.train.model == "srgnn" && cfg.profile.side_kind == data::SideKind::multi)
    throw ConfigError(
        "model srgnn cannot encode multi-valued side information: the graph side encoder "
        "supports exactly one category per item");
}

struct Dataset {
  index_t item_vocab = 0;
  index_t side_vocab = 0;
  std::vector<data::Session> train_sessions;
  std::vector<data::Session> test_sessions;
  std::vector<SideValue> side_map;
};

Dataset load_dataset(const fs::path& dir, const data::DatasetProfile& profile) {
  Dataset d;
  const auto items_vocab = data::read_vocab(dir / "items.vocab");
  d.item_vocab = static_cast<index_t>(items_vocab.size());
  const bool with_side = profile.side_kind != data::SideKind::none;
  if (with_side) {
    const auto side_vocab = data::read_vocab(dir / "sides.vocab");
    d.side_vocab = static_cast<index_t>(side_vocab.size());
    d.side_map = data::read_side_map(dir / "item_sides.tsv", d.item_vocab);
  }
  const auto train_examples = data::read_examples(dir / "train_examples.txt", profile.side_kind);
  const auto test_examples = data::read_examples(dir / "test_examples.txt", profile.side_kind);
  d.train_sessions = data::group_examples(train_examples);
  d.test_sessions = data::group_examples(test_examples);
  return d;
}

int run_preprocess(const CommonArgs& common, const std::string& input_path) {
  const io::RunConfig cfg = load_config(common, true);
  const fs::path out = ensure_out_dir(common.out_dir);

  std::ifstream input(input_path);
  if (!input) throw DataError("cannot open input file " + input_path);
  const data::ParseResult parsed = data::parse_events(input, cfg.profile, cfg.columns);

  auto raw_sessions = data::sessionize(parsed.events, cfg.profile);
  raw_sessions = data::filter_rare_items(raw_sessions, cfg.profile.min_item_count);
  if (raw_sessions.empty()) throw DataError("no sessions of length >= 2 survive preprocessing");
  const data::Vocabulary vocab = data::build_vocab(raw_sessions);
  auto sessions = data::encode_sessions(raw_sessions, vocab);
  const auto side_map = data::side_map_from_sessions(sessions, vocab.item_vocab_size());
  auto [train_sessions, test_sessions] = data::split_train_test(sessions, cfg.test_fraction, cfg.seed);

  std::vector<data::TrainingExample> train_examples, test_examples;
  for (const auto& s : train_sessions) {
    auto ex = data::expand_prefixes(s, cfg.profile.session_length);
    train_examples.insert(train_examples.end(), ex.begin(), ex.end());
  }
  for (const auto& s : test_sessions) {
    auto ex = data::expand_prefixes(s, cfg.profile.session_length);
    test_examples.insert(test_examples.end(), ex.begin(), ex.end());
  }

  data::write_examples(out / "train_examples.txt", train_examples, cfg.profile.side_kind);
  data::write_examples(out / "test_examples.txt", test_examples, cfg.profile.side_kind);
  data::write_vocab(out / "items.vocab", vocab.id_to_item);
  if (cfg.profile.side_kind != data::SideKind::none) {
    data::write_vocab(out / "sides.vocab", vocab.id_to_side);
    data::write_side_map(out / "item_sides.tsv", side_map);
  }
  cfg.effective().write_file(out / "config.effective");

  std::ofstream stats(out / "stats.txt", std::ios::binary);
  stats << "events_parsed = " << parsed.events.size() << '\n'
        << "rows_skipped = " << parsed.skipped << '\n'
        << "sessions = " << sessions.size() << '\n'
        << "train_sessions = " << train_sessions.size() << '\n'
        << "test_sessions = " << test_sessions.size() << '\n'
        << "train_examples = " << train_examples.size() << '\n'
        << "test_examples = " << test_examples.size() << '\n'
        << "item_vocab_size = " << vocab.item_vocab_size() << '\n'
        << "side_vocab_size = "
        << (cfg.profile.side_kind == data::SideKind::none ? 0 : vocab.side_vocab_size()) << '\n';
  if (!stats) throw IoError("failed while writing stats.txt");

  std::cout << "preprocessed " << sessions.size() << " sessions into "
            << train_examples.size() + test_examples.size() << " examples (vocab "
            << vocab.item_vocab_size() << ")\n";
  return kExitOk;
}

template <class Model>
int train_model(Model& model, const io::RunConfig& cfg, Dataset& dataset, const fs::path& out,
                const std::optional<io::Checkpoint>& resume) {
  train::AdamState opt_state;
  int resume_epoch = 0;
  if (resume) {
    io::load_tensors(model, resume->tensors);
    opt_state.step = resume->opt_step;
    opt_state.m = resume->opt_m;
    opt_state.v = resume->opt_v;
    resume_epoch = resume->epoch;
  }
  auto [fit_train, fit_val] = data::split_train_test(
      dataset.train_sessions, cfg.train.validation_fraction, cfg.seed);

  const train::FitResult result =
      train::fit(model, fit_train, fit_val, cfg.train, resume_epoch, &opt_state);

  io::Checkpoint cp;
  cp.model_kind = cfg.train.model;
  cp.epoch = result.records.empty() ? resume_epoch : result.records.back().epoch + 1;
  cp.config = cfg.effective();
  cp.tensors = io::dump_tensors(model);
  cp.side_map = model.side_map();
  cp.opt_step = opt_state.step;
  cp.opt_m = opt_state.m;
  cp.opt_v = opt_state.v;
  io::save_checkpoint(out / "checkpoint.bin", cp);

  if (!result.records.empty())
    train::write_metrics_table(out / "metrics.tsv", result.records, cfg.train.eval_ks);
  cfg.effective().write_file(out / "config.effective");

  if (result.best_epoch >= 0)
    std::cout << "best epoch " << result.best_epoch << " with validation recall@"
              << cfg.train.primary_k() << " = " << result.best_metric << '\n';
  else
    std::cout << "no epochs were run\n";
  return kExitOk;
}

int run_train(const CommonArgs& common, const std::string& data_dir,
              const std::string& resume_path) {
  const io::RunConfig cfg = load_config(common, true);
  check_side_support(cfg);
  const fs::path out = ensure_out_dir(common.out_dir);
  Dataset dataset = load_dataset(data_dir, cfg.profile);

  std::optional<io::Checkpoint> resume;
  if (!resume_path.empty()) {
    resume = io::load_checkpoint(resume_path);
    if (resume->model_kind != cfg.train.model)
      throw ConfigError("checkpoint was trained with model '" + resume->model_kind +
                        "' but the config asks for '" + cfg.train.model + "'");
  }

  if (cfg.train.model == "repeatnet") {
    repeatnet::RepeatNet model(
        io::repeatnet_config(cfg.train, dataset.item_vocab, dataset.side_vocab),
        cfg.train.use_side ? dataset.side_map : std::vector<SideValue>{});
    return train_model(model, cfg, dataset, out, resume);
  }
  srgnn::Srgnn model(io::srgnn_config(cfg.train, dataset.item_vocab, dataset.side_vocab),
                     cfg.train.use_side ? dataset.side_map : std::vector<SideValue>{});
  return train_model(model, cfg, dataset, out, resume);
}

template <class Model>
int evaluate_model(const Model& model, const std::vector<data::Session>& sessions,
                   const std::vector<int>& ks, const std::string& out_path) {
  if (sessions.empty()) throw DataError("evaluation set is empty");
  const std::vector<int> ranks = train::target_ranks(model, sessions);
  std::vector<train::EpochRecord> rows(1);
  rows[0].epoch = 0;
  std::size_t examples = ranks.size();
  for (int k : ks) {
    const scalar_t recall = train::recall_from_ranks(ranks, k);
    const scalar_t mrr = train::mrr_from_ranks(ranks, k);
    rows[0].recall.push_back(recall);
    rows[0].mrr.push_back(mrr);
    std::cout << "recall@" << k << " = " << recall << '\n';
    std::cout << "mrr@" << k << " = " << mrr << '\n';
  }
  std::cout << "examples = " << examples << '\n';
  if (!out_path.empty()) train::write_metrics_table(out_path, rows, ks);
  return kExitOk;
}

int run_evaluate(const std::string& checkpoint_path, const std::string& data_dir,
                 const std::vector<int>& k_override, const std::string& out_path) {
  const io::Checkpoint cp = io::load_checkpoint(checkpoint_path);
  io::RunConfig cfg = io::RunConfig::from(cp.config);
  const std::vector<int> ks = k_override.empty() ? cfg.train.eval_ks : k_override;

  Dataset dataset = load_dataset(data_dir, cfg.profile);
  if (cfg.train.model == "repeatnet") {
    repeatnet::RepeatNet model(
        io::repeatnet_config(cfg.train, dataset.item_vocab, dataset.side_vocab),
        cfg.train.use_side ? cp.side_map : std::vector<SideValue>{});
    io::load_tensors(model, cp.tensors);
    return evaluate_model(model, dataset.test_sessions, ks, out_path);
  }
  srgnn::Srgnn model(io::srgnn_config(cfg.train, dataset.item_vocab, dataset.side_vocab),
                     cfg.train.use_side ? cp.side_map : std::vector<SideValue>{});
  io::load_tensors(model, cp.tensors);
  return evaluate_model(model, dataset.test_sessions, ks, out_path);
}

int run_synth(const CommonArgs& common) {
  const io::RunConfig cfg = load_config(common, true);
  const fs::path out = ensure_out_dir(common.out_dir);
  const train::SynthData data = train::synth_generate(cfg.synth);
  std::ofstream events(out / "events.csv", std::ios::binary);
  if (!events) throw IoError("cannot write events.csv");
  events << "user,timestamp,item,side\n";
  for (const data::Event& e : data.events)
    events << e.user << ',' << e.timestamp << ',' << e.item << ',' << e.side[0] << '\n';
  if (!events) throw IoError("failed while writing events.csv");
  cfg.effective().write_file(out / "config.effective");
  std::cout << "generated " << data.events.size() << " events over " << cfg.synth.n_sessions
            << " sessions\n";
  return kExitOk;
}

int run_plot(const std::vector<std::string>& metric_files, const std::string& labels_csv,
             bool summary, int k, const std::string& out_path) {
  if (metric_files.empty()) throw ConfigError("plot needs at least one metrics file");
  if (out_path.empty()) throw ConfigError("--out is required for this command");
  std::vector<std::string> labels;
  if (!labels_csv.empty()) {
    std::stringstream ss(labels_csv);
    std::string part;
    while (std::getline(ss, part, ',')) labels.push_back(part);
    if (labels.size() != metric_files.size())
      throw ConfigError("--labels must name one label per metrics file");
  } else {
    for (const std::string& f : metric_files) labels.push_back(fs::path(f).stem().string());
  }
  std::vector<train::MetricsTable> tables;
  for (const std::string& f : metric_files) tables.push_back(train::read_metrics_table(f));
  if (summary)
    train::write_summary_table(out_path, labels, tables, k);
  else
    train::write_merged_table(out_path, labels, tables);
  std::cout << "wrote " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"session-based recommendation pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string input_path, data_dir, resume_path, checkpoint_path, eval_out, plot_out, labels_csv;
  std::vector<int> k_list;
  std::vector<std::string> metric_files;
  bool summary = false;
  int summary_k = 20;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", common.config_path, "key = value configuration file");
    cmd->add_option("--seed", common.seed, "override the run seed");
    cmd->add_option("--set", common.overrides, "override a config key (key=value, repeatable)");
    if (with_out) cmd->add_option("--out", common.out_dir, "output directory");
  };

  CLI::App* preprocess = app.add_subcommand("preprocess", "raw event log -> examples and vocabularies");
  add_common(preprocess, true);
  preprocess->add_option("--input", input_path, "delimited event log")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on preprocessed data");
  add_common(train_cmd, true);
  train_cmd->add_option("--data", data_dir, "directory produced by preprocess")->required();
  train_cmd->add_option("--resume", resume_path, "checkpoint to continue from");

  CLI::App* evaluate = app.add_subcommand("evaluate", "recall/mrr of a checkpoint on test data");
  evaluate->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  evaluate->add_option("--data", data_dir, "directory produced by preprocess")->required();
  evaluate->add_option("--k", k_list, "ranking cutoffs (default: from the checkpoint config)");
  evaluate->add_option("--out", eval_out, "optional metrics file");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic event log");
  add_common(synth, true);

  CLI::App* plot = app.add_subcommand("plot", "merge or summarize metrics tables");
  plot->add_option("files", metric_files, "metrics tables from train/evaluate")->required();
  plot->add_option("--labels", labels_csv, "comma-separated run labels (default: file stems)");
  plot->add_flag("--summary", summary, "emit one best-metrics row per run");
  plot->add_option("--k", summary_k, "cutoff used by --summary (default 20)");
  plot->add_option("--out", plot_out, "output table path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (preprocess->parsed()) return run_preprocess(common, input_path);
    if (train_cmd->parsed()) return run_train(common, data_dir, resume_path);
    if (evaluate->parsed()) return run_evaluate(checkpoint_path, data_dir, k_list, eval_out);
    if (synth->parsed()) return run_synth(common);
    if (plot->parsed()) return run_plot(metric_files, labels_csv, summary, summary_k, plot_out);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}
