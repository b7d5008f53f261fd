// embpred: batch pipeline for 30-day readmission modeling on schema-driven
// encounter data. Subcommands: synth, preprocess, train, cv, evaluate,
// importance. Every run lands in a fresh timestamped directory together with
// a manifest sufficient to reproduce it.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "embpred/binio.hpp"
#include "embpred/dataset_io.hpp"
#include "embpred/error.hpp"
#include "embpred/metrics.hpp"
#include "embpred/model.hpp"
#include "embpred/model_io.hpp"
#include "embpred/preprocess.hpp"
#include "embpred/report.hpp"
#include "embpred/schema.hpp"
#include "embpred/smote.hpp"
#include "embpred/synth.hpp"
#include "embpred/table.hpp"
#include "embpred/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace embpred;

namespace {

bool color_enabled() {
  if (std::getenv("EMBPRED_NO_COLOR") != nullptr) return false;
  return isatty(fileno(stderr));
}

void info(const std::string& msg) {
  if (color_enabled()) {
    std::cerr << "\033[36m" << msg << "\033[0m\n";
  } else {
    std::cerr << msg << "\n";
  }
}

std::string utc_timestamp_for_path() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string utc_timestamp_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Fresh per-run directory; nothing is ever overwritten.
fs::path make_run_dir(const std::string& out_dir, const std::string& command) {
  const std::string stamp = utc_timestamp_for_path();
  for (int suffix = 0;; ++suffix) {
    fs::path dir = fs::path(out_dir) /
                   (stamp + "-" + command + (suffix == 0 ? "" : "-" + std::to_string(suffix)));
    if (!fs::exists(dir)) {
      fs::create_directories(dir);
      return dir;
    }
  }
}

struct RunContext {
  std::vector<std::string> argv;
  std::string command;
  fs::path dir;
  json config_snapshot;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, crc32
  std::vector<std::pair<std::string, std::string>> outputs;  // file, crc32
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void add_input(const std::string& path) { inputs.emplace_back(path, file_crc32_hex(path)); }

  std::string write(const std::string& filename, const std::string& bytes) {
    const fs::path p = dir / filename;
    write_file_bytes(p.string(), bytes);
    outputs.emplace_back(filename, crc32_hex(bytes));
    return p.string();
  }

  void finish() {
    json manifest;
    manifest["tool"] = "embpred";
    manifest["version"] = kVersion;
    manifest["command"] = argv;
    manifest["subcommand"] = command;
    manifest["seed"] = seed;
    manifest["config"] = config_snapshot;
    json jin = json::object();
    for (const auto& [path, crc] : inputs) jin[path] = crc;
    manifest["inputs"] = jin;
    json jout = json::array();
    for (const auto& [file, crc] : outputs) jout.push_back({{"file", file}, {"crc32", crc}});
    manifest["outputs"] = jout;
    manifest["created_utc"] = utc_timestamp_iso();
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["versions"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)}};
    write_file_bytes((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    info("run directory: " + dir.string());
  }
};

struct Settings {
  ModelConfig model;
  SmoteConfig smote;
  bool smote_enabled = true;
  SmoteScope smote_scope = SmoteScope::train_only;
  int cv_k = 6;
  double threshold = 0.5;
  int repeats = 5;
  int threads = 1;
};

json settings_to_json(const Settings& s) {
  json j;
  j["epochs"] = s.model.epochs;
  j["batch_size"] = s.model.batch_size;
  j["lr"] = s.model.lr;
  j["hidden_sizes"] = s.model.hidden_sizes;
  j["emb_dropout"] = s.model.emb_dropout;
  j["hidden_dropout"] = s.model.hidden_dropout;
  j["bn_momentum"] = s.model.bn_momentum;
  j["bn_eps"] = s.model.bn_eps;
  j["seed"] = s.model.seed;
  j["smote"] = {{"enabled", s.smote_enabled},
                {"k", s.smote.k_neighbors},
                {"seed", s.smote.seed},
                {"categorical", to_string(s.smote.categorical_strategy)},
                {"scope", to_string(s.smote_scope)}};
  j["cv_k"] = s.cv_k;
  j["threshold"] = s.threshold;
  j["repeats"] = s.repeats;
  j["threads"] = s.threads;
  return j;
}

void apply_config_file(Settings& s, const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path + ": " + e.what());
  }
  if (j.contains("epochs")) s.model.epochs = j["epochs"].get<Index>();
  if (j.contains("batch_size")) s.model.batch_size = j["batch_size"].get<Index>();
  if (j.contains("lr")) s.model.lr = j["lr"].get<double>();
  if (j.contains("hidden_sizes")) s.model.hidden_sizes = j["hidden_sizes"].get<std::vector<Index>>();
  if (j.contains("emb_dropout")) s.model.emb_dropout = j["emb_dropout"].get<double>();
  if (j.contains("hidden_dropout")) s.model.hidden_dropout = j["hidden_dropout"].get<double>();
  if (j.contains("bn_momentum")) s.model.bn_momentum = j["bn_momentum"].get<double>();
  if (j.contains("bn_eps")) s.model.bn_eps = j["bn_eps"].get<double>();
  if (j.contains("seed")) s.model.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("smote")) {
    const json& sm = j["smote"];
    if (sm.contains("enabled")) s.smote_enabled = sm["enabled"].get<bool>();
    if (sm.contains("k")) s.smote.k_neighbors = sm["k"].get<int>();
    if (sm.contains("seed")) s.smote.seed = sm["seed"].get<std::uint64_t>();
    if (sm.contains("categorical")) {
      s.smote.categorical_strategy = sm["categorical"].get<std::string>() == "copy"
                                         ? CategoricalStrategy::copy_seed
                                         : CategoricalStrategy::majority_vote;
    }
    if (sm.contains("scope")) {
      s.smote_scope = sm["scope"].get<std::string>() == "global" ? SmoteScope::global
                                                                 : SmoteScope::train_only;
    }
  }
  if (j.contains("cv_k")) s.cv_k = j["cv_k"].get<int>();
  if (j.contains("threshold")) s.threshold = j["threshold"].get<double>();
  if (j.contains("repeats")) s.repeats = j["repeats"].get<int>();
  if (j.contains("threads")) s.threads = j["threads"].get<int>();
}

ProgressSink make_progress(Index epochs) {
  return [epochs](Index epoch, double loss) {
    if (epoch == 1 || epoch == epochs || epoch % 10 == 0) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "epoch %3lld/%lld  mean loss %.5f",
                    static_cast<long long>(epoch), static_cast<long long>(epochs), loss);
      info(buf);
    }
  };
}

struct TrainedModel {
  ModelBundle bundle;
  std::vector<double> loss_curve;
};

TrainedModel run_training(const DatasetBundle& ds, const Settings& settings) {
  EncodedMatrix standardized = transform_and_standardize(ds.matrix, ds.schema, {});
  EncodedMatrix train_mat = standardized;
  if (settings.smote_enabled) {
    train_mat = oversample(standardized, settings.smote).matrix;
    info("oversampled " + std::to_string(standardized.rows()) + " -> " +
         std::to_string(train_mat.rows()) + " rows");
  }
  TrainedModel out;
  out.bundle.schema = ds.schema;
  out.bundle.config = settings.model;
  out.bundle.cat_specs = train_mat.cat_specs;
  out.bundle.cont_stats = standardized.cont_stats;
  out.bundle.net = EmbNet<float>(train_mat.cat_specs, train_mat.n_cont(), settings.model);
  info("training on " + std::to_string(train_mat.rows()) + " rows, " +
       std::to_string(out.bundle.net.count_parameters()) + " parameters");
  const TrainResult tr =
      train(out.bundle.net, train_mat, settings.model, make_progress(settings.model.epochs));
  out.loss_curve = tr.epoch_loss;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embpred - embedding classifier pipeline for 30-day readmission data"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs";
  std::uint64_t seed_flag = 0;
  int threads_flag = 1;
  app.add_option("--config", config_path, "JSON settings file (flags take precedence)");
  auto* seed_opt = app.add_option("--seed", seed_flag, "root random seed");
  app.add_option("--out-dir", out_dir, "parent directory for run outputs");
  auto* threads_opt =
      app.add_option("--threads", threads_flag, "worker threads for cross-validation");

  auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic synthetic dataset");
  synth_cmd->fallthrough();
  std::string synth_schema;
  Index synth_rows = 1000;
  double synth_minority = 0.112;
  synth_cmd->add_option("--schema", synth_schema, "schema JSON file")->required();
  synth_cmd->add_option("--rows", synth_rows, "number of rows (>= 10)");
  synth_cmd->add_option("--minority", synth_minority, "positive-class fraction in (0,1)");

  auto* prep_cmd = app.add_subcommand("preprocess", "run the preprocessing pipeline on a CSV");
  prep_cmd->fallthrough();
  std::string prep_schema, prep_input;
  prep_cmd->add_option("--schema", prep_schema, "schema JSON file")->required();
  prep_cmd->add_option("--input", prep_input, "input CSV")->required();

  std::string data_path, model_path;
  Index epochs_flag = 70, batch_flag = 256;
  double lr_flag = 1e-3;
  std::vector<Index> hidden_flag;
  int smote_k_flag = 5;
  std::uint64_t smote_seed_flag = 0;
  std::string smote_cat_flag = "majority", smote_scope_flag = "train-only";
  bool no_smote = false;

  auto add_train_options = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_path, "encoded dataset file")->required();
    cmd->add_option("--epochs", epochs_flag, "training epochs");
    cmd->add_option("--batch", batch_flag, "mini-batch size");
    cmd->add_option("--lr", lr_flag, "learning rate");
    cmd->add_option("--hidden", hidden_flag, "hidden layer sizes");
    cmd->add_option("--smote-k", smote_k_flag, "SMOTE neighbor count");
    cmd->add_option("--smote-seed", smote_seed_flag, "SMOTE random seed");
    cmd->add_option("--smote-categorical", smote_cat_flag, "majority|copy")
        ->check(CLI::IsMember({"majority", "copy"}));
    cmd->add_flag("--no-smote", no_smote, "disable oversampling");
  };

  auto* train_cmd = app.add_subcommand("train", "train a model on an encoded dataset");
  train_cmd->fallthrough();
  add_train_options(train_cmd);

  auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation");
  cv_cmd->fallthrough();
  add_train_options(cv_cmd);
  int cv_k_flag = 6;
  bool save_fold_models = false;
  cv_cmd->add_option("--k", cv_k_flag, "number of folds");
  cv_cmd->add_option("--smote-scope", smote_scope_flag, "train-only|global")
      ->check(CLI::IsMember({"train-only", "global"}));
  cv_cmd->add_flag("--save-fold-models", save_fold_models, "write one model file per fold");

  auto* eval_cmd = app.add_subcommand("evaluate", "score an encoded dataset with a trained model");
  eval_cmd->fallthrough();
  double threshold_flag = 0.5;
  eval_cmd->add_option("--data", data_path, "encoded dataset file")->required();
  eval_cmd->add_option("--model", model_path, "model file")->required();
  eval_cmd->add_option("--threshold", threshold_flag, "decision threshold");

  auto* imp_cmd = app.add_subcommand("importance", "permutation feature importance");
  imp_cmd->fallthrough();
  int repeats_flag = 5;
  imp_cmd->add_option("--data", data_path, "encoded dataset file")->required();
  imp_cmd->add_option("--model", model_path, "model file")->required();
  imp_cmd->add_option("--repeats", repeats_flag, "shuffles per feature");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    Settings settings;
    if (!config_path.empty()) apply_config_file(settings, config_path);

    // flags beat the config file
    if (seed_opt->count() > 0) settings.model.seed = seed_flag;
    if (threads_opt->count() > 0) settings.threads = threads_flag;
    for (CLI::App* cmd : {train_cmd, cv_cmd}) {
      if (!cmd->parsed()) continue;
      if (cmd->count("--epochs") > 0) settings.model.epochs = epochs_flag;
      if (cmd->count("--batch") > 0) settings.model.batch_size = batch_flag;
      if (cmd->count("--lr") > 0) settings.model.lr = lr_flag;
      if (cmd->count("--hidden") > 0) settings.model.hidden_sizes = hidden_flag;
      if (cmd->count("--smote-k") > 0) settings.smote.k_neighbors = smote_k_flag;
      if (cmd->count("--smote-seed") > 0) settings.smote.seed = smote_seed_flag;
      if (cmd->count("--smote-categorical") > 0) {
        settings.smote.categorical_strategy = smote_cat_flag == "copy"
                                                  ? CategoricalStrategy::copy_seed
                                                  : CategoricalStrategy::majority_vote;
      }
      if (no_smote) settings.smote_enabled = false;
    }
    if (cv_cmd->parsed()) {
      if (cv_cmd->count("--k") > 0) settings.cv_k = cv_k_flag;
      if (cv_cmd->count("--smote-scope") > 0) {
        settings.smote_scope =
            smote_scope_flag == "global" ? SmoteScope::global : SmoteScope::train_only;
      }
    }
    if (eval_cmd->parsed() && eval_cmd->count("--threshold") > 0) {
      settings.threshold = threshold_flag;
    }
    if (imp_cmd->parsed() && imp_cmd->count("--repeats") > 0) settings.repeats = repeats_flag;
    if (settings.smote.seed == 0) settings.smote.seed = settings.model.seed;

    RunContext run;
    for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
    run.seed = settings.model.seed;
    run.config_snapshot = settings_to_json(settings);

    if (synth_cmd->parsed()) {
      run.command = "synth";
      run.dir = make_run_dir(out_dir, run.command);
      run.add_input(synth_schema);
      const DatasetSchema schema = load_schema(synth_schema);
      const RawTable table =
          generate_synthetic(schema, synth_rows, synth_minority, settings.model.seed);
      run.write("synth.csv", to_csv_string(table));
      json params{{"rows", synth_rows},
                  {"minority_fraction", synth_minority},
                  {"seed", settings.model.seed},
                  {"schema", synth_schema}};
      run.write("synth_params.json", params.dump(2) + "\n");
      info("wrote " + std::to_string(table.row_count()) + " rows");
      run.finish();
    } else if (prep_cmd->parsed()) {
      run.command = "preprocess";
      run.dir = make_run_dir(out_dir, run.command);
      run.add_input(prep_schema);
      run.add_input(prep_input);
      const DatasetSchema schema = load_schema(prep_schema);
      const RawTable table = read_csv(prep_input, schema);
      PipelineResult result = run_pipeline(table, schema);
      DatasetBundle bundle{std::move(result.matrix), std::move(result.schema)};
      run.write("encoded.epd", dataset_to_bytes(bundle));
      run.write("preprocess_report.txt", result.report.to_text());
      info("encoded " + std::to_string(bundle.matrix.rows()) +
           " rows: " + std::to_string(bundle.matrix.n_cat()) + " categorical, " +
           std::to_string(bundle.matrix.n_cont()) + " continuous columns");
      run.finish();
    } else if (train_cmd->parsed()) {
      run.command = "train";
      run.dir = make_run_dir(out_dir, run.command);
      run.add_input(data_path);
      const DatasetBundle ds = load_dataset(data_path);
      TrainedModel trained = run_training(ds, settings);
      run.write("model.epm", model_to_bytes(trained.bundle));
      run.write("train_log.csv", loss_curve_to_csv(trained.loss_curve));
      run.finish();
    } else if (cv_cmd->parsed()) {
      run.command = "cv";
      run.dir = make_run_dir(out_dir, run.command);
      run.add_input(data_path);
      const DatasetBundle ds = load_dataset(data_path);
      const FoldPlan plan = plan_folds(ds.matrix.target, settings.cv_k, settings.model.seed);
      CvOptions options;
      options.smote_enabled = settings.smote_enabled;
      options.smote_scope = settings.smote_scope;
      options.threads = settings.threads;
      options.threshold = settings.threshold;
      std::vector<ModelBundle> fold_models;
      CvSummary summary =
          cross_validate(ds.matrix, ds.schema, settings.model, settings.smote, plan, options,
                         save_fold_models ? &fold_models : nullptr);
      run.write("cv_summary.json", cv_summary_to_json(summary) + "\n");
      run.write("roc.csv", roc_to_csv(summary.pooled.roc_points));
      run.write("roc.svg", roc_to_svg(summary.pooled.roc_points, summary.pooled.auroc));
      run.write("confusion.csv", confusion_to_csv(summary.pooled.confusion));
      run.write("confusion.svg", confusion_to_svg(summary.pooled.confusion));
      for (std::size_t f = 0; f < fold_models.size(); ++f) {
        run.write("fold" + std::to_string(f) + ".epm", model_to_bytes(fold_models[f]));
      }
      char buf[128];
      std::snprintf(buf, sizeof(buf), "cv(k=%d): accuracy %.4f +- %.4f, auroc %.4f +- %.4f",
                    summary.k, summary.accuracy_mean, summary.accuracy_std, summary.auroc_mean,
                    summary.auroc_std);
      std::cout << buf << "\n";
      run.finish();
    } else if (eval_cmd->parsed()) {
      run.command = "evaluate";
      run.dir = make_run_dir(out_dir, run.command);
      run.add_input(data_path);
      run.add_input(model_path);
      const DatasetBundle ds = load_dataset(data_path);
      ModelBundle model = load_model(model_path);
      const EncodedMatrix aligned = align_to_model(ds.matrix, ds.schema, model);
      const VecXd scores = predict_scores(model.net, aligned);
      const EvalReport report = evaluate_scores(scores, aligned.target, settings.threshold);
      run.write("eval_report.json", eval_report_to_json(report) + "\n");
      run.write("roc.csv", roc_to_csv(report.roc_points));
      run.write("roc.svg", roc_to_svg(report.roc_points, report.auroc));
      run.write("confusion.csv", confusion_to_csv(report.confusion));
      run.write("confusion.svg", confusion_to_svg(report.confusion));
      char buf[96];
      std::snprintf(buf, sizeof(buf), "accuracy %.4f, auroc %.4f", report.accuracy, report.auroc);
      std::cout << buf << "\n";
      run.finish();
    } else if (imp_cmd->parsed()) {
      run.command = "importance";
      run.dir = make_run_dir(out_dir, run.command);
      run.add_input(data_path);
      run.add_input(model_path);
      const DatasetBundle ds = load_dataset(data_path);
      ModelBundle model = load_model(model_path);
      const EncodedMatrix aligned = align_to_model(ds.matrix, ds.schema, model);
      const ImportanceReport report =
          permutation_importance(model.net, aligned, settings.repeats, settings.model.seed);
      run.write("importance.json", importance_to_json(report) + "\n");
      run.write("importance.csv", importance_to_csv(report));
      run.write("importance.svg", importance_to_svg(report));
      std::cout << "top feature: "
                << (report.entries.empty() ? std::string("(none)") : report.entries.front().name)
                << "\n";
      run.finish();
    }
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
