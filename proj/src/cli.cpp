#include "weightcaster/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "weightcaster/baselines.hpp"
#include "weightcaster/error.hpp"
#include "weightcaster/inference.hpp"
#include "weightcaster/plot.hpp"
#include "weightcaster/report.hpp"
#include "weightcaster/run_config.hpp"

namespace weightcaster {

namespace fs = std::filesystem;

void save_dataset_dir(const fs::path& dir, const std::string& name, const OosSplit& split) {
  check_support_disjoint(split);
  fs::create_directories(dir);
  write_dataset_csv(dir / "train.csv", split.train);
  write_dataset_csv(dir / "test.csv", split.test);
  const nlohmann::json meta = {{"version", 1},
                               {"dataset", name},
                               {"provenance", split.train.provenance},
                               {"rule", to_json(split.rule)},
                               {"x_normalization", to_json(split.train.x_norm)},
                               {"y_normalization", to_json(split.train.y_norm)},
                               {"n_train", split.train.size()},
                               {"n_test", split.test.size()}};
  std::ofstream out(dir / "meta.json");
  if (!out) throw DataError("cannot write '" + (dir / "meta.json").string() + "'");
  out << meta.dump(2) << '\n';
}

DatasetFiles load_dataset_dir(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) throw DataError("cannot open '" + meta_path.string() + "'");
  DatasetFiles files;
  try {
    const auto meta = nlohmann::json::parse(in);
    files.name = meta.at("dataset").get<std::string>();
    files.split.rule = split_rule_from_json(meta.at("rule"));
    files.split.train = read_dataset_csv(dir / "train.csv");
    files.split.test = read_dataset_csv(dir / "test.csv");
    for (LabeledDataset* d : {&files.split.train, &files.split.test}) {
      d->x_norm = normalization_from_json(meta.at("x_normalization"));
      d->y_norm = normalization_from_json(meta.at("y_normalization"));
      d->provenance = meta.at("provenance").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  if (files.split.train.x.cols() != files.split.test.x.cols() ||
      files.split.train.y.cols() != files.split.test.y.cols())
    throw DataError(dir.string() + ": train and test dimensions differ");
  check_support_disjoint(files.split);
  return files;
}

namespace {

double mse_rows(const Mat& pred, const Mat& target) {
  return mse(pred.data(), target.data());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Mat stack_rows(const Mat& a, const Mat& b) {
  Mat out(a.rows() + b.rows(), a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(a.data().size()));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

// Flags shared by train and eval that override config values.
struct Overrides {
  std::string config_path;
  std::string data_dir;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> mode;
  std::optional<std::size_t> max_iters;
  std::optional<double> learning_rate;
  std::optional<double> beta;
  std::optional<std::size_t> augment;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--data", data_dir, "dataset directory (train.csv, test.csv, meta.json)");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--mode", mode, "deterministic | stochastic");
    cmd->add_option("--max-iters", max_iters, "maximum training iterations");
    cmd->add_option("--learning-rate", learning_rate, "optimizer step size");
    cmd->add_option("--beta", beta, "KL weight");
    cmd->add_option("--augment", augment, "augmented state channels");
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (!data_dir.empty()) c.data_dir = data_dir;
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (seed) c.train.seed = *seed;
    if (threads) c.train.threads = *threads;
    if (mode) c.train.mode = parse_mode(*mode);
    if (max_iters) c.train.max_iters = *max_iters;
    if (learning_rate) c.train.learning_rate = *learning_rate;
    if (beta) c.train.beta = *beta;
    if (augment) c.train.augment = *augment;
    c.validate();
    return c;
  }
};

std::vector<Prediction> predict_both(const Checkpoint& ck, const OosSplit& split, Mat* xs) {
  *xs = stack_rows(split.train.x, split.test.x);
  return predict_batch(ck, *xs);
}

Metrics weightcaster_metrics(const Checkpoint& ck, const DatasetFiles& data) {
  Metrics m;
  m.method = "WeightCaster";
  m.dataset = data.name;
  const auto ind = predict_batch(ck, data.split.train.x);
  const auto oos = predict_batch(ck, data.split.test.x);
  m.mse_ind = mse_rows(point_estimates(ind), data.split.train.y);
  m.mse_oos = mse_rows(point_estimates(oos), data.split.test.y);
  m.params_count = ck.model.parameter_count();
  return m;
}

DatasetFiles require_data(const RunConfig& c) {
  if (c.data_dir.empty()) throw ConfigError("no dataset directory given (--data)");
  DatasetFiles d = load_dataset_dir(c.data_dir);
  return d;
}

int cmd_gen_data(const std::string& which, const std::string& in_path, const std::string& out_dir,
                 std::uint64_t seed, std::size_t n_train, std::size_t n_test, std::ostream& out) {
  if (which == "cosine") {
    CosineOptions opts;
    opts.n_train = n_train;
    opts.n_test = n_test;
    Rng rng(seed);
    const OosSplit split = gen_cosine(opts, rng);
    save_dataset_dir(out_dir, "cosine", split);
    out << "wrote " << split.train.size() << " train / " << split.test.size()
        << " test rows to " << out_dir << '\n';
    return kExitOk;
  }
  if (which == "airquality") {
    if (in_path.empty()) throw ConfigError("gen-data airquality requires --in FILE");
    AirQualityStats stats;
    const OosSplit split = ingest_airquality(in_path, &stats);
    save_dataset_dir(out_dir, "airquality", split);
    out << "source: " << kAirQualitySource << '\n'
        << "read " << stats.rows_read << " rows, dropped " << stats.rows_dropped << "; wrote "
        << split.train.size() << " train / " << split.test.size() << " test rows to " << out_dir
        << '\n';
    return kExitOk;
  }
  throw ConfigError("unknown dataset '" + which + "' (expected cosine or airquality)");
}

int cmd_train(const Overrides& ov, bool print_config, std::ostream& out) {
  const RunConfig c = ov.resolve();
  if (print_config) {
    out << to_json(c).dump(2) << '\n';
    return kExitOk;
  }
  const DatasetFiles data = require_data(c);
  if (data.name != c.dataset)
    throw ConfigError("config is for dataset '" + c.dataset + "' but " + c.data_dir + " holds '" +
                      data.name + "'");
  const fs::path out_dir = c.output_dir.empty() ? fs::path(".") : fs::path(c.output_dir);
  fs::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;
  try {
    result = train(data.split.train, c.train);
  } catch (const TrainingDiverged& e) {
    save_checkpoint(out_dir / "checkpoint.last_good.json", e.last_good());
    throw;
  }
  const double train_s = seconds_since(t0);
  save_checkpoint(out_dir / "checkpoint.json", result.checkpoint);
  write_training_log(out_dir / "log.csv", result.log);

  Metrics m = weightcaster_metrics(result.checkpoint, data);
  m.wallclock_s = seconds_since(t0);
  save_metrics(out_dir / "metrics.json", m);
  Mat xs;
  const auto preds = predict_both(result.checkpoint, data.split, &xs);
  write_predictions_csv(out_dir / "predictions.csv", xs, preds);

  char buf[256];
  std::snprintf(buf, sizeof buf,
                "trained %zu iterations in %.1f s (%s); best full loss %.6g at iter %zu\n"
                "mse_ind %.6g  mse_oos %.6g  params %zu\n",
                result.iterations_run, train_s, result.converged ? "converged" : "max iterations",
                result.checkpoint.final_loss.total, result.checkpoint.best_iteration, m.mse_ind,
                m.mse_oos, m.params_count);
  out << buf << "outputs in " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Overrides& ov, const std::string& method, const std::string& checkpoint_path,
             const std::string& metrics_path, const std::string& predictions_path,
             std::ostream& out) {
  const RunConfig c = ov.resolve();
  const DatasetFiles data = require_data(c);
  const auto t0 = std::chrono::steady_clock::now();
  Metrics m;
  m.dataset = data.name;
  std::vector<Prediction> preds;
  Mat xs = stack_rows(data.split.train.x, data.split.test.x);
  const std::size_t n_train = data.split.train.size();

  if (method == "weightcaster") {
    if (checkpoint_path.empty()) throw ConfigError("eval --method weightcaster needs --checkpoint");
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    m = weightcaster_metrics(ck, data);
    if (!predictions_path.empty()) preds = predict_batch(ck, xs);
  } else if (method == "gp") {
    GpOptions opts;
    opts.max_rows = c.baselines.gp_max_rows;
    opts.selection_rows = c.baselines.gp_selection_rows;
    opts.seed = c.train.seed;
    const GpModel gp = gp_fit(data.split.train, opts);
    m.method = "GP";
    m.mse_ind = mse(gp_predict_mean(gp, data.split.train.x), data.split.train.y.data());
    m.mse_oos = mse(gp_predict_mean(gp, data.split.test.x), data.split.test.y.data());
    m.params_count = gp.parameter_count();
    if (gp.subsampled())
      out << "GP fitted on a seeded subsample of " << gp.x.rows() << " of " << gp.rows_available
          << " training rows\n";
    if (!predictions_path.empty()) {
      for (std::size_t i = 0; i < xs.rows(); ++i) {
        const GpPrediction g = gp_predict(gp, xs.row(i));
        Prediction p;
        p.ring = 0;
        p.y_hat = {g.mean};
        p.distribution = PredictiveGaussian{{g.mean}, Mat(1, 1, g.variance),
                                            std::sqrt(gp.hyper.noise_variance)};
        p.extrapolated = i >= n_train;
        preds.push_back(std::move(p));
      }
    }
  } else if (method == "mlp") {
    MlpOptions opts;
    opts.hidden = c.baselines.mlp_hidden;
    opts.iterations = c.baselines.mlp_iters;
    opts.learning_rate = c.baselines.mlp_learning_rate;
    opts.seed = c.train.seed;
    const MlpModel mlp = mlp_fit(data.split.train, opts);
    m.method = "MLP";
    m.mse_ind = mse_rows(mlp_predict(mlp, data.split.train.x), data.split.train.y);
    m.mse_oos = mse_rows(mlp_predict(mlp, data.split.test.x), data.split.test.y);
    m.params_count = mlp.parameter_count();
    if (!predictions_path.empty()) {
      const Mat y = mlp_predict(mlp, xs);
      for (std::size_t i = 0; i < xs.rows(); ++i)
        preds.push_back({0, Vec(y.row(i).begin(), y.row(i).end()), std::nullopt, i >= n_train});
    }
  } else {
    throw ConfigError("unknown method '" + method + "' (expected weightcaster, gp or mlp)");
  }
  m.wallclock_s = seconds_since(t0);
  if (fs::path(metrics_path).has_parent_path())
    fs::create_directories(fs::path(metrics_path).parent_path());
  save_metrics(metrics_path, m);
  if (!predictions_path.empty()) write_predictions_csv(predictions_path, xs, preds);

  char buf[200];
  std::snprintf(buf, sizeof buf, "%s on %s: mse_ind %.6g  mse_oos %.6g  params %zu  (%.1f s)\n",
                m.method.c_str(), m.dataset.c_str(), m.mse_ind, m.mse_oos, m.params_count,
                m.wallclock_s);
  out << buf;
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out_path,
               std::ostream& out) {
  std::vector<Metrics> all;
  for (const auto& f : files) all.push_back(load_metrics(f));
  const std::string md = render_report(all);
  if (out_path.empty()) {
    out << md;
  } else {
    write_text(out_path, md);
  }
  return kExitOk;
}

int cmd_plot(const std::string& predictions, const std::string& data_dir,
             const std::string& out_path, const std::string& title) {
  const DatasetFiles data = load_dataset_dir(data_dir);
  const PredictionTable table = read_predictions_csv(predictions);
  PlotOptions opts;
  opts.title = title;
  write_text(out_path, render_svg(data.split.train, data.split.test, table, opts));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Out-of-support regression with weight-space recurrences", "weightcaster"};
  app.require_subcommand(1);

  std::string gen_which, gen_in, gen_out;
  std::uint64_t gen_seed = 0;
  std::size_t gen_n_train = CosineOptions{}.n_train, gen_n_test = CosineOptions{}.n_test;
  auto* gen = app.add_subcommand("gen-data", "generate or ingest a dataset split");
  gen->add_option("dataset", gen_which, "cosine | airquality")->required();
  gen->add_option("--in", gen_in, "UCI AirQuality CSV (airquality only)");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "random seed (cosine)");
  gen->add_option("--n-train", gen_n_train, "training points (cosine)");
  gen->add_option("--n-test", gen_n_test, "test points (cosine)");

  Overrides train_ov;
  bool print_config = false;
  auto* tr = app.add_subcommand("train", "train a model; writes checkpoint.json and log.csv");
  train_ov.attach(tr);
  tr->add_option("--out", train_ov.output_dir, "output directory");
  tr->add_flag("--print-config", print_config, "print the resolved configuration and exit");

  Overrides eval_ov;
  std::string eval_method = "weightcaster", eval_ckpt, eval_metrics, eval_preds;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint or fit and evaluate a baseline");
  eval_ov.attach(ev);
  ev->add_option("--method", eval_method, "weightcaster | gp | mlp");
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint JSON (weightcaster)");
  ev->add_option("--out", eval_metrics, "metrics JSON to write")->required();
  ev->add_option("--predictions", eval_preds, "also write train+test predictions CSV");

  std::vector<std::string> report_files;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "render metrics files as a Markdown table");
  rep->add_option("--metrics", report_files, "metrics JSON files")->required();
  rep->add_option("--out", report_out, "Markdown output (default stdout)");

  std::string plot_preds, plot_data, plot_out, plot_title;
  auto* pl = app.add_subcommand("plot", "render predictions and data as SVG");
  pl->add_option("--predictions", plot_preds, "predictions CSV")->required();
  pl->add_option("--data", plot_data, "dataset directory")->required();
  pl->add_option("--out", plot_out, "SVG output")->required();
  pl->add_option("--title", plot_title, "figure title");

  std::vector<const char*> argv;
  argv.push_back("weightcaster");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed())
      return cmd_gen_data(gen_which, gen_in, gen_out, gen_seed, gen_n_train, gen_n_test, out);
    if (tr->parsed()) return cmd_train(train_ov, print_config, out);
    if (ev->parsed())
      return cmd_eval(eval_ov, eval_method, eval_ckpt, eval_metrics, eval_preds, out);
    if (rep->parsed()) return cmd_report(report_files, report_out, out);
    if (pl->parsed()) return cmd_plot(plot_preds, plot_data, plot_out, plot_title);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace weightcaster
