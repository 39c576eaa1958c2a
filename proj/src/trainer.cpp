#include "weightcaster/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

namespace weightcaster {

namespace {

constexpr std::array<const char*, 18> kTrainKeys = {
    "mode",          "t_total",   "t_train",     "delta",       "anchor",
    "metric",        "batch_size", "beta",       "sigma_noise", "augment",
    "sigma_min",     "learning_rate", "grad_clip", "max_iters", "eval_every",
    "convergence_window", "convergence_tol", "seed"};

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

nlohmann::json anchor_to_json(const AnchorPolicy& a) {
  switch (a.kind) {
    case AnchorPolicy::Kind::kMean:
      return "mean";
    case AnchorPolicy::Kind::kMin:
      return "min";
    case AnchorPolicy::Kind::kExplicit:
      return a.point;
  }
  return nullptr;
}

AnchorPolicy anchor_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "mean") return AnchorPolicy::mean();
    if (s == "min") return AnchorPolicy::min();
    throw ConfigError("anchor: expected \"mean\", \"min\" or a list of numbers, got \"" + s + "\"");
  }
  if (j.is_array()) return AnchorPolicy::at(j.get<Vec>());
  throw ConfigError("anchor: expected \"mean\", \"min\" or a list of numbers");
}

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

bool is_train_config_key(const std::string& key) {
  return std::find(kTrainKeys.begin(), kTrainKeys.end(), key) != kTrainKeys.end();
}

std::vector<std::string> TrainConfig::validation_errors() const {
  std::vector<std::string> errs;
  if (t_total < 1) errs.push_back("t_total must be >= 1");
  if (t_train > t_total) errs.push_back("t_train must not exceed t_total");
  if (t_train == 0 && !(delta > 0.0)) errs.push_back("t_train = 0 requires a positive delta");
  if (batch_size < 1) errs.push_back("batch_size must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) errs.push_back("beta must be finite and >= 0");
  if (!(sigma_noise >= 0.0) || !std::isfinite(sigma_noise))
    errs.push_back("sigma_noise must be finite and >= 0");
  if (!(sigma_min > 0.0)) errs.push_back("sigma_min must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    errs.push_back("learning_rate must be finite and > 0");
  if (!(grad_clip >= 0.0)) errs.push_back("grad_clip must be >= 0");
  if (eval_every < 1) errs.push_back("eval_every must be >= 1");
  if (convergence_window < 1) errs.push_back("convergence_window must be >= 1");
  if (!(convergence_tol >= 0.0)) errs.push_back("convergence_tol must be >= 0");
  if (threads < 1) errs.push_back("threads must be >= 1");
  if (anchor.kind == AnchorPolicy::Kind::kExplicit && anchor.point.empty())
    errs.push_back("explicit anchor must not be empty");
  return errs;
}

void TrainConfig::validate() const {
  const auto errs = validation_errors();
  if (!errs.empty()) throw ConfigError("invalid training configuration: " + join(errs, "; "));
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"t_total", c.t_total},
          {"t_train", c.t_train},
          {"delta", c.delta},
          {"anchor", anchor_to_json(c.anchor)},
          {"metric", to_string(c.metric)},
          {"batch_size", c.batch_size},
          {"beta", c.beta},
          {"sigma_noise", c.sigma_noise},
          {"augment", c.augment},
          {"sigma_min", c.sigma_min},
          {"learning_rate", c.learning_rate},
          {"grad_clip", c.grad_clip},
          {"max_iters", c.max_iters},
          {"eval_every", c.eval_every},
          {"convergence_window", c.convergence_window},
          {"convergence_tol", c.convergence_tol},
          {"seed", c.seed}};
}

void merge_train_config(TrainConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training configuration must be a JSON object");
  std::vector<std::string> unknown;
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") {
      c.mode = parse_mode(get_as<std::string>(v, key));
    } else if (key == "t_total") {
      c.t_total = get_as<std::size_t>(v, key);
    } else if (key == "t_train") {
      c.t_train = get_as<std::size_t>(v, key);
    } else if (key == "delta") {
      c.delta = get_as<double>(v, key);
    } else if (key == "anchor") {
      c.anchor = anchor_from_json(v);
    } else if (key == "metric") {
      c.metric = parse_metric(get_as<std::string>(v, key));
    } else if (key == "batch_size") {
      c.batch_size = get_as<std::size_t>(v, key);
    } else if (key == "beta") {
      c.beta = get_as<double>(v, key);
    } else if (key == "sigma_noise") {
      c.sigma_noise = get_as<double>(v, key);
    } else if (key == "augment") {
      c.augment = get_as<std::size_t>(v, key);
    } else if (key == "sigma_min") {
      c.sigma_min = get_as<double>(v, key);
    } else if (key == "learning_rate") {
      c.learning_rate = get_as<double>(v, key);
    } else if (key == "grad_clip") {
      c.grad_clip = get_as<double>(v, key);
    } else if (key == "max_iters") {
      c.max_iters = get_as<std::size_t>(v, key);
    } else if (key == "eval_every") {
      c.eval_every = get_as<std::size_t>(v, key);
    } else if (key == "convergence_window") {
      c.convergence_window = get_as<std::size_t>(v, key);
    } else if (key == "convergence_tol") {
      c.convergence_tol = get_as<double>(v, key);
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, key);
    } else {
      unknown.push_back(key);
    }
  }
  if (!unknown.empty()) throw ConfigError("unknown training config key(s): " + join(unknown, ", "));
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  merge_train_config(c, j);
  return c;
}

nlohmann::json to_json(const Checkpoint& ck) {
  nlohmann::json per_ring = nlohmann::json::array();
  for (const auto& [t, v] : ck.final_loss.per_ring_data) per_ring.push_back({t, v});
  return {{"version", ck.version},
          {"mode", to_string(ck.model.mode)},
          {"recurrence",
           {{"state_dim", ck.model.state_dim()},
            {"mode", to_string(ck.model.mode)},
            {"theta_dim", ck.model.theta_dim},
            {"augment_dim", ck.model.augment_dim},
            {"phi", ck.model.phi.data()},
            {"init_state", ck.model.init_state},
            {"sigma_min", ck.model.sigma_min},
            {"input_dim", ck.input_dim},
            {"output_dim", ck.output_dim}}},
          {"partition",
           {{"anchor", ck.partition.anchor},
            {"metric", to_string(ck.partition.metric)},
            {"delta", ck.partition.delta},
            {"t_total", ck.partition.t_total},
            {"t_train", ck.partition.t_train}}},
          {"normalization", {{"x", to_json(ck.x_norm)}, {"y", to_json(ck.y_norm)}}},
          {"config", to_json(ck.config)},
          {"final_loss",
           {{"total", ck.final_loss.total},
            {"data", ck.final_loss.data_term},
            {"kl", ck.final_loss.kl_term},
            {"per_ring", per_ring},
            {"iteration", ck.best_iteration}}}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    Checkpoint ck;
    ck.version = j.at("version").get<int>();
    if (ck.version != Checkpoint::kVersion)
      throw DataError("unsupported checkpoint version " + std::to_string(ck.version));
    const auto& r = j.at("recurrence");
    ck.model.mode = parse_mode(r.at("mode").get<std::string>());
    if (parse_mode(j.at("mode").get<std::string>()) != ck.model.mode)
      throw DataError("checkpoint mode disagrees with recurrence mode");
    ck.model.theta_dim = r.at("theta_dim").get<std::size_t>();
    ck.model.augment_dim = r.at("augment_dim").get<std::size_t>();
    const auto s = r.at("state_dim").get<std::size_t>();
    ck.model.phi = Mat(s, s, r.at("phi").get<Vec>());
    ck.model.init_state = r.at("init_state").get<Vec>();
    ck.model.sigma_min = r.at("sigma_min").get<double>();
    ck.model.validate();
    ck.input_dim = r.at("input_dim").get<std::size_t>();
    ck.output_dim = r.at("output_dim").get<std::size_t>();
    if (ck.output_dim * (ck.input_dim + 1) != ck.model.theta_dim)
      throw DataError("checkpoint predictor dimensions do not match theta_dim");

    const auto& p = j.at("partition");
    ck.partition.anchor = p.at("anchor").get<Vec>();
    ck.partition.metric = parse_metric(p.at("metric").get<std::string>());
    ck.partition.delta = p.at("delta").get<double>();
    ck.partition.t_total = p.at("t_total").get<std::size_t>();
    ck.partition.t_train = p.at("t_train").get<std::size_t>();
    if (ck.partition.anchor.size() != ck.input_dim)
      throw DataError("checkpoint anchor dimension does not match input_dim");

    ck.x_norm = normalization_from_json(j.at("normalization").at("x"));
    ck.y_norm = normalization_from_json(j.at("normalization").at("y"));
    ck.config = train_config_from_json(j.at("config"));

    const auto& f = j.at("final_loss");
    ck.final_loss.total = f.at("total").get<double>();
    ck.final_loss.data_term = f.at("data").get<double>();
    ck.final_loss.kl_term = f.at("kl").get<double>();
    for (const auto& e : f.at("per_ring"))
      ck.final_loss.per_ring_data.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<double>());
    ck.best_iteration = f.at("iteration").get<std::size_t>();
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out << to_json(ckpt).dump(2) << '\n';
  if (!out) throw DataError("error writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

void write_training_log(const std::filesystem::path& path, std::span<const TrainLogRow> log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training log '" + path.string() + "'");
  out << "iter,total,data,kl,wallclock_ms\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.3f\n", r.iter, r.total, r.data, r.kl,
                  r.wallclock_ms);
    out << buf;
  }
}

std::vector<RingBatch> full_ring_batches(const LabeledDataset& data,
                                         const std::vector<std::vector<std::size_t>>& rings,
                                         std::size_t max_ring) {
  std::vector<RingBatch> out;
  for (std::size_t t = 1; t <= std::min(max_ring, rings.size()); ++t) {
    const auto& idx = rings[t - 1];
    if (idx.empty()) continue;
    RingBatch b{t, Mat(idx.size(), data.x.cols()), Mat(idx.size(), data.y.cols())};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy(data.x.row(idx[i]).begin(), data.x.row(idx[i]).end(), b.inputs.row(i).begin());
      std::copy(data.y.row(idx[i]).begin(), data.y.row(idx[i]).end(), b.targets.row(i).begin());
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<RingBatch> subsample_ring_batches(const LabeledDataset& data,
                                              const std::vector<std::vector<std::size_t>>& rings,
                                              std::size_t max_ring, std::size_t batch_size,
                                              const Rng& sampling_root, std::size_t iteration) {
  std::vector<RingBatch> out;
  std::vector<std::size_t> pool;
  for (std::size_t t = 1; t <= std::min(max_ring, rings.size()); ++t) {
    const auto& idx = rings[t - 1];
    if (idx.empty()) continue;
    pool.assign(idx.begin(), idx.end());
    std::size_t take = pool.size();
    if (pool.size() > batch_size) {
      Rng rng = sampling_root.child(t).child(iteration);
      // Partial Fisher-Yates: the first `batch_size` slots form the sample.
      for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
      }
      take = batch_size;
      std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    RingBatch b{t, Mat(take, data.x.cols()), Mat(take, data.y.cols())};
    for (std::size_t i = 0; i < take; ++i) {
      std::copy(data.x.row(pool[i]).begin(), data.x.row(pool[i]).end(), b.inputs.row(i).begin());
      std::copy(data.y.row(pool[i]).begin(), data.y.row(pool[i]).end(), b.targets.row(i).begin());
    }
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

LossReport evaluate_batches(const RecurrenceModel& model, std::span<const RingBatch> batches,
                            std::size_t horizon, const LinearPredictor& predictor,
                            const Objective& objective) {
  const Rollout states = rollout(model, std::max<std::size_t>(horizon, 1));
  if (objective.mode == Mode::kStochastic)
    return stochastic_loss(model, states, batches, predictor, objective.beta, objective.sigma_noise);
  return deterministic_loss(model, states, batches, predictor);
}

bool finite_report(const LossReport& r) {
  return std::isfinite(r.total) && std::isfinite(r.data_term) && std::isfinite(r.kl_term);
}

}  // namespace

TrainResult train(const LabeledDataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw DataError("train: empty dataset");
  if (data.y.rows() != data.size()) throw DimensionError("train: x and y row counts differ");

  const auto clock_start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start)
        .count();
  };

  const LinearPredictor predictor(data.x.cols(), data.y.cols());
  const Vec anchor = resolve_anchor(config.anchor, data.x);
  const double delta = config.t_train > 0
                           ? derive_delta(data.x, anchor, config.metric, config.t_train)
                           : config.delta;
  PartitionResult part = partition_dataset(data.x, anchor, config.metric, delta, config.t_total);
  const std::size_t t_train = part.partition.t_train;

  const Rng root(config.seed);
  Rng init_rng = root.child(0);
  const Rng sampling_root = root.child(1);

  RecurrenceModel model = RecurrenceModel::initialize(config.mode, predictor.weight_dim(),
                                                      config.augment, init_rng, config.sigma_min);
  AdaBelief optimizer(model.flatten_parameters().size(),
                      {config.learning_rate, 0.9, 0.999, 1e-16, config.grad_clip});
  const Objective objective = config.objective();
  const std::vector<RingBatch> full = full_ring_batches(data, part.rings, t_train);

  Checkpoint ck;
  ck.model = model;
  ck.input_dim = predictor.input_dim();
  ck.output_dim = predictor.output_dim();
  ck.partition = part.partition;
  ck.partition.assignments.clear();
  ck.x_norm = data.x_norm.dim() == data.x.cols() ? data.x_norm : Normalization::identity(data.x.cols());
  ck.y_norm = data.y_norm.dim() == data.y.cols() ? data.y_norm : Normalization::identity(data.y.cols());
  ck.config = config;
  ck.config.threads = 1;

  TrainResult result;
  std::vector<double> best_history;

  auto full_eval = [&](std::size_t iter) -> bool {
    const LossReport rep = evaluate_batches(model, full, t_train, predictor, objective);
    result.log.push_back({iter, rep.total, rep.data_term, rep.kl_term, elapsed_ms()});
    if (!finite_report(rep)) {
      throw TrainingDiverged("training diverged at iteration " + std::to_string(iter) +
                                 " (non-finite full-data loss)",
                             ck);
    }
    if (best_history.empty() || rep.total < ck.final_loss.total) {
      ck.model = model;
      ck.final_loss = rep;
      ck.best_iteration = iter;
    }
    best_history.push_back(ck.final_loss.total);
    const std::size_t w = config.convergence_window;
    if (best_history.size() <= w) return false;
    const double old = best_history[best_history.size() - 1 - w];
    const double now = best_history.back();
    return now == 0.0 || old - now <= config.convergence_tol * std::abs(old);
  };

  bool converged = full_eval(0);
  std::size_t it = 0;
  while (!converged && it < config.max_iters) {
    ++it;
    const auto batches =
        subsample_ring_batches(data, part.rings, t_train, config.batch_size, sampling_root, it);
    const Rollout states = rollout(model, t_train);
    const LossGradients lg =
        loss_state_gradients(model, states, batches, predictor, objective, config.threads);
    if (!finite_report(lg.report)) {
      throw TrainingDiverged(
          "training diverged at iteration " + std::to_string(it) + " (non-finite batch loss)", ck);
    }
    const RecurrenceGradient grad = rollout_adjoint(model, states, lg.state_grads);
    Vec params = model.flatten_parameters();
    try {
      optimizer.step(params, grad.flatten());
    } catch (const NumericalError& e) {
      throw TrainingDiverged("training diverged at iteration " + std::to_string(it) + ": " +
                                 e.what(),
                             ck);
    }
    model.assign_parameters(params);
    if (it % config.eval_every == 0 || it == config.max_iters) converged = full_eval(it);
  }

  result.checkpoint = std::move(ck);
  result.iterations_run = it;
  result.converged = converged;
  return result;
}

LossReport evaluate_full(const Checkpoint& ck, const LabeledDataset& data) {
  if (data.x.cols() != ck.input_dim || data.y.cols() != ck.output_dim)
    throw DimensionError("evaluate_full: dataset dimensions do not match the checkpoint");
  std::size_t max_ring = 1;
  for (std::size_t i = 0; i < data.size(); ++i)
    max_ring = std::max(max_ring, ck.partition.ring_of(data.x.row(i)));
  const PartitionResult part =
      partition_dataset(data.x, ck.partition.anchor, ck.partition.metric, ck.partition.delta,
                        std::max(max_ring, ck.partition.t_total));
  const auto batches = full_ring_batches(data, part.rings, max_ring);
  return evaluate_batches(ck.model, batches, max_ring, ck.predictor(), ck.config.objective());
}

}  // namespace weightcaster
