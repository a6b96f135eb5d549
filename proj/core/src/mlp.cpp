#include "trajscene/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "trajscene/error.hpp"
#include "trajscene/metrics.hpp"

namespace trajscene {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MlpModel MlpModel::zeros(std::vector<int> layer_dims) {
  MlpModel m;
  m.layer_dims = std::move(layer_dims);
  if (m.layer_dims.size() < 2) throw Error("an MLP needs at least an input and an output layer");
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    if (m.layer_dims[l] <= 0 || m.layer_dims[l + 1] <= 0) throw Error("layer sizes must be positive");
    m.weights.push_back(MatrixXd::Zero(m.layer_dims[l + 1], m.layer_dims[l]));
    m.biases.push_back(VectorXd::Zero(m.layer_dims[l + 1]));
  }
  return m;
}

MlpModel MlpModel::initialize(std::vector<int> layer_dims, std::uint64_t seed) {
  MlpModel m = zeros(std::move(layer_dims));
  m.rng_seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& w : m.weights) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(w.cols())));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
  }
  return m;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MlpModel::validate() const {
  if (layer_dims.size() < 2 || weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    throw IntegrityError("MLP layer count does not match its parameters");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].cols() != layer_dims[l] || weights[l].rows() != layer_dims[l + 1] ||
        biases[l].size() != layer_dims[l + 1]) {
      throw IntegrityError("MLP layer " + std::to_string(l) + " has inconsistent shapes");
    }
  }
  if (input_shift.size() != input_scale.size() ||
      (input_shift.size() != 0 && input_shift.size() != input_dim())) {
    throw IntegrityError("MLP input standardization does not match the input dimension");
  }
  if (output_dim() != static_cast<int>(kModeCount)) {
    throw IntegrityError("MLP output dimension must be " + std::to_string(kModeCount));
  }
}

namespace {

void softmax_columns(MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

struct Activations {
  std::vector<MatrixXd> pre;   // z_l
  std::vector<MatrixXd> post;  // a_l, post[0] = input
};

Activations run_forward(const MlpModel& model, const MatrixXd& x) {
  if (x.rows() != model.input_dim()) {
    throw Error("input has dimension " + std::to_string(x.rows()) + ", model expects " +
                std::to_string(model.input_dim()));
  }
  Activations a;
  if (model.input_shift.size() > 0) {
    a.post.push_back((x.colwise() - model.input_shift).array().colwise() * model.input_scale.array());
  } else {
    a.post.push_back(x);
  }
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixXd z = model.weights[l] * a.post.back();
    z.colwise() += model.biases[l];
    a.pre.push_back(z);
    if (l + 1 < layers) {
      a.post.push_back(z.cwiseMax(0.0));
    } else {
      softmax_columns(z);
      a.post.push_back(std::move(z));
    }
  }
  return a;
}

}  // namespace

MatrixXd forward_batch(const MlpModel& model, const MatrixXd& x) { return run_forward(model, x).post.back(); }

VectorXd forward(const MlpModel& model, const VectorXd& x) {
  return forward_batch(model, MatrixXd(x)).col(0);
}

double loss_and_gradients(const MlpModel& model, const MatrixXd& x, const std::vector<int>& labels,
                          double l2_penalty, Gradients* grads) {
  if (static_cast<std::size_t>(x.cols()) != labels.size() || labels.empty()) {
    throw Error("batch and label counts differ or are empty");
  }
  const Activations a = run_forward(model, x);
  const MatrixXd& probs = a.post.back();
  const double n = static_cast<double>(labels.size());

  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= model.output_dim()) throw Error("label out of range");
    loss -= std::log(std::max(probs(labels[i], static_cast<Eigen::Index>(i)), 1e-300));
  }
  loss /= n;
  for (const auto& w : model.weights) loss += l2_penalty * w.squaredNorm();

  if (!grads) return loss;
  const std::size_t layers = model.weights.size();
  grads->weights.assign(layers, MatrixXd());
  grads->biases.assign(layers, VectorXd());

  MatrixXd delta = probs;
  for (std::size_t i = 0; i < labels.size(); ++i) delta(labels[i], static_cast<Eigen::Index>(i)) -= 1.0;
  delta /= n;
  for (std::size_t l = layers; l-- > 0;) {
    grads->weights[l] = delta * a.post[l].transpose() + 2.0 * l2_penalty * model.weights[l];
    grads->biases[l] = delta.rowwise().sum();
    if (l > 0) {
      MatrixXd back = model.weights[l].transpose() * delta;
      delta = back.cwiseProduct((a.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

double gradient_check(const MlpModel& model, const MatrixXd& x, const std::vector<int>& labels,
                      double l2_penalty, double step) {
  Gradients g;
  loss_and_gradients(model, x, labels, l2_penalty, &g);
  MlpModel probe = model;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double up = loss_and_gradients(probe, x, labels, l2_penalty, nullptr);
    param = saved - step;
    const double down = loss_and_gradients(probe, x, labels, l2_penalty, nullptr);
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel = std::fabs(analytic - numeric) / std::max(std::fabs(analytic) + std::fabs(numeric), 1e-8);
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < probe.weights[l].size(); ++i) check(probe.weights[l].data()[i], g.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < probe.biases[l].size(); ++i) check(probe.biases[l][i], g.biases[l][i]);
  }
  return worst;
}

void TrainConfig::validate() const {
  for (int h : hidden_dims) {
    if (h <= 0) throw ConfigError("train.hidden_dims entries must be positive");
  }
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(l2_penalty >= 0)) throw ConfigError("train.l2_penalty must be >= 0");
  if (!(train_frac > 0 && val_frac > 0 && test_frac > 0)) {
    throw ConfigError("train/val/test fractions must all be positive");
  }
  if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw ConfigError("train/val/test fractions must sum to 1");
  }
}

DataSplit stratified_split(const std::vector<LabeledVector>& data, const TrainConfig& cfg) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (data[order[i]].id == data[order[i - 1]].id) throw Error("duplicate segment id " + data[order[i]].id);
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (auto i : order) by_class[static_cast<int>(data[i].label)].push_back(i);

  DataSplit split;
  for (auto& [cls, members] : by_class) {
    std::mt19937_64 rng(cfg.split_seed * 1000003ULL + static_cast<std::uint64_t>(cls));
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng() % i]);
    }
    const auto n = static_cast<double>(members.size());
    auto n_test = static_cast<std::size_t>(std::llround(n * cfg.test_frac));
    auto n_val = static_cast<std::size_t>(std::llround(n * cfg.val_frac));
    if (n_test + n_val >= members.size()) {
      n_val = 0;
      n_test = members.size() > 1 ? std::min(n_test, members.size() - 1) : 0;
    }
    split.test.insert(split.test.end(), members.begin(), members.begin() + static_cast<long>(n_test));
    split.val.insert(split.val.end(), members.begin() + static_cast<long>(n_test),
                     members.begin() + static_cast<long>(n_test + n_val));
    split.train.insert(split.train.end(), members.begin() + static_cast<long>(n_test + n_val), members.end());
  }
  auto by_id = [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.val.begin(), split.val.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

namespace {

MatrixXd pack(const std::vector<LabeledVector>& set, std::size_t dim) {
  MatrixXd x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const VectorXd>(set[i].x.data(), static_cast<Eigen::Index>(dim));
  }
  return x;
}

double macro_f1_on(const MlpModel& model, const MatrixXd& x, const std::vector<int>& labels) {
  const MatrixXd probs = forward_batch(model, x);
  std::vector<int> pred(labels.size());
  for (Eigen::Index c = 0; c < probs.cols(); ++c) probs.col(c).maxCoeff(&pred[static_cast<std::size_t>(c)]);
  return evaluate_predictions(labels, pred).macro_f1;
}

}  // namespace

namespace {
// Features with less spread than this on the training set are only centered.
constexpr double kMinInputSd = 1e-9;
}  // namespace

TrainResult train(const std::vector<LabeledVector>& train_set, const std::vector<LabeledVector>& val_set,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw Error("training set is empty");
  const std::size_t dim = train_set.front().x.size();
  if (dim == 0) throw Error("embeddings are empty");
  std::set<int> classes;
  for (const auto* set : {&train_set, &val_set}) {
    for (const auto& s : *set) {
      if (s.x.size() != dim) throw Error("mixed embedding lengths: " + s.id + " has " + std::to_string(s.x.size()) + ", expected " + std::to_string(dim));
    }
  }
  for (const auto& s : train_set) classes.insert(static_cast<int>(s.label));
  if (classes.size() < 2) throw Error("training needs at least two classes");

  std::vector<int> dims{static_cast<int>(dim)};
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(static_cast<int>(kModeCount));

  TrainResult result;
  MlpModel model = MlpModel::initialize(dims, cfg.init_seed);

  const MatrixXd x_train = pack(train_set, dim);
  const VectorXd mean = x_train.rowwise().mean();
  const VectorXd sd = ((x_train.colwise() - mean).array().square().rowwise().mean()).sqrt().matrix();
  model.input_shift = mean;
  model.input_scale = sd.unaryExpr([](double v) { return v > kMinInputSd ? 1.0 / v : 1.0; });
  std::vector<int> y_train;
  for (const auto& s : train_set) y_train.push_back(static_cast<int>(s.label));
  const bool has_val = !val_set.empty();
  const MatrixXd x_val = has_val ? pack(val_set, dim) : x_train;
  std::vector<int> y_val;
  for (const auto& s : val_set) y_val.push_back(static_cast<int>(s.label));
  if (!has_val) y_val = y_train;

  std::mt19937_64 rng(cfg.init_seed ^ 0x5eed5eed5eedULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  result.best_val_macro_f1 = -1.0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  Gradients g;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      MatrixXd xb(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(end - start));
      std::vector<int> yb;
      for (std::size_t k = start; k < end; ++k) {
        xb.col(static_cast<Eigen::Index>(k - start)) = x_train.col(static_cast<Eigen::Index>(order[k]));
        yb.push_back(y_train[order[k]]);
      }
      loss_sum += loss_and_gradients(model, xb, yb, cfg.l2_penalty, &g);
      ++batches;
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        model.weights[l] -= cfg.learning_rate * g.weights[l];
        model.biases[l] -= cfg.learning_rate * g.biases[l];
      }
    }
    const double f1 = macro_f1_on(model, x_val, y_val);
    const double val_loss = loss_and_gradients(model, x_val, y_val, 0.0, nullptr);
    result.log.push_back({epoch, loss_sum / static_cast<double>(batches), f1, val_loss});
    if (f1 > result.best_val_macro_f1 || (f1 == result.best_val_macro_f1 && val_loss < best_val_loss)) {
      result.best_val_macro_f1 = f1;
      best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

int predict(const MlpModel& model, const std::vector<double>& x) {
  const VectorXd p = forward(model, Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  Eigen::Index best;
  p.maxCoeff(&best);
  return static_cast<int>(best);
}

namespace {
constexpr const char* kCheckpointFormat = "trajscene-mlp";
constexpr int kCheckpointVersion = 2;
}  // namespace

std::string serialize_model(const MlpModel& model, const TrainConfig& cfg) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["layer_dims"] = model.layer_dims;
  j["activation"] = "relu";
  j["output"] = "softmax";
  j["rng_seed"] = model.rng_seed;
  j["train_config"] = {{"hidden_dims", cfg.hidden_dims}, {"learning_rate", cfg.learning_rate},
                       {"batch_size", cfg.batch_size},   {"epochs", cfg.epochs},
                       {"l2_penalty", cfg.l2_penalty},   {"split_seed", cfg.split_seed},
                       {"init_seed", cfg.init_seed},     {"train_frac", cfg.train_frac},
                       {"val_frac", cfg.val_frac},       {"test_frac", cfg.test_frac}};
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const auto& w = model.weights[l];
    std::vector<double> rows;
    rows.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) rows.push_back(w(r, c));
    }
    std::vector<double> b(model.biases[l].data(), model.biases[l].data() + model.biases[l].size());
    layers.push_back({{"weights_row_major", rows}, {"bias", b}});
  }
  j["layers"] = std::move(layers);
  j["input_shift"] = std::vector<double>(model.input_shift.data(), model.input_shift.data() + model.input_shift.size());
  j["input_scale"] = std::vector<double>(model.input_scale.data(), model.input_scale.data() + model.input_scale.size());
  return j.dump() + "\n";
}

MlpModel deserialize_model(std::string_view text, TrainConfig* cfg) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != kCheckpointFormat) throw IntegrityError("not a trajscene MLP checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw IntegrityError("unsupported checkpoint version " + j.at("version").dump());
    }
    MlpModel m = MlpModel::zeros(j.at("layer_dims").get<std::vector<int>>());
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    const auto& layers = j.at("layers");
    if (layers.size() != m.weights.size()) throw IntegrityError("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      const auto w = layers[l].at("weights_row_major").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto& W = m.weights[l];
      if (w.size() != static_cast<std::size_t>(W.size()) || b.size() != static_cast<std::size_t>(m.biases[l].size())) {
        throw IntegrityError("checkpoint layer " + std::to_string(l) + " has the wrong size");
      }
      for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = w[static_cast<std::size_t>(r * W.cols() + c)];
      }
      for (std::size_t i = 0; i < b.size(); ++i) m.biases[l][static_cast<Eigen::Index>(i)] = b[i];
    }
    const auto shift = j.at("input_shift").get<std::vector<double>>();
    const auto scale = j.at("input_scale").get<std::vector<double>>();
    m.input_shift = Eigen::Map<const VectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size()));
    m.input_scale = Eigen::Map<const VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    if (cfg) {
      const auto& t = j.at("train_config");
      cfg->hidden_dims = t.at("hidden_dims").get<std::vector<int>>();
      cfg->learning_rate = t.at("learning_rate").get<double>();
      cfg->batch_size = t.at("batch_size").get<int>();
      cfg->epochs = t.at("epochs").get<int>();
      cfg->l2_penalty = t.at("l2_penalty").get<double>();
      cfg->split_seed = t.at("split_seed").get<std::uint64_t>();
      cfg->init_seed = t.at("init_seed").get<std::uint64_t>();
      cfg->train_frac = t.at("train_frac").get<double>();
      cfg->val_frac = t.at("val_frac").get<double>();
      cfg->test_frac = t.at("test_frac").get<double>();
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace trajscene
