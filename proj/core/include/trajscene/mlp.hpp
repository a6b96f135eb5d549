#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trajscene/types.hpp"

namespace trajscene {

/// Fully connected network: rectifier on hidden layers, softmax output.
/// weights[l] has shape (layer_dims[l+1], layer_dims[l]).
struct MlpModel {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::uint64_t rng_seed = 0;
  /// Per-feature standardization applied before the first layer as
  /// (x - input_shift) * input_scale. Empty vectors mean identity.
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;

  /// He-scaled normal weights, zero biases.
  static MlpModel initialize(std::vector<int> layer_dims, std::uint64_t seed);
  static MlpModel zeros(std::vector<int> layer_dims);

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t parameter_count() const;

  /// Throws IntegrityError if shapes do not chain or the output is not 5-way.
  void validate() const;
};

/// Class probabilities for one input. Throws Error on a dimension mismatch.
Eigen::VectorXd forward(const MlpModel& model, const Eigen::VectorXd& x);

/// Probabilities for a batch; one sample per column.
Eigen::MatrixXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& x);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Mean cross-entropy over the batch plus l2_penalty * sum of squared weights
/// (biases are not penalized). Fills `grads` when non-null.
double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& x,
                          const std::vector<int>& labels, double l2_penalty, Gradients* grads);

/// Maximum relative error between analytic gradients and central finite
/// differences over every parameter. Relative error is
/// |a - n| / max(|a| + |n|, 1e-8).
double gradient_check(const MlpModel& model, const Eigen::MatrixXd& x,
                      const std::vector<int>& labels, double l2_penalty = 0.0, double step = 1e-5);

struct TrainConfig {
  std::vector<int> hidden_dims{128};
  double learning_rate = 0.05;
  int batch_size = 64;
  int epochs = 50;
  double l2_penalty = 1e-4;
  std::uint64_t split_seed = 7;
  std::uint64_t init_seed = 13;
  double train_frac = 0.7;
  double val_frac = 0.1;
  double test_frac = 0.2;

  void validate() const;
};

struct LabeledVector {
  std::string id;
  std::vector<double> x;
  ModeLabel label = ModeLabel::walk;
};

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Per-class shuffled split driven by `cfg.split_seed`. Returned indices point
/// into `data`; membership depends only on the (id, label) set, not on input
/// order. Throws Error on duplicate ids.
DataSplit stratified_split(const std::vector<LabeledVector>& data, const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double val_loss = 0.0;  // mean cross-entropy, no penalty term
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_macro_f1 = 0.0;
};

/// Mini-batch gradient descent on `train_set` after fitting the input
/// standardization to it, keeping the parameters with
/// the best validation macro-F1 (training set when `val_set` is empty); ties
/// go to the lower validation cross-entropy.
/// Throws Error on mixed input lengths or fewer than two classes.
TrainResult train(const std::vector<LabeledVector>& train_set,
                  const std::vector<LabeledVector>& val_set, const TrainConfig& cfg);

int predict(const MlpModel& model, const std::vector<double>& x);

/// Versioned JSON checkpoint.
std::string serialize_model(const MlpModel& model, const TrainConfig& cfg);
MlpModel deserialize_model(std::string_view text, TrainConfig* cfg = nullptr);

}  // namespace trajscene
