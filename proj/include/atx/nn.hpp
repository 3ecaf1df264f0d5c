#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "atx/ingest.hpp"
#include "atx/preprocess.hpp"

namespace atx {

/// Feed-forward classifier hyperparameters. The default shape is
/// 78 -> 256 -> 128 -> 64 -> classes with ReLU and dropout 0.2, trained by
/// momentum SGD.
struct ModelConfig {
  int input_dim = static_cast<int>(kFeatureCount);
  std::vector<int> hidden_layers = {256, 128, 64};
  int output_classes = 2;
  double dropout_rate = 0.2;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DenseLayer {
  Matrix weights;             // fan_in x fan_out
  Eigen::RowVectorXd bias;    // fan_out
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct ModelParams {
  ModelConfig config;
  std::vector<DenseLayer> layers;
  std::vector<EpochMetrics> history;
  int best_epoch = 0;  // 1-based epoch whose parameters were kept; 0 before training
};

/// Samples with integer class labels.
struct LabeledData {
  Matrix x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

LabeledData to_labeled(std::span<const FlowRecord> records);

/// Transform applied to every mini-batch before the forward pass (and to
/// evaluation batches, which use the same batch length).
using BatchTransform = std::function<Matrix(const Matrix&)>;

/// Weights ~ N(0, 1/fan_in), biases zero. Deterministic in config.seed.
ModelParams init(const ModelConfig& config);

/// Class-probability matrix (inference mode, no dropout).
Matrix forward(const ModelParams& params, const Matrix& batch);

struct Gradients {
  std::vector<DenseLayer> layers;  // same shapes as params.layers
  double loss = 0.0;               // mean cross-entropy of the batch
};

/// Gradient of mean cross-entropy w.r.t. every parameter (inference mode).
Gradients grad(const ModelParams& params, const Matrix& batch, std::span<const int> labels);

/// Mean cross-entropy (inference mode).
double loss(const ModelParams& params, const Matrix& batch, std::span<const int> labels);

/// Mini-batch momentum SGD for config.epochs epochs. Keeps the parameters
/// of the epoch with the best validation accuracy (train accuracy when the
/// validation set is empty). Throws a runtime error naming the epoch if the
/// loss becomes non-finite.
ModelParams train(const ModelConfig& config, const LabeledData& train_set, const LabeledData& validation_set,
                  const BatchTransform& batch_transform = {});

struct EvalResult {
  int classes = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<std::size_t> support;                  // per true class
  std::vector<double> recall;                        // 0 where support is 0
  double accuracy = 0.0;
  /// Recall of class 1 (binary runs).
  double attack_recall() const { return classes > 1 ? recall[1] : 0.0; }
  /// Recall of class 0.
  double benign_recall() const { return recall.empty() ? 0.0 : recall[0]; }
};

EvalResult score_predictions(std::span<const int> truth, std::span<const int> predicted, int classes);

/// Arg-max predictions, evaluated in consecutive batches of config.batch_size
/// so batch transforms see the same length as in training.
std::vector<int> predict(const ModelParams& params, const Matrix& x, const BatchTransform& batch_transform = {});

EvalResult evaluate(const ModelParams& params, const LabeledData& test_set,
                    const BatchTransform& batch_transform = {});

/// Versioned little-endian binary model file.
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace atx
