#include "atx/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "atx/error.hpp"
#include "atx/rng.hpp"

namespace atx {

namespace {

constexpr char kModelMagic[8] = {'A', 'T', 'X', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

// Hidden activations after ReLU (and dropout in training), plus the output
// layer's log-probabilities.
struct Pass {
  std::vector<Matrix> activations;  // [0] = input
  Matrix log_probs;
};

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

Pass run_forward(const ModelParams& p, const Matrix& x, Rng* dropout_rng) {
  if (x.cols() != p.config.input_dim) {
    throw runtime_error("shape error: batch has " + std::to_string(x.cols()) + " features, model expects " +
                        std::to_string(p.config.input_dim));
  }
  Pass pass;
  pass.activations.reserve(p.layers.size());
  pass.activations.push_back(x);
  const double keep = 1.0 - p.config.dropout_rate;
  for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
    Matrix z = pass.activations.back() * p.layers[l].weights;
    z.rowwise() += p.layers[l].bias;
    z = z.cwiseMax(0.0);
    if (dropout_rng && p.config.dropout_rate > 0.0) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        z.data()[i] = dropout_rng->uniform() < keep ? z.data()[i] / keep : 0.0;
      }
    }
    pass.activations.push_back(std::move(z));
  }
  Matrix logits = pass.activations.back() * p.layers.back().weights;
  logits.rowwise() += p.layers.back().bias;
  pass.log_probs = log_softmax(logits);
  return pass;
}

void check_labels(std::span<const int> labels, int classes) {
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw data_error("label error: class " + std::to_string(y) + " outside 0.." + std::to_string(classes - 1));
    }
  }
}

double mean_nll(const Matrix& log_probs, std::span<const int> labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s -= log_probs(static_cast<Eigen::Index>(i), labels[i]);
  return labels.empty() ? 0.0 : s / static_cast<double>(labels.size());
}

Gradients backward(const ModelParams& p, const Pass& pass, std::span<const int> labels, double dropout_scale) {
  const auto batch = static_cast<double>(labels.size());
  Gradients g;
  g.layers.resize(p.layers.size());
  g.loss = mean_nll(pass.log_probs, labels);

  Matrix delta = pass.log_probs.array().exp();
  for (std::size_t i = 0; i < labels.size(); ++i) delta(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
  delta /= batch;

  for (std::size_t l = p.layers.size(); l-- > 0;) {
    const Matrix& input = pass.activations[l];
    g.layers[l].weights = input.transpose() * delta;
    g.layers[l].bias = delta.colwise().sum();
    if (l == 0) break;
    Matrix upstream = delta * p.layers[l].weights.transpose();
    // ReLU (and the inverted-dropout scale) pass gradient only where the activation survived.
    delta = (input.array() > 0.0).select(upstream * dropout_scale, 0.0);
  }
  return g;
}

LabeledData slice(const LabeledData& d, std::span<const std::size_t> rows) {
  LabeledData out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), d.x.cols());
  out.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = d.x.row(static_cast<Eigen::Index>(rows[i]));
    out.y[i] = d.y[rows[i]];
  }
  return out;
}

struct SetMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Inference-mode loss and accuracy over a whole set, in consecutive batches.
SetMetrics measure(const ModelParams& p, const LabeledData& d, const BatchTransform& transform) {
  if (d.size() == 0) return {};
  const auto bs = static_cast<Eigen::Index>(p.config.batch_size);
  double nll = 0.0;
  std::size_t correct = 0;
  for (Eigen::Index start = 0; start < d.x.rows(); start += bs) {
    const Eigen::Index len = std::min(bs, d.x.rows() - start);
    Matrix xb = d.x.middleRows(start, len);
    if (transform) xb = transform(xb);
    const Pass pass = run_forward(p, xb, nullptr);
    for (Eigen::Index r = 0; r < len; ++r) {
      const int y = d.y[static_cast<std::size_t>(start + r)];
      nll -= pass.log_probs(r, y);
      Eigen::Index arg = 0;
      pass.log_probs.row(r).maxCoeff(&arg);
      if (arg == y) ++correct;
    }
  }
  const auto n = static_cast<double>(d.size());
  return {nll / n, static_cast<double>(correct) / n};
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw data_error("model file truncated");
  return v;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1) throw config_error("input_dim must be >= 1");
  for (int w : hidden_layers) {
    if (w < 1) throw config_error("hidden layer widths must be >= 1");
  }
  if (output_classes != 2 && output_classes != kClassCount) {
    throw config_error("output_classes must be 2 or 15, got " + std::to_string(output_classes));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw config_error("dropout_rate must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw config_error("learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw config_error("momentum must be in [0, 1)");
  if (batch_size < 1) throw config_error("batch_size must be >= 1");
  if (epochs < 1) throw config_error("epochs must be >= 1");
}

LabeledData to_labeled(std::span<const FlowRecord> records) {
  LabeledData d;
  d.x = to_matrix(records);
  d.y.reserve(records.size());
  for (const auto& r : records) d.y.push_back(r.label);
  return d;
}

ModelParams init(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  Rng rng(derive_seed({config.seed, 0x1a17}));
  std::vector<int> widths{config.input_dim};
  widths.insert(widths.end(), config.hidden_layers.begin(), config.hidden_layers.end());
  widths.push_back(config.output_classes);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.weights.resize(widths[l], widths[l + 1]);
    const double sd = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = rng.normal(0.0, sd);
    layer.bias = Eigen::RowVectorXd::Zero(widths[l + 1]);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Matrix forward(const ModelParams& params, const Matrix& batch) {
  return run_forward(params, batch, nullptr).log_probs.array().exp();
}

Gradients grad(const ModelParams& params, const Matrix& batch, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != batch.rows()) throw runtime_error("grad: label count mismatch");
  check_labels(labels, params.config.output_classes);
  return backward(params, run_forward(params, batch, nullptr), labels, 1.0);
}

double loss(const ModelParams& params, const Matrix& batch, std::span<const int> labels) {
  check_labels(labels, params.config.output_classes);
  return mean_nll(run_forward(params, batch, nullptr).log_probs, labels);
}

ModelParams train(const ModelConfig& config, const LabeledData& train_set, const LabeledData& validation_set,
                  const BatchTransform& batch_transform) {
  if (train_set.size() == 0) throw data_error("cannot train on an empty training set");
  check_labels(train_set.y, config.output_classes);
  check_labels(validation_set.y, config.output_classes);

  ModelParams p = init(config);
  ModelParams best = p;
  double best_score = -1.0;

  std::vector<DenseLayer> velocity(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    velocity[l].weights = Matrix::Zero(p.layers[l].weights.rows(), p.layers[l].weights.cols());
    velocity[l].bias = Eigen::RowVectorXd::Zero(p.layers[l].bias.size());
  }

  Rng order_rng(derive_seed({config.seed, 0x0de7}));
  Rng dropout_rng(derive_seed({config.seed, 0xd709}));
  const double dropout_scale = 1.0 / (1.0 - config.dropout_rate);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t len = std::min(bs, order.size() - start);
      LabeledData batch = slice(train_set, std::span(order).subspan(start, len));
      if (batch_transform) batch.x = batch_transform(batch.x);
      const Pass pass = run_forward(p, batch.x, &dropout_rng);
      const Gradients g = backward(p, pass, batch.y, dropout_scale);
      if (!std::isfinite(g.loss)) {
        throw runtime_error("training diverged: non-finite loss in epoch " + std::to_string(epoch));
      }
      for (std::size_t l = 0; l < p.layers.size(); ++l) {
        velocity[l].weights = config.momentum * velocity[l].weights - config.learning_rate * g.layers[l].weights;
        velocity[l].bias = config.momentum * velocity[l].bias - config.learning_rate * g.layers[l].bias;
        p.layers[l].weights += velocity[l].weights;
        p.layers[l].bias += velocity[l].bias;
      }
    }

    const SetMetrics tr = measure(p, train_set, batch_transform);
    const SetMetrics va = measure(p, validation_set, batch_transform);
    if (!std::isfinite(tr.loss)) {
      throw runtime_error("training diverged: non-finite loss in epoch " + std::to_string(epoch));
    }
    p.history.push_back({epoch, tr.loss, tr.accuracy, va.loss, va.accuracy});
    const double score = validation_set.size() > 0 ? va.accuracy : tr.accuracy;
    if (score > best_score) {
      best_score = score;
      best.layers = p.layers;
      best.best_epoch = epoch;
    }
  }
  best.history = p.history;
  return best;
}

EvalResult score_predictions(std::span<const int> truth, std::span<const int> predicted, int classes) {
  if (truth.size() != predicted.size()) throw runtime_error("prediction count does not match label count");
  EvalResult r;
  r.classes = classes;
  const auto n = static_cast<std::size_t>(classes);
  r.confusion.assign(n, std::vector<std::size_t>(n, 0));
  r.support.assign(n, 0);
  r.recall.assign(n, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    check_labels(truth.subspan(i, 1), classes);
    check_labels(predicted.subspan(i, 1), classes);
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    ++r.support[static_cast<std::size_t>(truth[i])];
    if (truth[i] == predicted[i]) ++correct;
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (r.support[c] > 0) r.recall[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(r.support[c]);
  }
  r.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  return r;
}

std::vector<int> predict(const ModelParams& params, const Matrix& x, const BatchTransform& batch_transform) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  const auto bs = static_cast<Eigen::Index>(params.config.batch_size);
  for (Eigen::Index start = 0; start < x.rows(); start += bs) {
    const Eigen::Index len = std::min(bs, x.rows() - start);
    Matrix xb = x.middleRows(start, len);
    if (batch_transform) xb = batch_transform(xb);
    const Pass pass = run_forward(params, xb, nullptr);
    for (Eigen::Index r = 0; r < len; ++r) {
      Eigen::Index arg = 0;
      pass.log_probs.row(r).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
  }
  return out;
}

EvalResult evaluate(const ModelParams& params, const LabeledData& test_set, const BatchTransform& batch_transform) {
  if (test_set.size() == 0) throw data_error("cannot evaluate on an empty test set");
  const auto pred = predict(params, test_set.x, batch_transform);
  return score_predictions(test_set.y, pred, params.config.output_classes);
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  static_assert(std::endian::native == std::endian::little, "model format assumes a little-endian host");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write model file " + path.string());
  const auto& c = params.config;
  out.write(kModelMagic, sizeof kModelMagic);
  put(out, kModelVersion);
  put(out, static_cast<std::int32_t>(c.input_dim));
  put(out, static_cast<std::uint32_t>(c.hidden_layers.size()));
  for (int w : c.hidden_layers) put(out, static_cast<std::int32_t>(w));
  put(out, static_cast<std::int32_t>(c.output_classes));
  put(out, c.dropout_rate);
  put(out, c.learning_rate);
  put(out, c.momentum);
  put(out, static_cast<std::int32_t>(c.batch_size));
  put(out, static_cast<std::int32_t>(c.epochs));
  put(out, c.seed);
  put(out, static_cast<std::int32_t>(params.best_epoch));
  for (const auto& layer : params.layers) {
    put(out, static_cast<std::uint32_t>(layer.weights.rows()));
    put(out, static_cast<std::uint32_t>(layer.weights.cols()));
    out.write(reinterpret_cast<const char*>(layer.weights.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(layer.weights.size())));
    out.write(reinterpret_cast<const char*>(layer.bias.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(layer.bias.size())));
  }
  put(out, static_cast<std::uint32_t>(params.history.size()));
  for (const auto& h : params.history) {
    put(out, static_cast<std::int32_t>(h.epoch));
    put(out, h.train_loss);
    put(out, h.train_accuracy);
    put(out, h.validation_loss);
    put(out, h.validation_accuracy);
  }
  if (!out) throw data_error("failed writing model file " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open model file " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw data_error(path.string() + ": not a model file");
  }
  if (take<std::uint32_t>(in) != kModelVersion) throw data_error(path.string() + ": unsupported model version");
  ModelConfig c;
  c.input_dim = take<std::int32_t>(in);
  c.hidden_layers.resize(take<std::uint32_t>(in));
  for (auto& w : c.hidden_layers) w = take<std::int32_t>(in);
  c.output_classes = take<std::int32_t>(in);
  c.dropout_rate = take<double>(in);
  c.learning_rate = take<double>(in);
  c.momentum = take<double>(in);
  c.batch_size = take<std::int32_t>(in);
  c.epochs = take<std::int32_t>(in);
  c.seed = take<std::uint64_t>(in);
  c.validate();

  ModelParams p;
  p.config = c;
  p.best_epoch = take<std::int32_t>(in);
  std::vector<int> widths{c.input_dim};
  widths.insert(widths.end(), c.hidden_layers.begin(), c.hidden_layers.end());
  widths.push_back(c.output_classes);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto rows = take<std::uint32_t>(in);
    const auto cols = take<std::uint32_t>(in);
    if (static_cast<int>(rows) != widths[l] || static_cast<int>(cols) != widths[l + 1]) {
      throw data_error(path.string() + ": layer shape does not match the stored config");
    }
    DenseLayer layer;
    layer.weights.resize(rows, cols);
    layer.bias.resize(cols);
    in.read(reinterpret_cast<char*>(layer.weights.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(layer.weights.size())));
    in.read(reinterpret_cast<char*>(layer.bias.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(layer.bias.size())));
    if (!in) throw data_error("model file truncated");
    p.layers.push_back(std::move(layer));
  }
  p.history.resize(take<std::uint32_t>(in));
  for (auto& h : p.history) {
    h.epoch = take<std::int32_t>(in);
    h.train_loss = take<double>(in);
    h.train_accuracy = take<double>(in);
    h.validation_loss = take<double>(in);
    h.validation_accuracy = take<double>(in);
  }
  return p;
}

}  // namespace atx
