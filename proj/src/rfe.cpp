#include "atx/rfe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "atx/augment.hpp"
#include "atx/error.hpp"
#include "atx/nn.hpp"
#include "atx/rng.hpp"

namespace atx {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double objective(const Matrix& x, const std::vector<int>& y, const Eigen::VectorXd& theta, double l2) {
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd z = (x * theta.head(d)).array() + theta(d);
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(z(i)) - y[static_cast<std::size_t>(i)] * z(i);
  return s / static_cast<double>(z.size()) + 0.5 * l2 * theta.head(d).squaredNorm();
}

Matrix select_columns(const Matrix& x, const std::vector<std::size_t>& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

std::size_t removal_count(double step, std::size_t remaining) {
  std::size_t r = step >= 1.0 ? static_cast<std::size_t>(std::floor(step))
                              : static_cast<std::size_t>(std::floor(step * static_cast<double>(remaining)));
  r = std::max<std::size_t>(r, 1);
  return std::min(r, remaining - 1);
}

}  // namespace

void RfeOptions::validate() const {
  if (!(step > 0.0)) throw config_error("RFE step must be positive");
  if (step >= 1.0 && step != std::floor(step)) {
    throw config_error("RFE step >= 1 counts features and must be a whole number");
  }
  if (!(tolerance >= 0.0)) throw config_error("RFE tolerance must be non-negative");
  if (!(l2 > 0.0)) throw config_error("RFE l2 penalty must be positive");
  if (max_newton_iterations < 1) throw config_error("RFE needs at least one Newton iteration");
}

LinearModel fit_logistic(const Matrix& x, const std::vector<int>& y, double l2, int max_iterations,
                         const LinearModel* warm) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n == 0) throw data_error("logistic fit on empty data");
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  if (warm && warm->weights.size() == d) {
    theta.head(d) = warm->weights;
    theta(d) = warm->intercept;
  }
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];

  double current = objective(x, y, theta, l2);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd z = (x * theta.head(d)).array() + theta(d);
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd r = p - yv;
    Eigen::VectorXd g(d + 1);
    g.head(d) = x.transpose() * r / static_cast<double>(n) + l2 * theta.head(d);
    g(d) = r.mean();

    Matrix h(d + 1, d + 1);
    const Matrix wx = x.array().colwise() * w.array();
    h.topLeftCorner(d, d) = x.transpose() * wx / static_cast<double>(n);
    h.topLeftCorner(d, d).diagonal().array() += l2;
    h.topRightCorner(d, 1) = wx.colwise().sum().transpose() / static_cast<double>(n);
    h.bottomLeftCorner(1, d) = h.topRightCorner(d, 1).transpose();
    h(d, d) = w.sum() / static_cast<double>(n) + 1e-10;

    const Eigen::VectorXd delta = h.ldlt().solve(g);
    const double decrement = g.dot(delta);
    if (!(decrement > 1e-14)) break;
    double t = 1.0;
    Eigen::VectorXd candidate = theta - delta;
    double next = objective(x, y, candidate, l2);
    for (int k = 0; k < 40 && next > current - 1e-4 * t * decrement; ++k) {
      t *= 0.5;
      candidate = theta - t * delta;
      next = objective(x, y, candidate, l2);
    }
    if (!(next < current)) break;
    theta = candidate;
    const double improvement = current - next;
    current = next;
    if (improvement < 1e-12) break;
  }
  return {theta.head(d), theta(d)};
}

double f1_score(const LinearModel& model, const Matrix& x, const std::vector<int>& y) {
  const Eigen::VectorXd z = (x * model.weights).array() + model.intercept;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const bool pos = z(i) >= 0.0;
    const bool truth = y[static_cast<std::size_t>(i)] == 1;
    if (pos && truth) ++tp;
    else if (pos) ++fp;
    else if (truth) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
}

std::vector<std::size_t> FeatureRanking::survivor_order() const {
  std::vector<std::size_t> out;
  out.reserve(elimination.size());
  for (auto it = elimination.rbegin(); it != elimination.rend(); ++it) out.push_back(it->index);
  return out;
}

bool FeatureRanking::is_selected(std::size_t feature) const {
  return std::find(selected.begin(), selected.end(), feature) != selected.end();
}

FeatureRanking rfe(const DatasetSplit& split, const std::vector<ClassId>& attacks_in, const RfeOptions& options) {
  options.validate();
  std::vector<ClassId> attacks = attacks_in;
  std::sort(attacks.begin(), attacks.end());
  attacks.erase(std::unique(attacks.begin(), attacks.end()), attacks.end());
  if (attacks.empty()) throw config_error("RFE needs at least one attack class");
  for (auto a : attacks) {
    if (a == kBenign) throw config_error("BENIGN is not an attack class");
    if (split.indices_of(Partition::kTrain, a).empty()) {
      throw data_error("empty class: attack class " + std::to_string(a) + " absent from training partition");
    }
  }

  auto train_records = binary_subset(split, Partition::kTrain, attacks);
  if (options.max_benign > 0) {
    RecordSet benign, kept;
    for (auto& r : train_records) (r.label == 0 ? benign : kept).push_back(r);
    if (benign.size() > options.max_benign) {
      Rng rng(derive_seed({options.seed, 0xbe9}));
      rng.shuffle(benign.begin(), benign.end());
      benign.resize(options.max_benign);
    }
    kept.insert(kept.end(), benign.begin(), benign.end());
    train_records = std::move(kept);
  }
  const auto val_records = binary_subset(split, Partition::kValidation, attacks);
  const auto has_both = [](const RecordSet& rs) {
    bool b = false, a = false;
    for (const auto& r : rs) (r.label == 0 ? b : a) = true;
    return a && b;
  };
  if (!has_both(train_records)) throw data_error("empty class: RFE training data lacks benign or attack records");
  if (!has_both(val_records)) throw data_error("empty class: RFE validation data lacks benign or attack records");

  const auto scaler = standardize_fit(train_records);
  const auto train = to_labeled(standardize_apply(scaler, train_records));
  const auto val = to_labeled(standardize_apply(scaler, val_records));

  FeatureRanking ranking;
  ranking.attacks = attacks;
  std::vector<std::size_t> remaining(kFeatureCount);
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> sets;  // retained set per scored size
  LinearModel model;
  bool have_model = false;

  for (int round = 1;; ++round) {
    const Matrix xt = select_columns(train.x, remaining);
    model = fit_logistic(xt, train.y, options.l2, options.max_newton_iterations, have_model ? &model : nullptr);
    have_model = true;
    ranking.scores.push_back({remaining.size(), f1_score(model, select_columns(val.x, remaining), val.y)});
    sets.push_back(remaining);

    if (remaining.size() == 1) {
      ranking.elimination.push_back({remaining[0], std::string(feature_names()[remaining[0]]), round,
                                     std::abs(model.weights(0))});
      ranking.rounds = round - 1;
      break;
    }

    std::vector<std::size_t> order(remaining.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Weakest first; equal weights go out lowest feature index first.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(model.weights(static_cast<Eigen::Index>(a))) < std::abs(model.weights(static_cast<Eigen::Index>(b)));
    });
    const std::size_t drop = removal_count(options.step, remaining.size());
    std::vector<bool> removed(remaining.size(), false);
    for (std::size_t k = 0; k < drop; ++k) {
      const auto pos = order[k];
      removed[pos] = true;
      ranking.elimination.push_back({remaining[pos], std::string(feature_names()[remaining[pos]]), round,
                                     std::abs(model.weights(static_cast<Eigen::Index>(pos)))});
    }
    std::vector<std::size_t> next;
    Eigen::VectorXd warm_w(static_cast<Eigen::Index>(remaining.size() - drop));
    for (std::size_t k = 0, m = 0; k < remaining.size(); ++k) {
      if (removed[k]) continue;
      next.push_back(remaining[k]);
      warm_w(static_cast<Eigen::Index>(m++)) = model.weights(static_cast<Eigen::Index>(k));
    }
    remaining = std::move(next);
    model.weights = warm_w;
  }

  ranking.best_score = 0.0;
  for (const auto& s : ranking.scores) ranking.best_score = std::max(ranking.best_score, s.score);
  std::size_t pick = 0;
  for (std::size_t k = 0; k < ranking.scores.size(); ++k) {
    if (ranking.scores[k].score >= ranking.best_score - options.tolerance) pick = k;  // sizes shrink with k
  }
  ranking.selected_score = ranking.scores[pick].score;
  const auto survivors = ranking.survivor_order();
  ranking.selected.assign(survivors.begin(), survivors.begin() + static_cast<std::ptrdiff_t>(sets[pick].size()));
  return ranking;
}

FeatureRanking rfe_single(const DatasetSplit& split, ClassId attack, const RfeOptions& options) {
  return rfe(split, {attack}, options);
}

FeatureRanking rfe_pair(const DatasetSplit& split, ClassId attack_a, ClassId attack_b, const RfeOptions& options) {
  return rfe(split, {attack_a, attack_b}, options);
}

FeatureOverlap common_features(const FeatureRanking& a, const FeatureRanking& b) {
  auto sa = a.selected, sb = b.selected;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  FeatureOverlap out;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out.common));
  std::vector<std::size_t> uni;
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
  out.ratio = uni.empty() ? 1.0 : static_cast<double>(out.common.size()) / static_cast<double>(uni.size());
  return out;
}

}  // namespace atx
