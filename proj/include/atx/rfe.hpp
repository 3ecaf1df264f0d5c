#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atx/ingest.hpp"
#include "atx/preprocess.hpp"

namespace atx {

struct RfeOptions {
  /// >= 1: features removed per round; in (0, 1): fraction of the remaining
  /// features removed per round (at least one).
  double step = 1.0;
  /// Selected size = smallest retained-set size whose validation F1 is at
  /// least best F1 - tolerance.
  double tolerance = 0.01;
  /// L2 penalty of the logistic-regression estimator.
  double l2 = 1e-3;
  int max_newton_iterations = 50;
  /// Caps the benign training records used (0 = all); the subset is drawn
  /// deterministically from `seed`.
  std::size_t max_benign = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EliminatedFeature {
  std::size_t index = 0;
  std::string name;
  int round = 0;            // 1-based round that removed it; rounds + 1 for the last survivor
  double importance = 0.0;  // |weight| in the fit that removed it
};

struct SizeScore {
  std::size_t size = 0;
  double score = 0.0;  // validation F1 of the attack class
};

struct FeatureRanking {
  std::vector<ClassId> attacks;
  std::vector<EliminatedFeature> elimination;  // first removed first; a permutation of all features
  std::vector<std::size_t> selected;           // prefix of the survivor ordering
  std::vector<SizeScore> scores;               // one per retained-set size tried, largest first
  int rounds = 0;
  double best_score = 0.0;
  double selected_score = 0.0;

  /// Feature indices from last eliminated to first eliminated.
  std::vector<std::size_t> survivor_order() const;
  bool is_selected(std::size_t feature) const;
};

/// L2-regularized logistic regression on already-standardized inputs.
struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

/// Fits by damped Newton iterations, optionally warm-started.
LinearModel fit_logistic(const Matrix& x, const std::vector<int>& y, double l2, int max_iterations,
                         const LinearModel* warm = nullptr);

/// F1 of class 1 for predictions p >= 0.5.
double f1_score(const LinearModel& model, const Matrix& x, const std::vector<int>& y);

/// RFE over benign vs. the union of `attacks` (labels collapsed to 0/1).
FeatureRanking rfe(const DatasetSplit& split, const std::vector<ClassId>& attacks, const RfeOptions& options);

/// Single attack vs. benign.
FeatureRanking rfe_single(const DatasetSplit& split, ClassId attack, const RfeOptions& options);

/// Both attacks labelled as attack vs. benign.
FeatureRanking rfe_pair(const DatasetSplit& split, ClassId attack_a, ClassId attack_b, const RfeOptions& options);

struct FeatureOverlap {
  std::vector<std::size_t> common;  // ascending
  double ratio = 0.0;               // |common| / |union|; 1 when both sets are empty
};

FeatureOverlap common_features(const FeatureRanking& a, const FeatureRanking& b);

}  // namespace atx
