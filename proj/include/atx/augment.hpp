#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atx/ingest.hpp"
#include "atx/preprocess.hpp"

namespace atx {

enum class AugmentMode { kReal, kBootstrap, kSmote };

AugmentMode parse_augment_mode(std::string_view text);
std::string_view augment_label(AugmentMode mode);

struct AugmentPlan {
  AugmentMode mode = AugmentMode::kReal;
  int k_neighbors = 5;
  /// Attack-side size after augmentation; unset means "match the benign count".
  std::optional<std::size_t> target_attack_count;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Provenance of one SMOTE sample: base row, the neighbor it moved towards,
/// and the interpolation weight.
struct SmoteOrigin {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double weight = 0.0;
};

struct SmoteSamples {
  Matrix points;                    // one synthetic row per sample
  std::vector<SmoteOrigin> origins;  // parallel to rows of `points`
};

/// k nearest neighbors (excluding the row itself) of row `i`, Euclidean
/// distance, ties broken by lower row index.
std::vector<std::size_t> nearest_neighbors(const Matrix& points, std::size_t i, int k);

/// Core SMOTE over raw points. Neighbor search runs on `metric_space`
/// (same shape as `points`, e.g. the standardized copy); interpolation uses
/// `points`. Each sample is x + u * (x' - x) for a uniformly chosen base row
/// x, one of its k nearest neighbors x', and u uniform in [0, 1].
SmoteSamples smote_points(const Matrix& points, const Matrix& metric_space, int k, std::size_t count,
                          std::uint64_t seed);

/// SMOTE over flow records of one class. Distances use `scaler`
/// standardized features when given. Throws a data error naming the class
/// when fewer than k + 1 records are available.
RecordSet smote_generate(std::span<const FlowRecord> attack_records, int k, std::size_t count, std::uint64_t seed,
                         const Standardizer* scaler = nullptr);

/// `count` uniform draws with replacement.
RecordSet bootstrap_resample(std::span<const FlowRecord> attack_records, std::size_t count, std::uint64_t seed);

/// Binary training set from the training partition: all benign records
/// (label 0) plus `attack_class` records (label 1), augmented per `plan`,
/// shuffled by plan.seed. For SMOTE, `scaler` defines the metric space; when
/// null one is fit on the training partition.
RecordSet make_binary_trainset(const DatasetSplit& split, ClassId attack_class, const AugmentPlan& plan,
                               const Standardizer* scaler = nullptr);

/// Labels collapsed to {benign=0, attack=1} for the given partition,
/// keeping benign and the listed attacks only. Order follows the partition.
RecordSet binary_subset(const DatasetSplit& split, Partition part, std::span<const ClassId> attacks);

}  // namespace atx
