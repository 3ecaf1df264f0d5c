#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "atx/ingest.hpp"
#include "atx/schema.hpp"

namespace atx {

/// Row-major sample matrix: one row per record, one column per feature.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-feature z-score parameters fit on a training partition.
struct Standardizer {
  FeatureVector mean{};
  FeatureVector scale{};                    // strictly positive
  std::array<bool, kFeatureCount> constant{};  // zero-variance columns (scale forced to 1)

  FeatureVector apply(const FeatureVector& x) const;
  std::size_t constant_count() const;
};

/// Fit on the records selected by `subset` (all records when empty). The
/// subset must be nonempty after selection.
Standardizer standardize_fit(std::span<const FlowRecord> records);
Standardizer standardize_fit(const RecordSet& records, std::span<const std::size_t> subset);
RecordSet standardize_apply(const Standardizer& s, std::span<const FlowRecord> records);

// Stream transforms operate along rows (time) of a sample matrix. Length and
// width are preserved.

/// y_t = x_t - x_{t-1}; y_0 is the zero vector.
Matrix differential(const Matrix& x);

/// y_t = mean of x_{t-n+1..t}; the first n-1 outputs average the available prefix.
Matrix temporal_average(const Matrix& x, int window_n);

/// DCT-I along the rows of each column:
///   y_t = x_0 + (-1)^t x_{N-1} + 2 sum_{n=1}^{N-2} x_n cos(pi t n / (N-1)).
/// Requires N = x.rows() >= 2.
Matrix dct_batch(const Matrix& x);

/// DCT-I of a batch shorter than `length`: rows are padded by repeating the
/// final row up to `length`, transformed, then truncated back.
Matrix dct_batch_padded(const Matrix& x, int length);

enum class TransformKind { kNone, kDifferential, kTemporalAverage, kDct };
enum class TransformScope { kStream, kBatch };

struct TransformSpec {
  TransformKind kind = TransformKind::kNone;
  int window_n = 1;

  TransformScope scope() const { return kind == TransformKind::kDct ? TransformScope::kBatch : TransformScope::kStream; }
  void validate() const;
  /// Short config label: none, diff, tavg, dct.
  std::string label() const;

  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

TransformKind parse_transform_kind(std::string_view text);
std::string_view transform_label(TransformKind kind);

/// Standardizes every record with `scaler`, then applies a stream-scoped
/// transform in capture order over the whole record set. Batch-scoped kinds
/// (DCT) are left to the trainer. Partition membership is unchanged.
DatasetSplit prepare_split(const DatasetSplit& split, const TransformSpec& spec, const Standardizer& scaler);

/// Converts records to a sample matrix (no scaling).
Matrix to_matrix(std::span<const FlowRecord> records);
Matrix to_matrix(const RecordSet& records, std::span<const std::size_t> subset);

}  // namespace atx
