#include "atx/preprocess.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "atx/error.hpp"

namespace atx {

namespace {

Standardizer fit_rows(const auto& rows) {
  Standardizer s;
  std::size_t n = 0;
  FeatureVector sum{};
  for (const FlowRecord& r : rows) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) sum[c] += r.features[c];
    ++n;
  }
  if (n == 0) throw data_error("standardizer: cannot fit on an empty record set");
  for (std::size_t c = 0; c < kFeatureCount; ++c) s.mean[c] = sum[c] / static_cast<double>(n);
  FeatureVector sq{};
  for (const FlowRecord& r : rows) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const double d = r.features[c] - s.mean[c];
      sq[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const double sd = std::sqrt(sq[c] / static_cast<double>(n));
    // Relative floor: a column whose spread is rounding noise counts as constant.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(s.mean[c])))) {
      s.scale[c] = 1.0;
      s.constant[c] = true;
    } else {
      s.scale[c] = sd;
    }
  }
  return s;
}

struct SubsetView {
  const RecordSet& records;
  std::span<const std::size_t> subset;

  struct Iter {
    const RecordSet* records;
    const std::size_t* pos;
    const FlowRecord& operator*() const { return (*records)[*pos]; }
    Iter& operator++() {
      ++pos;
      return *this;
    }
    bool operator!=(const Iter& o) const { return pos != o.pos; }
  };
  Iter begin() const { return {&records, subset.data()}; }
  Iter end() const { return {&records, subset.data() + subset.size()}; }
};

// cos(pi * t * n / (N - 1)) with the argument reduced mod 2(N-1) in integers.
Matrix dct_matrix(Eigen::Index length) {
  const Eigen::Index m = length - 1;
  Matrix c(length, length);
  for (Eigen::Index t = 0; t < length; ++t) {
    for (Eigen::Index n = 0; n < length; ++n) {
      const Eigen::Index k = (t * n) % (2 * m);
      const double w = (n == 0 || n == m) ? 1.0 : 2.0;
      c(t, n) = w * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(m));
    }
  }
  return c;
}

const Matrix& cached_dct_matrix(Eigen::Index length) {
  thread_local std::map<Eigen::Index, Matrix> cache;
  auto it = cache.find(length);
  if (it == cache.end()) it = cache.emplace(length, dct_matrix(length)).first;
  return it->second;
}

}  // namespace

FeatureVector Standardizer::apply(const FeatureVector& x) const {
  FeatureVector y;
  for (std::size_t c = 0; c < kFeatureCount; ++c) y[c] = (x[c] - mean[c]) / scale[c];
  return y;
}

std::size_t Standardizer::constant_count() const {
  return static_cast<std::size_t>(std::count(constant.begin(), constant.end(), true));
}

Standardizer standardize_fit(std::span<const FlowRecord> records) { return fit_rows(records); }

Standardizer standardize_fit(const RecordSet& records, std::span<const std::size_t> subset) {
  return fit_rows(SubsetView{records, subset});
}

RecordSet standardize_apply(const Standardizer& s, std::span<const FlowRecord> records) {
  RecordSet out(records.begin(), records.end());
  for (auto& r : out) r.features = s.apply(r.features);
  return out;
}

Matrix differential(const Matrix& x) {
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index t = 1; t < x.rows(); ++t) y.row(t) = x.row(t) - x.row(t - 1);
  return y;
}

Matrix temporal_average(const Matrix& x, int window_n) {
  if (window_n < 1) throw config_error("temporal averaging window must be >= 1, got " + std::to_string(window_n));
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const Eigen::Index first = std::max<Eigen::Index>(0, t - window_n + 1);
    const Eigen::Index len = t - first + 1;
    // Direct window sum; a running sum would drift over millions of rows.
    y.row(t) = x.middleRows(first, len).colwise().sum() / static_cast<double>(len);
  }
  return y;
}

Matrix dct_batch(const Matrix& x) {
  if (x.rows() < 2) throw config_error("DCT batch too small: N=" + std::to_string(x.rows()) + ", need N >= 2");
  return cached_dct_matrix(x.rows()) * x;
}

Matrix dct_batch_padded(const Matrix& x, int length) {
  if (length < 2) throw config_error("DCT batch length must be >= 2, got " + std::to_string(length));
  if (x.rows() >= length) return dct_batch(x);
  if (x.rows() == 0) return x;
  Matrix padded(length, x.cols());
  padded.topRows(x.rows()) = x;
  for (Eigen::Index r = x.rows(); r < length; ++r) padded.row(r) = x.row(x.rows() - 1);
  return dct_batch(padded).topRows(x.rows());
}

void TransformSpec::validate() const {
  if (kind == TransformKind::kTemporalAverage && window_n < 1) {
    throw config_error("window_n must be >= 1 for temporal averaging");
  }
}

std::string TransformSpec::label() const { return std::string(transform_label(kind)); }

TransformKind parse_transform_kind(std::string_view raw) {
  const auto text = normalize_label(raw);
  if (text == "none") return TransformKind::kNone;
  if (text == "diff" || text == "differential") return TransformKind::kDifferential;
  if (text == "tavg" || text == "temporal average") return TransformKind::kTemporalAverage;
  if (text == "dct") return TransformKind::kDct;
  throw config_error("unknown transform '" + std::string(raw) + "' (expected none|diff|tavg|dct)");
}

std::string_view transform_label(TransformKind kind) {
  switch (kind) {
    case TransformKind::kNone:
      return "none";
    case TransformKind::kDifferential:
      return "diff";
    case TransformKind::kTemporalAverage:
      return "tavg";
    case TransformKind::kDct:
      break;
  }
  return "dct";
}

Matrix to_matrix(std::span<const FlowRecord> records) {
  Matrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < records.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(records[i].features.data(), kFeatureCount);
  }
  return m;
}

Matrix to_matrix(const RecordSet& records, std::span<const std::size_t> subset) {
  Matrix m(static_cast<Eigen::Index>(subset.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < subset.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(records[subset[i]].features.data(), kFeatureCount);
  }
  return m;
}

DatasetSplit prepare_split(const DatasetSplit& split, const TransformSpec& spec, const Standardizer& scaler) {
  spec.validate();
  auto scaled = standardize_apply(scaler, *split.records);
  if (spec.kind == TransformKind::kDifferential || spec.kind == TransformKind::kTemporalAverage) {
    Matrix x = to_matrix(scaled);
    Matrix y = spec.kind == TransformKind::kDifferential ? differential(x) : temporal_average(x, spec.window_n);
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        scaled[i].features[c] = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      }
    }
  }
  return split.with_records(std::make_shared<const RecordSet>(std::move(scaled)));
}

}  // namespace atx
