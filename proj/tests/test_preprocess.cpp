#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "atx/error.hpp"
#include "atx/preprocess.hpp"
#include "atx/rng.hpp"
#include "test_util.hpp"

using namespace atx;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal(0, sd);
  }
  return m;
}

// Direct evaluation of the DCT-I sum, one output element at a time.
Matrix naive_dct(const Matrix& x) {
  const auto n = x.rows();
  Matrix y(n, x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index t = 0; t < n; ++t) {
      double s = x(0, c) + ((t % 2) ? -1.0 : 1.0) * x(n - 1, c);
      for (Eigen::Index k = 1; k <= n - 2; ++k) {
        s += 2.0 * x(k, c) * std::cos(std::numbers::pi * static_cast<double>(t * k) / static_cast<double>(n - 1));
      }
      y(t, c) = s;
    }
  }
  return y;
}

}  // namespace

TEST(Standardizer, FitSetHasZeroMeanUnitVariance) {
  Rng rng(5);
  RecordSet rs(500);
  for (auto& r : rs) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) r.features[f] = rng.normal(1e5 * f, 1.0 + 1e3 * f);
  }
  const auto s = standardize_fit(rs);
  const auto z = to_matrix(standardize_apply(s, rs));
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::RowVectorXd var = (z.rowwise() - mean).array().square().colwise().mean();
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    EXPECT_NEAR(mean(c), 0.0, 1e-9);
    EXPECT_NEAR(var(c), 1.0, 1e-9);
  }
}

TEST(Standardizer, ConstantColumnIsFlaggedAndZeroed) {
  RecordSet rs(20);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i].features.fill(static_cast<double>(i));
    rs[i].features[7] = 42.0;
  }
  const auto s = standardize_fit(rs);
  EXPECT_TRUE(s.constant[7]);
  EXPECT_EQ(s.constant_count(), 1u);
  EXPECT_EQ(s.scale[7], 1.0);
  for (const auto& r : standardize_apply(s, rs)) EXPECT_EQ(r.features[7], 0.0);
}

TEST(Standardizer, HeldOutDataUsesTrainStatistics) {
  RecordSet rs(10);
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i].features.fill(i < 5 ? static_cast<double>(i) : 1000.0 + i);
  const std::vector<std::size_t> train = {0, 1, 2, 3, 4};
  const auto s = standardize_fit(rs, train);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.scale[0], std::sqrt(2.0));
  const auto held = s.apply(rs[9].features);
  EXPECT_DOUBLE_EQ(held[0], (1009.0 - 2.0) / std::sqrt(2.0));
}

TEST(Differential, HandComputedExample) {
  const auto y = differential(column({1, 4, 9}));
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_EQ(y(1, 0), 3.0);
  EXPECT_EQ(y(2, 0), 5.0);
  EXPECT_EQ(differential(Matrix(0, 3)).rows(), 0);
  EXPECT_TRUE(differential(Matrix::Constant(6, 4, 2.5)).isZero(0.0));
}

TEST(Differential, PrefixSumReconstructsIntegerStreamsExactly) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(1 + rng.index(300));
    Matrix x(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = static_cast<double>(rng.index(2'000'000)) - 1e6;
    }
    const Matrix y = differential(x);
    Matrix r(n, 5);
    r.row(0) = x.row(0) + y.row(0);
    for (Eigen::Index t = 1; t < n; ++t) r.row(t) = r.row(t - 1) + y.row(t);
    ASSERT_TRUE(r == x) << "seed " << seed;
  }
}

TEST(Differential, PrefixSumReconstructsRealStreamsToRounding) {
  Rng rng(77);
  const Matrix x = random_matrix(rng, 500, 3, 10.0);
  const Matrix y = differential(x);
  Matrix r(500, 3);
  r.row(0) = x.row(0) + y.row(0);
  for (Eigen::Index t = 1; t < 500; ++t) r.row(t) = r.row(t - 1) + y.row(t);
  EXPECT_LT((r - x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TemporalAverage, PartialPrefixWindow) {
  const auto y = temporal_average(column({0, 3, 6}), 2);
  EXPECT_DOUBLE_EQ(y(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(y(1, 0), 1.5);
  EXPECT_DOUBLE_EQ(y(2, 0), 4.5);
}

TEST(TemporalAverage, IdentityAndFixedPoint) {
  Rng rng(3);
  const Matrix x = random_matrix(rng, 40, 6);
  EXPECT_TRUE(temporal_average(x, 1) == x);
  const Matrix c = Matrix::Constant(30, 2, -1.25);
  for (int n : {1, 2, 5, 50}) EXPECT_TRUE(temporal_average(c, n).isApprox(c, 1e-15));
  EXPECT_THROW(temporal_average(x, 0), Error);
}

TEST(TemporalAverage, OutputWithinWindowRange) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(1 + rng.index(100));
    const int w = 1 + static_cast<int>(rng.index(12));
    const Matrix x = random_matrix(rng, n, 3, 100.0);
    const Matrix y = temporal_average(x, w);
    ASSERT_EQ(y.rows(), n);
    for (Eigen::Index t = 0; t < n; ++t) {
      const Eigen::Index first = std::max<Eigen::Index>(0, t - w + 1);
      for (Eigen::Index c = 0; c < 3; ++c) {
        const auto win = x.block(first, c, t - first + 1, 1);
        ASSERT_GE(y(t, c), win.minCoeff() - 1e-9);
        ASSERT_LE(y(t, c), win.maxCoeff() + 1e-9);
      }
    }
  }
}

TEST(Dct, MatchesDirectFormulaForAllSmallSizes) {
  Rng rng(11);
  for (Eigen::Index n = 2; n <= 64; ++n) {
    const Matrix x = random_matrix(rng, n, 4);
    const Matrix fast = dct_batch(x);
    const Matrix slow = naive_dct(x);
    ASSERT_EQ(fast.rows(), n);
    EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-9) << "N=" << n;
  }
}

TEST(Dct, ConstantInputConcentratesInFirstCoefficient) {
  for (Eigen::Index n : {2, 4, 17, 64}) {
    const double c = 1.75;
    const Matrix y = dct_batch(Matrix::Constant(n, 3, c));
    for (Eigen::Index j = 0; j < 3; ++j) {
      EXPECT_NEAR(y(0, j), 2.0 * static_cast<double>(n - 1) * c, 1e-9);
      for (Eigen::Index t = 1; t < n; ++t) EXPECT_NEAR(y(t, j), 0.0, 1e-9) << "N=" << n << " t=" << t;
    }
  }
}

TEST(Dct, IsLinear) {
  Rng rng(2);
  const Matrix x = random_matrix(rng, 33, 5), z = random_matrix(rng, 33, 5);
  const double a = 0.7, b = -2.5;
  EXPECT_LT((dct_batch(a * x + b * z) - (a * dct_batch(x) + b * dct_batch(z))).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dct, RejectsSingleRowAndPadsShortBatches) {
  EXPECT_THROW(dct_batch(Matrix::Ones(1, 3)), Error);
  Rng rng(4);
  const Matrix x = random_matrix(rng, 5, 2);
  // Padding repeats the last row up to the target length, then truncates.
  Matrix padded(8, 2);
  padded.topRows(5) = x;
  for (int i = 5; i < 8; ++i) padded.row(i) = x.row(4);
  const Matrix expected = naive_dct(padded).topRows(5);
  EXPECT_LT((dct_batch_padded(x, 8) - expected).cwiseAbs().maxCoeff(), 1e-9);
  const Matrix one = random_matrix(rng, 1, 2);
  EXPECT_EQ(dct_batch_padded(one, 4).rows(), 1);
}

TEST(TransformSpec, ScopeAndValidation) {
  EXPECT_EQ((TransformSpec{TransformKind::kDct, 1}).scope(), TransformScope::kBatch);
  EXPECT_EQ((TransformSpec{TransformKind::kTemporalAverage, 3}).scope(), TransformScope::kStream);
  EXPECT_EQ((TransformSpec{TransformKind::kDifferential, 1}).scope(), TransformScope::kStream);
  EXPECT_THROW((TransformSpec{TransformKind::kTemporalAverage, 0}).validate(), Error);
  EXPECT_EQ(parse_transform_kind("tavg"), TransformKind::kTemporalAverage);
  EXPECT_EQ(parse_transform_kind("DCT"), TransformKind::kDct);
  EXPECT_THROW(parse_transform_kind("fft"), Error);
}

TEST(PrepareSplit, PreservesShapeAndMembership) {
  Rng rng(8);
  RecordSet rs(200);
  for (auto& r : rs) {
    r.label = static_cast<ClassId>(rng.index(3));
    for (auto& v : r.features) v = rng.normal(5, 2);
  }
  const auto s = atx::testing::split_records(rs, 3);
  const auto scaler = standardize_fit(*s.records, s.train);
  for (auto kind : {TransformKind::kNone, TransformKind::kDifferential, TransformKind::kTemporalAverage,
                    TransformKind::kDct}) {
    const auto p = prepare_split(s, {kind, kind == TransformKind::kTemporalAverage ? 4 : 1}, scaler);
    ASSERT_EQ(p.records->size(), rs.size());
    EXPECT_EQ(p.train, s.train);
    EXPECT_EQ(p.test, s.test);
    for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_EQ((*p.records)[i].label, rs[i].label);
  }
  // With kNone the records are just the standardized stream.
  const auto p = prepare_split(s, {}, scaler);
  EXPECT_EQ((*p.records)[17].features, scaler.apply(rs[17].features));
}
