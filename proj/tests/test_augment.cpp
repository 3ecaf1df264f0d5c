#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "atx/augment.hpp"
#include "atx/error.hpp"
#include "atx/rng.hpp"
#include "test_util.hpp"

using namespace atx;

namespace {

RecordSet planar_points(std::uint64_t seed, std::size_t n, ClassId label = 3) {
  Rng rng(seed);
  RecordSet rs(n);
  for (auto& r : rs) {
    r.label = label;
    r.features[0] = 100.0 * rng.uniform();
    r.features[1] = 5.0 * rng.uniform();
  }
  return rs;
}

// Reference kNN over independently standardized 2-D coordinates.
std::vector<std::vector<std::size_t>> oracle_knn(const RecordSet& rs, int k) {
  const auto n = rs.size();
  double m[2] = {0, 0}, sd[2] = {0, 0};
  for (const auto& r : rs) {
    m[0] += r.features[0] / n;
    m[1] += r.features[1] / n;
  }
  for (const auto& r : rs) {
    sd[0] += (r.features[0] - m[0]) * (r.features[0] - m[0]) / n;
    sd[1] += (r.features[1] - m[1]) * (r.features[1] - m[1]) / n;
  }
  sd[0] = std::sqrt(sd[0]);
  sd[1] = std::sqrt(sd[1]);
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double a = (rs[i].features[0] - rs[j].features[0]) / sd[0];
      const double b = (rs[i].features[1] - rs[j].features[1]) / sd[1];
      d.emplace_back(a * a + b * b, j);
    }
    std::sort(d.begin(), d.end());
    for (int q = 0; q < k; ++q) out[i].push_back(d[static_cast<std::size_t>(q)].second);
  }
  return out;
}

bool on_segment(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return std::abs(px - ax) < 1e-9 && std::abs(py - ay) < 1e-9;
  const double t = ((px - ax) * dx + (py - ay) * dy) / len2;
  if (t < -1e-12 || t > 1 + 1e-12) return false;
  const double cx = ax + t * dx - px, cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy) <= 1e-9 * (1.0 + std::sqrt(len2));
}

DatasetSplit imbalanced_split(std::size_t benign, std::size_t attack, std::uint64_t seed) {
  Rng rng(seed);
  RecordSet rs;
  for (std::size_t i = 0; i < benign + attack; ++i) {
    FlowRecord r;
    r.label = i < benign ? kBenign : 4;
    for (auto& v : r.features) v = rng.normal(r.label == kBenign ? 0.0 : 2.0, 1.0);
    rs.push_back(r);
  }
  return atx::testing::split_records(std::move(rs), seed);
}

}  // namespace

TEST(Smote, EverySamplePassesBruteForceSegmentCheck) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pts = planar_points(seed, 50);
    const auto scaler = standardize_fit(pts);
    const auto knn = oracle_knn(pts, 5);
    const auto synth = smote_generate(pts, 5, 400, seed + 1000, &scaler);
    ASSERT_EQ(synth.size(), 400u);
    for (const auto& s : synth) {
      EXPECT_EQ(s.label, 3);
      bool found = false;
      for (std::size_t i = 0; i < pts.size() && !found; ++i) {
        for (auto j : knn[i]) {
          if (on_segment(s.features[0], s.features[1], pts[i].features[0], pts[i].features[1], pts[j].features[0],
                         pts[j].features[1])) {
            found = true;
            break;
          }
        }
      }
      ASSERT_TRUE(found) << "synthetic point (" << s.features[0] << ", " << s.features[1]
                         << ") lies on no base-neighbor segment";
      for (std::size_t f = 2; f < kFeatureCount; ++f) ASSERT_EQ(s.features[f], 0.0);
    }
  }
}

TEST(Smote, NeighborsMatchOracleAndOriginsAreConsistent) {
  const auto pts = planar_points(21, 50);
  const auto scaler = standardize_fit(pts);
  const auto knn = oracle_knn(pts, 5);
  const Matrix raw = to_matrix(pts);
  const Matrix metric = to_matrix(standardize_apply(scaler, pts));
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(nearest_neighbors(metric, i, 5), knn[i]);

  const auto s = smote_points(raw, metric, 5, 200, 9);
  for (Eigen::Index r = 0; r < s.points.rows(); ++r) {
    const auto& o = s.origins[static_cast<std::size_t>(r)];
    const auto& nb = knn[o.base];
    EXPECT_NE(std::find(nb.begin(), nb.end(), o.neighbor), nb.end());
    EXPECT_GE(o.weight, 0.0);
    EXPECT_LE(o.weight, 1.0);
    const Eigen::RowVectorXd expect =
        raw.row(static_cast<Eigen::Index>(o.base)) +
        o.weight * (raw.row(static_cast<Eigen::Index>(o.neighbor)) - raw.row(static_cast<Eigen::Index>(o.base)));
    EXPECT_LT((s.points.row(r) - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Smote, DuplicatePointsReproduceThemselves) {
  RecordSet pts(2);
  pts[0].features.fill(3.5);
  pts[1].features.fill(3.5);
  for (const auto& s : smote_generate(pts, 1, 10, 1)) EXPECT_EQ(s.features, pts[0].features);
}

TEST(Smote, ZeroCountAndInsufficientSamples) {
  const auto pts = planar_points(1, 5, 9);
  EXPECT_TRUE(smote_generate(pts, 5, 0, 1).empty());
  try {
    smote_generate(pts, 5, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("class 9"), std::string::npos) << e.what();
  }
}

TEST(Smote, DeterministicForSeed) {
  const auto pts = planar_points(2, 30);
  EXPECT_EQ(smote_generate(pts, 3, 50, 8), smote_generate(pts, 3, 50, 8));
  EXPECT_NE(smote_generate(pts, 3, 50, 8), smote_generate(pts, 3, 50, 9));
}

TEST(Bootstrap, ClosureAndCount) {
  const auto pts = planar_points(4, 37);
  const auto out = bootstrap_resample(pts, 500, 3);
  ASSERT_EQ(out.size(), 500u);
  for (const auto& r : out) EXPECT_NE(std::find(pts.begin(), pts.end(), r), pts.end());
  EXPECT_THROW(bootstrap_resample(RecordSet{}, 5, 1), Error);
}

TEST(BinaryTrainset, BalancedForBootstrapAndSmote) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = imbalanced_split(400 + 37 * seed, 40 + 3 * seed, seed);
    const auto benign = s.indices_of(Partition::kTrain, kBenign).size();
    const auto source = s.gather(Partition::kTrain);
    for (auto mode : {AugmentMode::kBootstrap, AugmentMode::kSmote}) {
      AugmentPlan plan;
      plan.mode = mode;
      plan.seed = seed;
      const auto out = make_binary_trainset(s, 4, plan);
      std::size_t b = 0, a = 0;
      for (const auto& r : out) (r.label == 0 ? b : a)++;
      EXPECT_EQ(b, benign);
      EXPECT_EQ(a, benign) << augment_label(mode);
      if (mode == AugmentMode::kBootstrap) {
        for (const auto& r : out) {
          if (r.label != 1) continue;
          const bool present = std::any_of(source.begin(), source.end(), [&](const FlowRecord& x) {
            return x.label == 4 && x.features == r.features;
          });
          ASSERT_TRUE(present);
        }
      }
    }
  }
}

TEST(BinaryTrainset, RealModeKeepsTheImbalance) {
  const auto s = imbalanced_split(300, 30, 1);
  AugmentPlan plan;
  const auto out = make_binary_trainset(s, 4, plan);
  std::size_t a = 0;
  for (const auto& r : out) a += r.label == 1;
  EXPECT_EQ(a, s.indices_of(Partition::kTrain, 4).size());
  EXPECT_EQ(out.size(), s.train.size());
}

TEST(BinaryTrainset, SmoteAboveTargetSubsamplesRealRecords) {
  const auto s = imbalanced_split(50, 200, 2);
  AugmentPlan plan;
  plan.mode = AugmentMode::kSmote;
  const auto out = make_binary_trainset(s, 4, plan);
  const auto source = s.gather(Partition::kTrain);
  std::size_t a = 0;
  for (const auto& r : out) {
    if (r.label != 1) continue;
    ++a;
    EXPECT_TRUE(std::any_of(source.begin(), source.end(), [&](const FlowRecord& x) { return x.features == r.features; }));
  }
  EXPECT_EQ(a, s.indices_of(Partition::kTrain, kBenign).size());
}

TEST(BinaryTrainset, Errors) {
  const auto s = imbalanced_split(100, 20, 3);
  AugmentPlan plan;
  EXPECT_THROW(make_binary_trainset(s, 0, plan), Error);
  try {
    make_binary_trainset(s, 7, plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("empty class"), std::string::npos);
  }
  plan.k_neighbors = 0;
  plan.mode = AugmentMode::kSmote;
  EXPECT_THROW(make_binary_trainset(s, 4, plan), Error);
  EXPECT_EQ(parse_augment_mode("SMOTE"), AugmentMode::kSmote);
  EXPECT_THROW(parse_augment_mode("gan"), Error);
}

TEST(BinarySubset, CollapsesLabelsKeepingOrder) {
  const auto s = imbalanced_split(60, 20, 4);
  const std::vector<ClassId> attacks = {4};
  const auto test = binary_subset(s, Partition::kTest, attacks);
  ASSERT_EQ(test.size(), s.test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    EXPECT_EQ(test[i].label, (*s.records)[s.test[i]].label == kBenign ? 0 : 1);
    EXPECT_EQ(test[i].features, (*s.records)[s.test[i]].features);
  }
}
