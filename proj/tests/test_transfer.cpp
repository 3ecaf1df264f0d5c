#include <gtest/gtest.h>

#include <set>

#include "atx/error.hpp"
#include "atx/rng.hpp"
#include "atx/transfer.hpp"
#include "transfer_fixture.hpp"

using namespace atx;
using namespace atx::testing;

namespace {

TransferSettings settings(AugmentMode mode = AugmentMode::kReal, TransformSpec t = {}) {
  TransferSettings s;
  s.plan.mode = mode;
  s.transform = t;
  s.model = small_model(6);
  s.seed = 11;
  return s;
}

TransferMatrix random_matrix(Rng& rng, std::size_t n) {
  TransferMatrix m;
  for (std::size_t i = 0; i < n; ++i) m.attacks.push_back(static_cast<ClassId>(i + 1));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      TransferCellResult cell;
      cell.train_attack = m.attacks[r];
      cell.test_attack = m.attacks[c];
      cell.status = r == c ? CellStatus::kPlaceholder : CellStatus::kOk;
      cell.attack_recall = rng.uniform();
      m.cells.push_back(cell);
    }
  }
  return m;
}

std::set<std::pair<ClassId, ClassId>> transferring_pairs(const std::vector<TransferRelation>& rel) {
  std::set<std::pair<ClassId, ClassId>> out;
  for (const auto& r : rel) {
    if (r.transfers(r.first, r.second)) out.insert({r.first, r.second});
    if (r.transfers(r.second, r.first)) out.insert({r.second, r.first});
  }
  return out;
}

}  // namespace

TEST(Transfer, ConstructedPairsBehaveAsBuilt) {
  const auto s = transfer_split();
  const auto twin = run_cell(s, kSource, kTwin, settings());
  const auto opposite = run_cell(s, kSource, kOpposite, settings());
  EXPECT_EQ(twin.status, CellStatus::kOk);
  EXPECT_GE(twin.attack_recall, 0.95);
  EXPECT_LE(opposite.attack_recall, 0.55);
  EXPECT_GE(twin.benign_recall, 0.9);
  EXPECT_GT(twin.test_benign, 0u);
  EXPECT_EQ(twin.test_attack_count, s.indices_of(Partition::kTest, kTwin).size());
}

TEST(Transfer, MatrixShapeDiagonalAndRunCellAgreement) {
  const auto s = transfer_split();
  const std::vector<ClassId> attacks = {kSource, kTwin, kOpposite};
  const auto m = build_matrix(s, attacks, settings(AugmentMode::kBootstrap));
  ASSERT_EQ(m.cells.size(), 9u);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(m.at(r, c).status, r == c ? CellStatus::kPlaceholder : CellStatus::kOk);
      EXPECT_EQ(m.at(r, c).train_attack, attacks[r]);
      EXPECT_EQ(m.at(r, c).test_attack, attacks[c]);
    }
  }
  const auto cell = run_cell(s, kTwin, kOpposite, settings(AugmentMode::kBootstrap));
  EXPECT_EQ(cell.attack_recall, m.find(kTwin, kOpposite)->attack_recall);
  EXPECT_EQ(cell.benign_recall, m.find(kTwin, kOpposite)->benign_recall);
  // Bootstrap rows train on balanced data.
  EXPECT_EQ(m.at(0, 1).train_attack_count, m.at(0, 1).train_benign);
}

TEST(Transfer, NAttackShape) {
  // Any n >= 2 attacks gives an n x n grid with n placeholders.
  RecordSet rs = transfer_records(400, 60, 2.0, 3);
  auto extra = gaussian_clusters({{10, 60, {}, 1.0}, {12, 60, {}, 1.0}}, 4);
  rs.insert(rs.end(), extra.begin(), extra.end());
  const auto s = split_records(rs, 2);
  const std::vector<ClassId> attacks = {kSource, kTwin, kOpposite, 10, 12};
  auto st = settings();
  st.model.epochs = 1;
  const auto m = build_matrix(s, attacks, st);
  EXPECT_EQ(m.cells.size(), 25u);
  std::size_t placeholders = 0;
  for (const auto& c : m.cells) placeholders += c.status == CellStatus::kPlaceholder;
  EXPECT_EQ(placeholders, 5u);
  EXPECT_EQ(m.failed_count(), 0u);
}

TEST(Transfer, ThreadCountDoesNotChangeResults) {
  const auto s = transfer_split(7);
  const std::vector<ClassId> attacks = {kSource, kTwin, kOpposite};
  auto st = settings(AugmentMode::kSmote);
  st.model.epochs = 2;
  const auto one = build_matrix(s, attacks, st, 1);
  const auto three = build_matrix(s, attacks, st, 3);
  for (std::size_t i = 0; i < one.cells.size(); ++i) {
    EXPECT_EQ(one.cells[i].attack_recall, three.cells[i].attack_recall);
    EXPECT_EQ(one.cells[i].status, three.cells[i].status);
  }
}

TEST(Transfer, FilterComputesOnlySelectedCells) {
  const auto s = transfer_split();
  auto st = settings();
  st.model.epochs = 1;
  const auto m = build_matrix(s, {kSource, kTwin, kOpposite}, st, 1, CellFilter{{kSource, kOpposite}});
  for (const auto& c : m.cells) {
    if (c.train_attack == c.test_attack) continue;
    const bool selected = c.train_attack == kSource && c.test_attack == kOpposite;
    EXPECT_EQ(c.status, selected ? CellStatus::kOk : CellStatus::kNotRun);
  }
}

TEST(Transfer, MissingTestClassFailsOnlyItsCells) {
  // Class 9 has two records: both go to the training partition, so its
  // column has nothing to test on.
  RecordSet rs = transfer_records(400, 60, 2.0, 3);
  auto rare = gaussian_clusters({{9, 2, {}, 1.0}}, 8);
  rs.insert(rs.end(), rare.begin(), rare.end());
  const auto s = split_records(rs, 2);
  auto st = settings();
  st.model.epochs = 1;
  const auto m = build_matrix(s, {kSource, 9}, st);
  EXPECT_EQ(m.find(kSource, 9)->status, CellStatus::kFailed);
  EXPECT_NE(m.find(kSource, 9)->error.find("empty class"), std::string::npos);
  EXPECT_EQ(m.find(9, kSource)->status, CellStatus::kOk);
}

TEST(Transfer, RejectsDiagonalBenignAndShortLists) {
  const auto s = transfer_split();
  EXPECT_THROW(run_cell(s, kSource, kSource, settings()), Error);
  EXPECT_THROW(run_cell(s, kBenign, kSource, settings()), Error);
  EXPECT_THROW(run_cell(s, kSource, 11, settings()), Error);
  EXPECT_THROW(build_matrix(s, {kSource}, settings()), Error);
  EXPECT_THROW(build_matrix(s, {kSource, kSource}, settings()), Error);
  EXPECT_EQ(default_attacks().size(), 11u);
}

TEST(Relations, DirectionsFromHandBuiltMatrix) {
  Rng rng(1);
  auto m = random_matrix(rng, 3);  // attacks 1, 2, 3
  auto set = [&](ClassId i, ClassId j, double v) {
    for (auto& c : m.cells) {
      if (c.train_attack == i && c.test_attack == j) c.attack_recall = v;
    }
  };
  set(1, 2, 0.9);
  set(2, 1, 0.9);
  set(1, 3, 0.2);
  set(3, 1, 0.8);
  set(2, 3, 0.75);
  set(3, 2, 0.1);
  const auto rel = classify_relations(m, 0.7);
  ASSERT_EQ(rel.size(), 3u);
  EXPECT_EQ(rel[0], (TransferRelation{1, 2, Direction::kBoth, 0.7}));
  EXPECT_EQ(rel[1], (TransferRelation{1, 3, Direction::kBackward, 0.7}));
  EXPECT_EQ(rel[2], (TransferRelation{2, 3, Direction::kForward, 0.7}));
  EXPECT_TRUE(rel[1].transfers(3, 1));
  EXPECT_FALSE(rel[1].transfers(1, 3));
  EXPECT_THROW(classify_relations(m, 1.0), Error);
  EXPECT_THROW(classify_relations(m, 0.0), Error);
}

TEST(Relations, MonotoneInThreshold) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto m = random_matrix(rng, 2 + rng.index(8));
    double lo = 0.01 + 0.98 * rng.uniform(), hi = 0.01 + 0.98 * rng.uniform();
    if (lo > hi) std::swap(lo, hi);
    const auto strict = transferring_pairs(classify_relations(m, hi));
    const auto loose = transferring_pairs(classify_relations(m, lo));
    for (const auto& p : strict) ASSERT_TRUE(loose.contains(p)) << "seed " << seed;
  }
}

TEST(Relations, IgnoresFailedAndUnrunCells) {
  Rng rng(2);
  auto m = random_matrix(rng, 2);
  for (auto& c : m.cells) {
    c.attack_recall = 1.0;
    if (c.train_attack != c.test_attack) c.status = CellStatus::kFailed;
  }
  EXPECT_TRUE(classify_relations(m, 0.5).empty());
}
