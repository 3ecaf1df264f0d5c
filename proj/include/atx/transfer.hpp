#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "atx/augment.hpp"
#include "atx/ingest.hpp"
#include "atx/nn.hpp"
#include "atx/preprocess.hpp"

namespace atx {

/// Attacks evaluated by default: every CICIDS attack except Heartbleed (8),
/// Infiltration (9) and Web Attack Sql Injection (13), which have too few
/// records.
std::vector<ClassId> default_attacks();

/// Everything that defines one transfer regime.
struct TransferSettings {
  AugmentPlan plan;
  TransformSpec transform;
  ModelConfig model;  // output_classes is forced to 2
  std::uint64_t seed = 0;
};

enum class CellStatus { kOk, kPlaceholder, kFailed, kNotRun };

std::string_view cell_status_label(CellStatus s);
CellStatus parse_cell_status(std::string_view text);

struct TransferCellResult {
  ClassId train_attack = 0;
  ClassId test_attack = 0;
  AugmentMode mode = AugmentMode::kReal;
  TransformSpec transform;
  CellStatus status = CellStatus::kNotRun;
  std::string error;  // set when status is kFailed
  double attack_recall = 0.0;
  double benign_recall = 0.0;
  std::size_t train_benign = 0;
  std::size_t train_attack_count = 0;
  std::size_t test_benign = 0;
  std::size_t test_attack_count = 0;
  std::uint64_t seed = 0;
};

/// Dense train-attack x test-attack grid; diagonal cells are placeholders.
struct TransferMatrix {
  std::vector<ClassId> attacks;
  AugmentMode mode = AugmentMode::kReal;
  TransformSpec transform;
  std::vector<TransferCellResult> cells;  // row-major over `attacks`

  const TransferCellResult& at(std::size_t row, std::size_t col) const { return cells[row * attacks.size() + col]; }
  TransferCellResult& at(std::size_t row, std::size_t col) { return cells[row * attacks.size() + col]; }
  /// Cell for an ordered (train, test) class pair; null if not in the grid.
  const TransferCellResult* find(ClassId train_attack, ClassId test_attack) const;
  std::size_t failed_count() const;
};

/// Seed shared by every cell of one training row. A row trains a single model
/// and evaluates it against each test attack.
std::uint64_t row_seed(const TransferSettings& s, ClassId train_attack);

/// Train a binary model on benign + `train_attack` (augmented and
/// transformed per settings) and test it on real benign + `test_attack`
/// records of the test partition. Rejects train_attack == test_attack.
TransferCellResult run_cell(const DatasetSplit& split, ClassId train_attack, ClassId test_attack,
                            const TransferSettings& settings);

/// Restricts which ordered (train, test) cells are computed. Empty = all.
using CellFilter = std::set<std::pair<ClassId, ClassId>>;

/// Computes every off-diagonal cell (or the filtered subset) with up to
/// `parallelism` worker threads. Results do not depend on the thread count.
TransferMatrix build_matrix(const DatasetSplit& split, const std::vector<ClassId>& attacks,
                            const TransferSettings& settings, int parallelism = 1, const CellFilter& filter = {});

enum class Direction { kForward, kBackward, kBoth };

/// Transfer between `first` < `second`. kForward: first -> second only;
/// kBackward: second -> first only; kBoth: symmetric.
struct TransferRelation {
  ClassId first = 0;
  ClassId second = 0;
  Direction direction = Direction::kForward;
  double threshold = 0.0;

  bool transfers(ClassId from, ClassId to) const;
  friend bool operator==(const TransferRelation&, const TransferRelation&) = default;
};

/// Ordered pair (i, j) transfers iff attack_recall(i -> j) >= threshold.
/// Pairs are merged into symmetric/asymmetric relations, sorted by (first, second).
std::vector<TransferRelation> classify_relations(const TransferMatrix& matrix, double threshold);

}  // namespace atx
