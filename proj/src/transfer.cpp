#include "atx/transfer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "atx/error.hpp"
#include "atx/rng.hpp"

namespace atx {

namespace {

// Prepared data and model for one training attack.
struct TrainedRow {
  ModelParams model;
  std::size_t train_benign = 0;
  std::size_t train_attack = 0;
};

BatchTransform batch_transform_for(const TransferSettings& s) {
  if (s.transform.kind != TransformKind::kDct) return {};
  const int n = s.model.batch_size;
  return [n](const Matrix& x) { return dct_batch_padded(x, n); };
}

DatasetSplit prepare(const DatasetSplit& split, const TransferSettings& s) {
  const auto scaler = standardize_fit(*split.records, split.train);
  return prepare_split(split, s.transform, scaler);
}

TrainedRow train_row(const DatasetSplit& prepared, ClassId train_attack, const TransferSettings& s) {
  const auto seed = row_seed(s, train_attack);
  AugmentPlan plan = s.plan;
  plan.seed = seed;
  const auto train_records = make_binary_trainset(prepared, train_attack, plan);
  const std::vector<ClassId> attack{train_attack};
  const auto val_records = binary_subset(prepared, Partition::kValidation, attack);

  ModelConfig cfg = s.model;
  cfg.output_classes = 2;
  cfg.input_dim = static_cast<int>(kFeatureCount);
  cfg.seed = seed;

  TrainedRow row;
  for (const auto& r : train_records) (r.label == 0 ? row.train_benign : row.train_attack)++;
  row.model = train(cfg, to_labeled(train_records), to_labeled(val_records), batch_transform_for(s));
  return row;
}

void evaluate_cell(const DatasetSplit& prepared, const TrainedRow& row, const TransferSettings& s,
                   TransferCellResult& cell) {
  const std::vector<ClassId> attack{cell.test_attack};
  const auto test_records = binary_subset(prepared, Partition::kTest, attack);
  const auto data = to_labeled(test_records);
  for (int y : data.y) (y == 0 ? cell.test_benign : cell.test_attack_count)++;
  if (cell.test_attack_count == 0) {
    throw data_error("empty class: attack class " + std::to_string(cell.test_attack) + " absent from test partition");
  }
  const auto result = evaluate(row.model, data, batch_transform_for(s));
  cell.attack_recall = result.attack_recall();
  cell.benign_recall = result.benign_recall();
  cell.train_benign = row.train_benign;
  cell.train_attack_count = row.train_attack;
  cell.status = CellStatus::kOk;
}

TransferCellResult blank_cell(ClassId i, ClassId j, const TransferSettings& s) {
  TransferCellResult c;
  c.train_attack = i;
  c.test_attack = j;
  c.mode = s.plan.mode;
  c.transform = s.transform;
  c.seed = row_seed(s, i);
  return c;
}

void check_present(const DatasetSplit& split, ClassId cls) {
  if (split.indices_of(Partition::kTrain, cls).empty() && split.indices_of(Partition::kTest, cls).empty()) {
    throw data_error("attack class " + std::to_string(cls) + " not present in the dataset");
  }
}

}  // namespace

std::vector<ClassId> default_attacks() { return {1, 2, 3, 4, 5, 6, 7, 10, 11, 12, 14}; }

std::string_view cell_status_label(CellStatus s) {
  switch (s) {
    case CellStatus::kOk:
      return "ok";
    case CellStatus::kPlaceholder:
      return "placeholder";
    case CellStatus::kFailed:
      return "failed";
    case CellStatus::kNotRun:
      break;
  }
  return "not_run";
}

CellStatus parse_cell_status(std::string_view text) {
  if (text == "ok") return CellStatus::kOk;
  if (text == "placeholder") return CellStatus::kPlaceholder;
  if (text == "failed") return CellStatus::kFailed;
  if (text == "not_run") return CellStatus::kNotRun;
  throw data_error("unknown cell status '" + std::string(text) + "'");
}

const TransferCellResult* TransferMatrix::find(ClassId train_attack, ClassId test_attack) const {
  const auto r = std::find(attacks.begin(), attacks.end(), train_attack);
  const auto c = std::find(attacks.begin(), attacks.end(), test_attack);
  if (r == attacks.end() || c == attacks.end()) return nullptr;
  return &at(static_cast<std::size_t>(r - attacks.begin()), static_cast<std::size_t>(c - attacks.begin()));
}

std::size_t TransferMatrix::failed_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.status == CellStatus::kFailed; }));
}

std::uint64_t row_seed(const TransferSettings& s, ClassId train_attack) {
  return derive_seed({s.seed, static_cast<std::uint64_t>(train_attack), static_cast<std::uint64_t>(s.plan.mode),
                      static_cast<std::uint64_t>(s.transform.kind), static_cast<std::uint64_t>(s.transform.window_n)});
}

TransferCellResult run_cell(const DatasetSplit& split, ClassId train_attack, ClassId test_attack,
                            const TransferSettings& settings) {
  if (train_attack == test_attack) {
    throw config_error("train and test attack must differ (diagonal cells are placeholders)");
  }
  if (train_attack == kBenign || test_attack == kBenign) throw config_error("BENIGN is not an attack class");
  check_present(split, train_attack);
  check_present(split, test_attack);
  auto cell = blank_cell(train_attack, test_attack, settings);
  const auto prepared = prepare(split, settings);
  const auto row = train_row(prepared, train_attack, settings);
  evaluate_cell(prepared, row, settings, cell);
  return cell;
}

TransferMatrix build_matrix(const DatasetSplit& split, const std::vector<ClassId>& attacks,
                            const TransferSettings& settings, int parallelism, const CellFilter& filter) {
  if (attacks.size() < 2) throw config_error("a transfer matrix needs at least 2 attacks");
  for (auto a : attacks) {
    if (a == kBenign) throw config_error("BENIGN is not an attack class");
    if (std::count(attacks.begin(), attacks.end(), a) > 1) throw config_error("duplicate attack in attack list");
  }
  settings.plan.validate();
  settings.transform.validate();
  settings.model.validate();

  TransferMatrix m;
  m.attacks = attacks;
  m.mode = settings.plan.mode;
  m.transform = settings.transform;
  const std::size_t n = attacks.size();
  m.cells.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      auto cell = blank_cell(attacks[r], attacks[c], settings);
      cell.status = r == c ? CellStatus::kPlaceholder : CellStatus::kNotRun;
      m.cells.push_back(std::move(cell));
    }
  }

  const auto wanted = [&](std::size_t r, std::size_t c) {
    return r != c && (filter.empty() || filter.contains({attacks[r], attacks[c]}));
  };
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (wanted(r, c)) {
        rows.push_back(r);
        break;
      }
    }
  }

  const auto prepared = prepare(split, settings);
  std::atomic<std::size_t> next{0};
  // Each worker owns whole rows; cells are written to disjoint slots.
  const auto worker = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      const std::size_t r = rows[k];
      std::optional<TrainedRow> trained;
      std::string row_error;
      try {
        trained = train_row(prepared, attacks[r], settings);
      } catch (const std::exception& e) {
        row_error = e.what();
      }
      for (std::size_t c = 0; c < n; ++c) {
        if (!wanted(r, c)) continue;
        auto& cell = m.at(r, c);
        if (!trained) {
          cell.status = CellStatus::kFailed;
          cell.error = row_error;
          continue;
        }
        try {
          evaluate_cell(prepared, *trained, settings, cell);
        } catch (const std::exception& e) {
          cell.status = CellStatus::kFailed;
          cell.error = e.what();
        }
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::clamp(parallelism, 1, static_cast<int>(std::max<std::size_t>(1, rows.size()))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return m;
}

bool TransferRelation::transfers(ClassId from, ClassId to) const {
  if (from == first && to == second) return direction != Direction::kBackward;
  if (from == second && to == first) return direction != Direction::kForward;
  return false;
}

std::vector<TransferRelation> classify_relations(const TransferMatrix& matrix, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw config_error("transfer threshold must be in (0, 1)");
  auto sorted = matrix.attacks;
  std::sort(sorted.begin(), sorted.end());
  const auto meets = [&](ClassId i, ClassId j) {
    const auto* c = matrix.find(i, j);
    return c && c->status == CellStatus::kOk && c->attack_recall >= threshold;
  };
  std::vector<TransferRelation> out;
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    for (std::size_t b = a + 1; b < sorted.size(); ++b) {
      const bool fwd = meets(sorted[a], sorted[b]);
      const bool bwd = meets(sorted[b], sorted[a]);
      if (!fwd && !bwd) continue;
      const auto dir = fwd && bwd ? Direction::kBoth : (fwd ? Direction::kForward : Direction::kBackward);
      out.push_back({sorted[a], sorted[b], dir, threshold});
    }
  }
  return out;
}

}  // namespace atx
