#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "atx/schema.hpp"

namespace atx {

using RecordSet = std::vector<FlowRecord>;
using SharedRecords = std::shared_ptr<const RecordSet>;

/// Parses a MachineLearningCVE-layout CSV: one header row, 78 feature
/// columns and a "Label" column. Row order is preserved.
RecordSet load_csv(const std::filesystem::path& path, const LabelMap& labels = LabelMap::cicids2017());
RecordSet load_csv(std::istream& in, const LabelMap& labels, const std::string& source_name);

/// Per-column counts of non-finite values replaced by clean().
struct CleanReport {
  std::array<std::size_t, kFeatureCount> nan{};
  std::array<std::size_t, kFeatureCount> pos_inf{};
  std::array<std::size_t, kFeatureCount> neg_inf{};

  std::size_t total() const;
};

struct CleanResult {
  RecordSet records;
  CleanReport report;
};

/// NaN -> 0, +Inf -> column finite max, -Inf -> column finite min.
/// A column holding non-finite values but no finite ones is unusable and
/// raises a data error.
CleanResult clean(RecordSet records);

struct SplitFractions {
  double train = 0.6;
  double validation = 0.1;
  double test = 0.3;
};

enum class Partition { kTrain, kValidation, kTest };

/// Stratified train/validation/test partition. Partitions are index lists
/// (ascending, so capture order is kept) into a shared record set.
struct DatasetSplit {
  SharedRecords records;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  SplitFractions fractions;
  std::vector<std::string> warnings;

  const std::vector<std::size_t>& indices(Partition p) const;
  RecordSet gather(Partition p) const;
  /// Indices of partition p whose label is `cls`.
  std::vector<std::size_t> indices_of(Partition p, ClassId cls) const;
  /// Same membership over a different record set of identical length
  /// (used after stream transforms).
  DatasetSplit with_records(SharedRecords replacement) const;
};

DatasetSplit split(SharedRecords records, SplitFractions fractions, std::uint64_t seed);

struct ClassShare {
  std::size_t count = 0;
  double fraction = 0.0;

  friend bool operator==(const ClassShare&, const ClassShare&) = default;
};
using ClassHistogram = std::map<ClassId, ClassShare>;

ClassHistogram class_histogram(std::span<const FlowRecord> records);
ClassHistogram class_histogram(const RecordSet& records, std::span<const std::size_t> subset);

/// Binary dataset cache. `source_key` identifies the inputs it was built
/// from; read_cache returns nothing if the key or format version differs.
void write_cache(const std::filesystem::path& path, const RecordSet& records, std::uint64_t source_key);
std::optional<RecordSet> read_cache(const std::filesystem::path& path, std::uint64_t source_key);

/// Key over file paths, sizes and modification times.
std::uint64_t source_key(std::span<const std::filesystem::path> paths);

/// Loads and concatenates every CSV, then cleans. Uses `cache` when it is
/// non-empty and valid, and refreshes it otherwise.
CleanResult load_dataset(std::span<const std::filesystem::path> paths, const std::filesystem::path& cache = {},
                         const LabelMap& labels = LabelMap::cicids2017());

}  // namespace atx
