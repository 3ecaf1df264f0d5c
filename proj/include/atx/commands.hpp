#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "atx/config.hpp"
#include "atx/fixtures.hpp"
#include "atx/report.hpp"
#include "atx/transfer.hpp"

namespace atx {

inline constexpr const char* kToolVersion = "0.1.0";

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
};

/// Published share of each class (percent of rows) in the full dataset.
const std::array<double, kClassCount>& reference_class_percent();

struct LoadedData {
  SharedRecords records;
  CleanReport clean;
  std::string hash;
  DatasetSplit split;
};

LoadedData load_and_split(const RunConfig& config);

struct IngestSummary {
  std::size_t rows = 0;
  ClassHistogram histogram;
  CleanReport clean;
  /// Largest |observed - reference| class share, in percentage points.
  double max_deviation_pp = 0.0;
};

struct MulticlassSummary {
  EvalResult result;
  std::vector<ClassId> evaluated;  // attack classes with test support
  std::size_t attacks_at_98 = 0;   // evaluated attacks with recall >= 0.98
};

struct RfeRecovery {
  std::string name;
  std::size_t planted = 0;
  std::size_t recovered = 0;
  std::size_t selected = 0;
};

struct RfeSummary {
  std::vector<NamedRanking> rankings;
  std::vector<RfeRecovery> recovery;  // only when rfe.truth is configured
};

// Each command validates the config first. With dry_run set it prints the
// job plan and returns without loading data (an empty result).
std::optional<IngestSummary> cmd_ingest(const RunConfig& config, const CommandIo& io, bool dry_run = false);
std::optional<MulticlassSummary> cmd_multiclass(const RunConfig& config, const CommandIo& io, bool dry_run = false);
std::vector<TransferMatrix> cmd_transfer(const RunConfig& config, const CommandIo& io, bool dry_run = false);
std::optional<RfeSummary> cmd_rfe(const RunConfig& config, const CommandIo& io, bool dry_run = false);

/// Re-renders figures, relation tables and the comparison from the transfer
/// tables already stored under the run directory.
Artifacts cmd_report(const RunConfig& config, const CommandIo& io, bool dry_run = false);

enum class FixtureKind { kCicids, kPlanted };

FixtureKind parse_fixture_kind(std::string_view text);

/// Writes <dir>/fixture.csv and <dir>/truth.json.
void cmd_fixtures_generate(FixtureKind kind, const FixtureSpec& spec, const std::filesystem::path& dir,
                           const CommandIo& io);

}  // namespace atx
