#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "atx/augment.hpp"
#include "atx/ingest.hpp"
#include "atx/nn.hpp"
#include "atx/preprocess.hpp"
#include "atx/rfe.hpp"

namespace atx {

/// Environment variable naming the default dataset directory.
inline constexpr const char* kDataDirEnv = "ATX_DATA_DIR";

/// Declarative description of a run. Parsed from a sectioned key/value
/// file:
///
///   # comment
///   [data]
///   paths = Monday.csv, Tuesday.csv
///   [transfer]
///   modes = real, bootstrap
///   transform = none, tavg
///   window_n = 5
///
/// Lists are comma-separated; class pairs are written `3:2`.
struct RunConfig {
  // [data]
  std::vector<std::filesystem::path> data_paths;
  std::filesystem::path cache;
  // [split]
  SplitFractions fractions;
  std::uint64_t split_seed = 1;
  // [augment]
  int k_neighbors = 5;
  // [transfer]
  std::vector<ClassId> attacks;  // empty = default attack set
  std::vector<AugmentMode> modes = {AugmentMode::kReal};
  std::vector<TransformKind> transforms = {TransformKind::kNone};
  int window_n = 5;
  double threshold = 0.7;
  int parallelism = 1;
  std::uint64_t transfer_seed = 7;
  std::vector<std::pair<ClassId, ClassId>> compare_pairs;
  std::vector<std::pair<ClassId, ClassId>> cells;  // empty = full matrix
  // [model]
  ModelConfig model;
  // [rfe]
  RfeOptions rfe;
  std::vector<ClassId> rfe_singles;  // empty = the transfer attack set
  std::vector<std::pair<ClassId, ClassId>> rfe_pairs;
  std::filesystem::path rfe_truth;
  // [output]
  std::filesystem::path output_dir = "results";
  std::string run_id = "run";

  std::vector<ClassId> effective_attacks() const;
  std::filesystem::path run_root() const { return output_dir / run_id; }

  /// Checks every value and cross-field constraint.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses config text; unknown sections or keys are config errors.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `section.key=value` override.
void apply_override(RunConfig& config, std::string_view assignment);

/// Resolves dataset paths: relative paths are taken from ATX_DATA_DIR when
/// set; with no configured paths every *.csv in ATX_DATA_DIR is used.
std::vector<std::filesystem::path> resolve_data_paths(const RunConfig& config);

}  // namespace atx
