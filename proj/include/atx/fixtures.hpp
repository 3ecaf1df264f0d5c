#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "json.hpp"

#include "atx/ingest.hpp"

namespace atx {

/// One Gaussian cluster: `count` records of class `label` around `mean`
/// with isotropic standard deviation `stddev`.
struct ClassCluster {
  ClassId label = kBenign;
  std::size_t count = 0;
  FeatureVector mean{};
  double stddev = 1.0;
};

/// Samples every cluster, then shuffles the rows when `shuffle` is set
/// (otherwise clusters appear in the given order).
RecordSet gaussian_clusters(const std::vector<ClassCluster>& clusters, std::uint64_t seed, bool shuffle = true);

/// Desk-scale stand-in for CICIDS-2017: all 15 classes with proportions
/// following the real class mix (floored at `min_per_class`), DoS classes
/// 2-6 sharing a common offset so transfer between them exists by
/// construction, and per-column unit scales spanning several orders of
/// magnitude.
struct FixtureSpec {
  std::size_t rows = 20000;
  std::size_t min_per_class = 60;
  double separation = 3.0;
  /// Fraction of rows receiving a NaN or +/-Inf in the rate columns.
  double nonfinite_rate = 0.0;
  std::uint64_t seed = 1;
};

struct Fixture {
  RecordSet records;
  std::map<ClassId, std::size_t> counts;                        // ground-truth class counts
  std::map<ClassId, std::vector<std::size_t>> informative;      // features that carry each class's signal

  nlohmann::json truth() const;
};

Fixture cicids_like_fixture(const FixtureSpec& spec);

/// Benign N(0, 1) on all 78 features; each listed attack class shifted by
/// `shift` on its own informative features. Used for RFE recovery.
Fixture planted_fixture(const std::map<ClassId, std::vector<std::size_t>>& informative, std::size_t benign_count,
                        std::size_t attack_count, double shift, std::uint64_t seed);

/// Writes records in MachineLearningCVE layout (leading-space headers,
/// label names from the standard map).
void write_csv(std::ostream& out, const RecordSet& records);
void write_csv(const std::filesystem::path& path, const RecordSet& records);

}  // namespace atx
