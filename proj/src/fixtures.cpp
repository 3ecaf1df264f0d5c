#include "atx/fixtures.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "atx/error.hpp"
#include "atx/report.hpp"
#include "atx/rng.hpp"

namespace atx {

namespace {

// Approximate CICIDS-2017 class mix, percent of rows.
constexpr double kClassPercent[kClassCount] = {80.3, 0.069, 4.52,  0.36, 8.16,    0.19,  0.2,    0.28,
                                               0.00038, 0.0012, 5.61, 0.2, 0.053, 0.00074, 0.023};

constexpr std::size_t kFlowBytesPerSec = 14;
constexpr std::size_t kFlowPacketsPerSec = 15;

}  // namespace

RecordSet gaussian_clusters(const std::vector<ClassCluster>& clusters, std::uint64_t seed, bool shuffle) {
  Rng rng(seed);
  RecordSet out;
  for (const auto& c : clusters) {
    for (std::size_t i = 0; i < c.count; ++i) {
      FlowRecord r;
      r.label = c.label;
      for (std::size_t f = 0; f < kFeatureCount; ++f) r.features[f] = c.mean[f] + c.stddev * rng.normal();
      out.push_back(r);
    }
  }
  if (shuffle) rng.shuffle(out.begin(), out.end());
  return out;
}

nlohmann::json Fixture::truth() const {
  nlohmann::json j;
  for (const auto& [cls, n] : counts) j["counts"][std::to_string(cls)] = n;
  for (const auto& [cls, feats] : informative) j["informative"][std::to_string(cls)] = feats;
  return j;
}

Fixture cicids_like_fixture(const FixtureSpec& spec) {
  if (spec.rows == 0) throw config_error("fixture needs at least one row");
  Rng rng(derive_seed({spec.seed, 0xf1}));
  Fixture fx;

  std::vector<ClassCluster> clusters;
  const std::vector<std::size_t> dos_shared = {1, 16, 18, 20, 40, 52};
  for (ClassId c = 0; c < kClassCount; ++c) {
    const auto want = static_cast<std::size_t>(std::llround(static_cast<double>(spec.rows) * kClassPercent[c] / 100.0));
    ClassCluster cl;
    cl.label = c;
    cl.count = std::max(want, spec.min_per_class);
    fx.counts[c] = cl.count;
    if (c != kBenign) {
      std::vector<std::size_t> feats;
      const bool dos = c >= 2 && c <= 6;
      if (dos) {
        for (auto f : dos_shared) cl.mean[f] += spec.separation;
        feats = dos_shared;
      }
      // Every attack also gets a few features of its own; feature 0 (destination port) always differs.
      cl.mean[0] += spec.separation * (1.0 + 0.25 * c);
      feats.push_back(0);
      for (int k = 0; k < 4; ++k) {
        const auto f = static_cast<std::size_t>(2 + rng.index(kFeatureCount - 2));
        cl.mean[f] += (dos ? 0.5 : 1.0) * spec.separation * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        feats.push_back(f);
      }
      std::sort(feats.begin(), feats.end());
      feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
      fx.informative[c] = feats;
    }
    clusters.push_back(cl);
  }
  fx.records = gaussian_clusters(clusters, derive_seed({spec.seed, 0xf2}));

  // Mixed units: rescale and shift each column.
  FeatureVector scale, offset;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    scale[f] = std::pow(10.0, 6.0 * rng.uniform());
    offset[f] = scale[f] * 4.0;
  }
  for (auto& r : fx.records) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) r.features[f] = r.features[f] * scale[f] + offset[f];
  }

  if (spec.nonfinite_rate > 0.0) {
    Rng bad(derive_seed({spec.seed, 0xf3}));
    for (auto& r : fx.records) {
      if (bad.uniform() >= spec.nonfinite_rate) continue;
      const auto col = bad.uniform() < 0.5 ? kFlowBytesPerSec : kFlowPacketsPerSec;
      const double u = bad.uniform();
      r.features[col] = u < 0.5 ? std::numeric_limits<double>::quiet_NaN()
                                : (u < 0.9 ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity());
    }
  }
  return fx;
}

Fixture planted_fixture(const std::map<ClassId, std::vector<std::size_t>>& informative, std::size_t benign_count,
                        std::size_t attack_count, double shift, std::uint64_t seed) {
  Fixture fx;
  std::vector<ClassCluster> clusters;
  clusters.push_back({kBenign, benign_count, {}, 1.0});
  fx.counts[kBenign] = benign_count;
  for (const auto& [cls, feats] : informative) {
    ClassCluster cl{cls, attack_count, {}, 1.0};
    for (auto f : feats) {
      if (f >= kFeatureCount) throw config_error("planted feature index out of range");
      cl.mean[f] = shift;
    }
    clusters.push_back(cl);
    fx.counts[cls] = attack_count;
    fx.informative[cls] = feats;
  }
  fx.records = gaussian_clusters(clusters, seed);
  return fx;
}

void write_csv(std::ostream& out, const RecordSet& records) {
  // The raw files carry a leading space on most header names.
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::string_view name = feature_names()[f];
    if (name == "Fwd Header Length.1") name = "Fwd Header Length";
    out << (f == 0 ? " " : ", ") << name;
  }
  out << ", Label\n";
  for (const auto& r : records) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const double v = r.features[f];
      if (std::isnan(v)) out << "NaN";
      else if (std::isinf(v)) out << (v > 0 ? "Infinity" : "-Infinity");
      else out << format_double(v);
      out << ',';
    }
    out << class_name(r.label) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const RecordSet& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  write_csv(out, records);
}

}  // namespace atx
