#include "atx/augment.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "atx/error.hpp"
#include "atx/rng.hpp"

namespace atx {

AugmentMode parse_augment_mode(std::string_view raw) {
  const auto text = normalize_label(raw);
  if (text == "real") return AugmentMode::kReal;
  if (text == "bootstrap") return AugmentMode::kBootstrap;
  if (text == "smote") return AugmentMode::kSmote;
  throw config_error("unknown augment mode '" + std::string(raw) + "' (expected real|bootstrap|smote)");
}

std::string_view augment_label(AugmentMode mode) {
  switch (mode) {
    case AugmentMode::kReal:
      return "real";
    case AugmentMode::kBootstrap:
      return "bootstrap";
    case AugmentMode::kSmote:
      break;
  }
  return "smote";
}

void AugmentPlan::validate() const {
  if (mode == AugmentMode::kSmote && k_neighbors < 1) throw config_error("SMOTE requires k_neighbors >= 1");
  if (target_attack_count && *target_attack_count == 0) throw config_error("target_attack_count must be positive");
}

std::vector<std::size_t> nearest_neighbors(const Matrix& points, std::size_t i, int k) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n - 1);
  const auto row = points.row(static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    dist.emplace_back((points.row(static_cast<Eigen::Index>(j)) - row).squaredNorm(), j);
  }
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
  std::vector<std::size_t> out(kk);
  for (std::size_t m = 0; m < kk; ++m) out[m] = dist[m].second;
  return out;
}

SmoteSamples smote_points(const Matrix& points, const Matrix& metric_space, int k, std::size_t count,
                          std::uint64_t seed) {
  if (k < 1) throw config_error("SMOTE requires k >= 1");
  if (metric_space.rows() != points.rows()) throw runtime_error("SMOTE metric space must match the point count");
  const auto n = static_cast<std::size_t>(points.rows());
  if (count > 0 && n < static_cast<std::size_t>(k) + 1) {
    throw data_error("SMOTE needs at least k+1=" + std::to_string(k + 1) + " samples, got " + std::to_string(n));
  }

  SmoteSamples out;
  out.points.resize(static_cast<Eigen::Index>(count), points.cols());
  out.origins.reserve(count);
  // Neighbor lists are computed on first use; large classes rarely need all of them.
  std::unordered_map<std::size_t, std::vector<std::size_t>> knn;
  Rng rng(seed);
  for (std::size_t s = 0; s < count; ++s) {
    const auto base = static_cast<std::size_t>(rng.index(n));
    auto it = knn.find(base);
    if (it == knn.end()) it = knn.emplace(base, nearest_neighbors(metric_space, base, k)).first;
    const auto neighbor = it->second[rng.index(it->second.size())];
    const double u = rng.uniform_closed();
    const auto x = points.row(static_cast<Eigen::Index>(base));
    out.points.row(static_cast<Eigen::Index>(s)) = x + u * (points.row(static_cast<Eigen::Index>(neighbor)) - x);
    out.origins.push_back({base, neighbor, u});
  }
  return out;
}

RecordSet smote_generate(std::span<const FlowRecord> attack_records, int k, std::size_t count, std::uint64_t seed,
                         const Standardizer* scaler) {
  if (count == 0) return {};
  if (attack_records.size() < static_cast<std::size_t>(k) + 1) {
    const std::string cls = attack_records.empty() ? std::string("?") : std::to_string(attack_records.front().label);
    throw data_error("insufficient samples for SMOTE in class " + cls + ": have " +
                     std::to_string(attack_records.size()) + ", need k+1=" + std::to_string(k + 1));
  }
  const Matrix raw = to_matrix(attack_records);
  Matrix metric = raw;
  if (scaler) {
    for (Eigen::Index r = 0; r < metric.rows(); ++r) {
      for (Eigen::Index c = 0; c < metric.cols(); ++c) {
        const auto cc = static_cast<std::size_t>(c);
        metric(r, c) = (raw(r, c) - scaler->mean[cc]) / scaler->scale[cc];
      }
    }
  }
  const auto samples = smote_points(raw, metric, k, count, seed);
  RecordSet out(count);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      out[s].features[c] = samples.points(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c));
    }
    out[s].label = attack_records[samples.origins[s].base].label;
  }
  return out;
}

RecordSet bootstrap_resample(std::span<const FlowRecord> attack_records, std::size_t count, std::uint64_t seed) {
  if (attack_records.empty()) throw data_error("insufficient samples for bootstrap: empty input");
  RecordSet out;
  out.reserve(count);
  Rng rng(seed);
  for (std::size_t s = 0; s < count; ++s) out.push_back(attack_records[rng.index(attack_records.size())]);
  return out;
}

RecordSet binary_subset(const DatasetSplit& split, Partition part, std::span<const ClassId> attacks) {
  RecordSet out;
  for (auto i : split.indices(part)) {
    const auto& r = (*split.records)[i];
    if (r.label == kBenign) {
      out.push_back({r.features, 0});
    } else if (std::find(attacks.begin(), attacks.end(), r.label) != attacks.end()) {
      out.push_back({r.features, 1});
    }
  }
  return out;
}

RecordSet make_binary_trainset(const DatasetSplit& split, ClassId attack_class, const AugmentPlan& plan,
                               const Standardizer* scaler) {
  plan.validate();
  if (attack_class == kBenign) throw config_error("attack class must not be BENIGN (0)");
  RecordSet benign, attack;
  for (auto i : split.train) {
    const auto& r = (*split.records)[i];
    if (r.label == kBenign) benign.push_back(r);
    else if (r.label == attack_class) attack.push_back(r);
  }
  if (attack.empty()) {
    throw data_error("empty class: attack class " + std::to_string(attack_class) + " absent from training partition");
  }
  if (benign.empty()) throw data_error("empty class: no BENIGN records in training partition");

  const std::size_t target = plan.target_attack_count.value_or(benign.size());
  const auto mode_tag = static_cast<std::uint64_t>(plan.mode);
  const auto cls_tag = static_cast<std::uint64_t>(attack_class);
  RecordSet attack_side;
  switch (plan.mode) {
    case AugmentMode::kReal:
      attack_side = std::move(attack);
      break;
    case AugmentMode::kBootstrap:
      attack_side = bootstrap_resample(attack, target, derive_seed({plan.seed, mode_tag, cls_tag}));
      break;
    case AugmentMode::kSmote: {
      if (attack.size() >= target) {
        // Already at or above the target: keep a random subset of real records.
        Rng rng(derive_seed({plan.seed, mode_tag, cls_tag}));
        rng.shuffle(attack.begin(), attack.end());
        attack.resize(target);
        attack_side = std::move(attack);
        break;
      }
      std::optional<Standardizer> fitted;
      if (!scaler) fitted = standardize_fit(*split.records, split.train);
      auto synthetic = smote_generate(attack, plan.k_neighbors, target - attack.size(),
                                      derive_seed({plan.seed, mode_tag, cls_tag}), scaler ? scaler : &*fitted);
      attack_side = std::move(attack);
      attack_side.insert(attack_side.end(), synthetic.begin(), synthetic.end());
      break;
    }
  }

  RecordSet out;
  out.reserve(benign.size() + attack_side.size());
  for (auto& r : benign) out.push_back({r.features, 0});
  for (auto& r : attack_side) out.push_back({r.features, 1});
  Rng rng(derive_seed({plan.seed, mode_tag, cls_tag, 0x5f5f}));
  rng.shuffle(out.begin(), out.end());
  return out;
}

}  // namespace atx
