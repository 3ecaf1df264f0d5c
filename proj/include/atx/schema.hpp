#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atx {

inline constexpr std::size_t kFeatureCount = 78;
inline constexpr int kClassCount = 15;
inline constexpr int kBenign = 0;

using ClassId = int;
using FeatureVector = std::array<double, kFeatureCount>;

/// One network flow: the 78 flow statistics of a CICIDS-2017
/// MachineLearningCVE row plus its class id.
struct FlowRecord {
  FeatureVector features{};
  ClassId label = kBenign;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// Canonical feature column names, in MachineLearningCVE column order.
/// "Fwd Header Length" appears twice in the source files; the second
/// occurrence is named "Fwd Header Length.1" here.
const std::array<std::string_view, kFeatureCount>& feature_names();

/// Index of a canonical feature name (case-insensitive, whitespace-trimmed).
std::optional<std::size_t> feature_index(std::string_view name);

/// Attack-name <-> class-id mapping for the 15 CICIDS-2017 classes.
/// Names are matched after normalization: lowercase, every run of
/// non-alphanumeric characters collapsed to one space. That absorbs the
/// mangled dash in "Web Attack \x96 Brute Force" found in the raw files.
class LabelMap {
 public:
  struct Entry {
    std::string name;
    ClassId id;
  };

  /// The standard map: BENIGN -> 0 ... Web Attack XSS -> 14.
  static const LabelMap& cicids2017();

  explicit LabelMap(std::vector<Entry> entries);

  std::optional<ClassId> lookup(std::string_view name) const;
  const std::string& name(ClassId id) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;             // ordered by id
  std::vector<std::string> normalized_;    // parallel to entries_
};

/// Lowercase, collapse non-alphanumeric runs to a single space, trim.
std::string normalize_label(std::string_view raw);

/// Whitespace trim.
std::string_view trim(std::string_view s);

/// Short display name of a class id ("BENIGN", "DDoS", ...) from the standard map.
const std::string& class_name(ClassId id);

}  // namespace atx
