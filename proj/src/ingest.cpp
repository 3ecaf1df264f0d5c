#include "atx/ingest.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "atx/error.hpp"
#include "atx/rng.hpp"

namespace atx {

namespace {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

constexpr char kCacheMagic[8] = {'A', 'T', 'X', 'D', 'S', 'E', 'T', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

double parse_value(std::string_view field, std::size_t line_no, const std::string& source) {
  field = trim(field);
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec == std::errc::result_out_of_range) {
    // Overflowing literals behave like the infinities they approximate.
    return field.front() == '-' ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();
  }
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw data_error(source + ":" + std::to_string(line_no) + ": not a number: '" + std::string(field) + "'");
  }
  return value;
}

/// Maps each header column to a canonical feature slot. Falls back to
/// positional order when the header does not use the canonical names.
std::vector<std::size_t> feature_slots(const std::vector<std::string_view>& header, std::size_t label_col) {
  std::vector<std::size_t> slots;
  std::array<bool, kFeatureCount> used{};
  bool by_name = true;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    auto idx = feature_index(header[c]);
    if (idx && used[*idx]) idx = feature_index(std::string(trim(header[c])) + ".1");
    if (!idx || used[*idx]) {
      by_name = false;
      break;
    }
    used[*idx] = true;
    slots.push_back(*idx);
  }
  if (!by_name) {
    slots.resize(kFeatureCount);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
  }
  return slots;
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

RecordSet load_csv(const std::filesystem::path& path, const LabelMap& labels) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  return load_csv(in, labels, path.string());
}

RecordSet load_csv(std::istream& in, const LabelMap& labels, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw data_error(source_name + ": empty file, expected a header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_fields(line);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (normalize_label(trim(header[c])) == "label") {
      label_col = c;
      break;
    }
  }
  if (label_col == header.size()) throw data_error(source_name + ": schema error: no Label column in header");
  if (header.size() != kFeatureCount + 1) {
    throw data_error(source_name + ": schema error: header has " + std::to_string(header.size()) +
                     " columns, expected " + std::to_string(kFeatureCount + 1));
  }
  const auto slots = feature_slots(header, label_col);

  RecordSet records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw data_error(source_name + ": schema error at row " + std::to_string(line_no) + ": " +
                       std::to_string(fields.size()) + " columns, expected " + std::to_string(header.size()));
    }
    FlowRecord rec;
    std::size_t slot = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_col) continue;
      rec.features[slots[slot++]] = parse_value(fields[c], line_no, source_name);
    }
    const auto label_text = trim(fields[label_col]);
    const auto id = labels.lookup(label_text);
    if (!id) {
      throw data_error(source_name + ": label error at row " + std::to_string(line_no) + ": unknown label '" +
                       std::string(label_text) + "'");
    }
    rec.label = *id;
    records.push_back(rec);
  }
  return records;
}

std::size_t CleanReport::total() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < kFeatureCount; ++c) n += nan[c] + pos_inf[c] + neg_inf[c];
  return n;
}

CleanResult clean(RecordSet records) {
  CleanResult result;
  std::array<double, kFeatureCount> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  std::array<bool, kFeatureCount> has_finite{};
  std::array<bool, kFeatureCount> has_inf{};

  for (const auto& r : records) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const double v = r.features[c];
      if (std::isfinite(v)) {
        has_finite[c] = true;
        lo[c] = std::min(lo[c], v);
        hi[c] = std::max(hi[c], v);
      } else if (std::isinf(v)) {
        has_inf[c] = true;
      }
    }
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (has_inf[c] && !has_finite[c]) {
      throw data_error("unusable column '" + std::string(feature_names()[c]) + "': no finite values");
    }
  }

  auto& rep = result.report;
  for (auto& r : records) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      double& v = r.features[c];
      if (std::isnan(v)) {
        v = 0.0;
        ++rep.nan[c];
      } else if (std::isinf(v)) {
        if (v > 0) {
          v = hi[c];
          ++rep.pos_inf[c];
        } else {
          v = lo[c];
          ++rep.neg_inf[c];
        }
      }
    }
  }
  result.records = std::move(records);
  return result;
}

const std::vector<std::size_t>& DatasetSplit::indices(Partition p) const {
  switch (p) {
    case Partition::kTrain:
      return train;
    case Partition::kValidation:
      return validation;
    case Partition::kTest:
      break;
  }
  return test;
}

RecordSet DatasetSplit::gather(Partition p) const {
  const auto& idx = indices(p);
  RecordSet out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back((*records)[i]);
  return out;
}

std::vector<std::size_t> DatasetSplit::indices_of(Partition p, ClassId cls) const {
  std::vector<std::size_t> out;
  for (auto i : indices(p)) {
    if ((*records)[i].label == cls) out.push_back(i);
  }
  return out;
}

DatasetSplit DatasetSplit::with_records(SharedRecords replacement) const {
  if (!replacement || replacement->size() != records->size()) {
    throw runtime_error("replacement record set must match the split's record count");
  }
  DatasetSplit out = *this;
  out.records = std::move(replacement);
  return out;
}

DatasetSplit split(SharedRecords records, SplitFractions fractions, std::uint64_t seed) {
  if (!records) throw config_error("split: no records");
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (fractions.train <= 0 || fractions.validation <= 0 || fractions.test <= 0 || std::abs(sum - 1.0) > 1e-9) {
    throw config_error("split fractions must be positive and sum to 1");
  }

  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records->size(); ++i) by_class[(*records)[i].label].push_back(i);

  DatasetSplit out;
  out.records = records;
  out.seed = seed;
  out.fractions = fractions;
  for (auto& [cls, idx] : by_class) {
    const std::size_t n = idx.size();
    if (n < 3) {
      out.warnings.push_back("class " + std::to_string(cls) + " has " + std::to_string(n) +
                             " record(s); all placed in the training partition");
      out.train.insert(out.train.end(), idx.begin(), idx.end());
      continue;
    }
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(cls)}));
    rng.shuffle(idx.begin(), idx.end());
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions.test));
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fractions.validation));
    const std::size_t n_train = n - n_test - n_val;
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.validation.insert(out.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                          idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

ClassHistogram class_histogram(std::span<const FlowRecord> records) {
  ClassHistogram h;
  for (const auto& r : records) ++h[r.label].count;
  for (auto& [cls, share] : h) share.fraction = static_cast<double>(share.count) / static_cast<double>(records.size());
  return h;
}

ClassHistogram class_histogram(const RecordSet& records, std::span<const std::size_t> subset) {
  ClassHistogram h;
  for (auto i : subset) ++h[records[i].label].count;
  for (auto& [cls, share] : h) share.fraction = static_cast<double>(share.count) / static_cast<double>(subset.size());
  return h;
}

void write_cache(const std::filesystem::path& path, const RecordSet& records, std::uint64_t key) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write cache " + tmp);
    out.write(kCacheMagic, sizeof kCacheMagic);
    put(out, kCacheVersion);
    put(out, static_cast<std::uint32_t>(kFeatureCount));
    put(out, key);
    put(out, static_cast<std::uint64_t>(records.size()));
    for (const auto& r : records) {
      out.write(reinterpret_cast<const char*>(r.features.data()), sizeof(double) * kFeatureCount);
      put(out, static_cast<std::int32_t>(r.label));
    }
    if (!out) throw data_error("failed writing cache " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::optional<RecordSet> read_cache(const std::filesystem::path& path, std::uint64_t key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  std::uint32_t version = 0, dims = 0;
  std::uint64_t stored_key = 0, count = 0;
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) return std::nullopt;
  if (!get(in, version) || version != kCacheVersion) return std::nullopt;
  if (!get(in, dims) || dims != kFeatureCount) return std::nullopt;
  if (!get(in, stored_key) || stored_key != key) return std::nullopt;
  if (!get(in, count)) return std::nullopt;
  RecordSet records(count);
  for (auto& r : records) {
    std::int32_t label = 0;
    if (!in.read(reinterpret_cast<char*>(r.features.data()), sizeof(double) * kFeatureCount) || !get(in, label)) {
      return std::nullopt;
    }
    r.label = label;
  }
  return records;
}

std::uint64_t source_key(std::span<const std::filesystem::path> paths) {
  std::uint64_t h = derive_seed({kCacheVersion, paths.size()});
  for (const auto& p : paths) {
    for (unsigned char c : std::filesystem::absolute(p).string()) h = derive_seed({h, c});
    std::error_code ec;
    const auto size = std::filesystem::file_size(p, ec);
    const auto mtime = std::filesystem::last_write_time(p, ec).time_since_epoch().count();
    h = derive_seed({h, ec ? 0 : size, static_cast<std::uint64_t>(mtime)});
  }
  return h;
}

CleanResult load_dataset(std::span<const std::filesystem::path> paths, const std::filesystem::path& cache,
                         const LabelMap& labels) {
  if (paths.empty()) throw config_error("no dataset paths configured");
  const auto key = source_key(paths);
  if (!cache.empty()) {
    if (auto cached = read_cache(cache, key)) return CleanResult{std::move(*cached), {}};
  }
  RecordSet all;
  for (const auto& p : paths) {
    auto part = load_csv(p, labels);
    all.insert(all.end(), part.begin(), part.end());
  }
  auto result = clean(std::move(all));
  if (!cache.empty()) write_cache(cache, result.records, key);
  return result;
}

}  // namespace atx
