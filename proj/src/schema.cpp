#include "atx/schema.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "atx/error.hpp"

namespace atx {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "Destination Port",
    "Flow Duration",
    "Total Fwd Packets",
    "Total Backward Packets",
    "Total Length of Fwd Packets",
    "Total Length of Bwd Packets",
    "Fwd Packet Length Max",
    "Fwd Packet Length Min",
    "Fwd Packet Length Mean",
    "Fwd Packet Length Std",
    "Bwd Packet Length Max",
    "Bwd Packet Length Min",
    "Bwd Packet Length Mean",
    "Bwd Packet Length Std",
    "Flow Bytes/s",
    "Flow Packets/s",
    "Flow IAT Mean",
    "Flow IAT Std",
    "Flow IAT Max",
    "Flow IAT Min",
    "Fwd IAT Total",
    "Fwd IAT Mean",
    "Fwd IAT Std",
    "Fwd IAT Max",
    "Fwd IAT Min",
    "Bwd IAT Total",
    "Bwd IAT Mean",
    "Bwd IAT Std",
    "Bwd IAT Max",
    "Bwd IAT Min",
    "Fwd PSH Flags",
    "Bwd PSH Flags",
    "Fwd URG Flags",
    "Bwd URG Flags",
    "Fwd Header Length",
    "Bwd Header Length",
    "Fwd Packets/s",
    "Bwd Packets/s",
    "Min Packet Length",
    "Max Packet Length",
    "Packet Length Mean",
    "Packet Length Std",
    "Packet Length Variance",
    "FIN Flag Count",
    "SYN Flag Count",
    "RST Flag Count",
    "PSH Flag Count",
    "ACK Flag Count",
    "URG Flag Count",
    "CWE Flag Count",
    "ECE Flag Count",
    "Down/Up Ratio",
    "Average Packet Size",
    "Avg Fwd Segment Size",
    "Avg Bwd Segment Size",
    "Fwd Header Length.1",
    "Fwd Avg Bytes/Bulk",
    "Fwd Avg Packets/Bulk",
    "Fwd Avg Bulk Rate",
    "Bwd Avg Bytes/Bulk",
    "Bwd Avg Packets/Bulk",
    "Bwd Avg Bulk Rate",
    "Subflow Fwd Packets",
    "Subflow Fwd Bytes",
    "Subflow Bwd Packets",
    "Subflow Bwd Bytes",
    "Init_Win_bytes_forward",
    "Init_Win_bytes_backward",
    "act_data_pkt_fwd",
    "min_seg_size_forward",
    "Active Mean",
    "Active Std",
    "Active Max",
    "Active Min",
    "Idle Mean",
    "Idle Std",
    "Idle Max",
    "Idle Min",
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kFeatureNames; }

std::string_view trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<std::size_t> feature_index(std::string_view name) {
  const std::string key = lower(trim(name));
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    if (lower(kFeatureNames[i]) == key) return i;
  }
  return std::nullopt;
}

std::string normalize_label(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (c < 0x80 && std::isalnum(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

LabelMap::LabelMap(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != static_cast<ClassId>(i)) {
      throw config_error("label map ids must be contiguous from 0");
    }
    auto norm = normalize_label(entries_[i].name);
    if (std::find(normalized_.begin(), normalized_.end(), norm) != normalized_.end()) {
      throw config_error("duplicate label name in label map: " + entries_[i].name);
    }
    normalized_.push_back(std::move(norm));
  }
  if (entries_.empty() || normalized_.front() != "benign") {
    throw config_error("label map must map BENIGN to class 0");
  }
}

const LabelMap& LabelMap::cicids2017() {
  static const LabelMap map({
      {"BENIGN", 0},
      {"Bot", 1},
      {"DDoS", 2},
      {"DoS GoldenEye", 3},
      {"DoS Hulk", 4},
      {"DoS Slowhttptest", 5},
      {"DoS Slowloris", 6},
      {"FTP-Patator", 7},
      {"Heartbleed", 8},
      {"Infiltration", 9},
      {"PortScan", 10},
      {"SSH-Patator", 11},
      {"Web Attack Brute Force", 12},
      {"Web Attack Sql Injection", 13},
      {"Web Attack XSS", 14},
  });
  return map;
}

std::optional<ClassId> LabelMap::lookup(std::string_view name) const {
  const auto norm = normalize_label(name);
  for (std::size_t i = 0; i < normalized_.size(); ++i) {
    if (normalized_[i] == norm) return entries_[i].id;
  }
  return std::nullopt;
}

const std::string& LabelMap::name(ClassId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
    throw data_error("class id out of range: " + std::to_string(id));
  }
  return entries_[static_cast<std::size_t>(id)].name;
}

const std::string& class_name(ClassId id) { return LabelMap::cicids2017().name(id); }

}  // namespace atx
