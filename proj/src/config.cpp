#include "atx/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "atx/error.hpp"
#include "atx/transfer.hpp"

namespace atx {

namespace {

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto end = value.find(',', start);
    const auto item = trim(value.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!item.empty()) out.emplace_back(item);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    v = v.substr(1, v.size() - 2);
  }
  return std::string(v);
}

template <typename T>
T number(std::string_view text, const std::string& key) {
  text = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw config_error("invalid value for " + key + ": '" + std::string(text) + "'");
  }
  return v;
}

std::vector<ClassId> class_list(std::string_view v, const std::string& key) {
  std::vector<ClassId> out;
  for (const auto& item : split_list(v)) out.push_back(number<int>(item, key));
  return out;
}

std::vector<std::pair<ClassId, ClassId>> pair_list(std::string_view v, const std::string& key) {
  std::vector<std::pair<ClassId, ClassId>> out;
  for (const auto& item : split_list(v)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw config_error("invalid pair '" + item + "' for " + key + " (expected a:b)");
    out.emplace_back(number<int>(std::string_view(item).substr(0, colon), key),
                     number<int>(std::string_view(item).substr(colon + 1), key));
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.paths",
       [](RunConfig& c, std::string_view v) {
         c.data_paths.clear();
         for (const auto& p : split_list(v)) c.data_paths.emplace_back(unquote(p));
       }},
      {"data.cache", [](RunConfig& c, std::string_view v) { c.cache = unquote(v); }},
      {"split.train", [](RunConfig& c, std::string_view v) { c.fractions.train = number<double>(v, "split.train"); }},
      {"split.validation",
       [](RunConfig& c, std::string_view v) { c.fractions.validation = number<double>(v, "split.validation"); }},
      {"split.test", [](RunConfig& c, std::string_view v) { c.fractions.test = number<double>(v, "split.test"); }},
      {"split.seed", [](RunConfig& c, std::string_view v) { c.split_seed = number<std::uint64_t>(v, "split.seed"); }},
      {"augment.k_neighbors",
       [](RunConfig& c, std::string_view v) { c.k_neighbors = number<int>(v, "augment.k_neighbors"); }},
      {"transfer.attacks", [](RunConfig& c, std::string_view v) { c.attacks = class_list(v, "transfer.attacks"); }},
      {"transfer.modes",
       [](RunConfig& c, std::string_view v) {
         c.modes.clear();
         for (const auto& m : split_list(v)) c.modes.push_back(parse_augment_mode(m));
       }},
      {"transfer.transform",
       [](RunConfig& c, std::string_view v) {
         c.transforms.clear();
         for (const auto& t : split_list(v)) c.transforms.push_back(parse_transform_kind(t));
       }},
      {"transfer.window_n", [](RunConfig& c, std::string_view v) { c.window_n = number<int>(v, "transfer.window_n"); }},
      {"transfer.threshold",
       [](RunConfig& c, std::string_view v) { c.threshold = number<double>(v, "transfer.threshold"); }},
      {"transfer.parallelism",
       [](RunConfig& c, std::string_view v) { c.parallelism = number<int>(v, "transfer.parallelism"); }},
      {"transfer.seed",
       [](RunConfig& c, std::string_view v) { c.transfer_seed = number<std::uint64_t>(v, "transfer.seed"); }},
      {"transfer.compare_pairs",
       [](RunConfig& c, std::string_view v) { c.compare_pairs = pair_list(v, "transfer.compare_pairs"); }},
      {"transfer.cells", [](RunConfig& c, std::string_view v) { c.cells = pair_list(v, "transfer.cells"); }},
      {"model.hidden",
       [](RunConfig& c, std::string_view v) { c.model.hidden_layers = class_list(v, "model.hidden"); }},
      {"model.dropout",
       [](RunConfig& c, std::string_view v) { c.model.dropout_rate = number<double>(v, "model.dropout"); }},
      {"model.learning_rate",
       [](RunConfig& c, std::string_view v) { c.model.learning_rate = number<double>(v, "model.learning_rate"); }},
      {"model.momentum",
       [](RunConfig& c, std::string_view v) { c.model.momentum = number<double>(v, "model.momentum"); }},
      {"model.batch_size",
       [](RunConfig& c, std::string_view v) { c.model.batch_size = number<int>(v, "model.batch_size"); }},
      {"model.epochs", [](RunConfig& c, std::string_view v) { c.model.epochs = number<int>(v, "model.epochs"); }},
      {"model.seed", [](RunConfig& c, std::string_view v) { c.model.seed = number<std::uint64_t>(v, "model.seed"); }},
      {"rfe.step", [](RunConfig& c, std::string_view v) { c.rfe.step = number<double>(v, "rfe.step"); }},
      {"rfe.tolerance", [](RunConfig& c, std::string_view v) { c.rfe.tolerance = number<double>(v, "rfe.tolerance"); }},
      {"rfe.l2", [](RunConfig& c, std::string_view v) { c.rfe.l2 = number<double>(v, "rfe.l2"); }},
      {"rfe.max_benign",
       [](RunConfig& c, std::string_view v) { c.rfe.max_benign = number<std::size_t>(v, "rfe.max_benign"); }},
      {"rfe.seed", [](RunConfig& c, std::string_view v) { c.rfe.seed = number<std::uint64_t>(v, "rfe.seed"); }},
      {"rfe.singles", [](RunConfig& c, std::string_view v) { c.rfe_singles = class_list(v, "rfe.singles"); }},
      {"rfe.pairs", [](RunConfig& c, std::string_view v) { c.rfe_pairs = pair_list(v, "rfe.pairs"); }},
      {"rfe.truth", [](RunConfig& c, std::string_view v) { c.rfe_truth = unquote(v); }},
      {"output.dir", [](RunConfig& c, std::string_view v) { c.output_dir = unquote(v); }},
      {"output.run_id", [](RunConfig& c, std::string_view v) { c.run_id = unquote(v); }},
  };
  return table;
}

void set_value(RunConfig& c, const std::string& key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw config_error("unknown config key '" + key + "'");
  it->second(c, value);
}

void check_attack(ClassId a, const std::string& where) {
  if (a <= kBenign || a >= kClassCount) {
    throw config_error(where + ": class " + std::to_string(a) + " is not an attack class (1..14)");
  }
}

}  // namespace

std::vector<ClassId> RunConfig::effective_attacks() const { return attacks.empty() ? default_attacks() : attacks; }

void RunConfig::validate() const {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (fractions.train <= 0 || fractions.validation <= 0 || fractions.test <= 0 || std::abs(sum - 1.0) > 1e-9) {
    throw config_error("split fractions must be positive and sum to 1");
  }
  if (k_neighbors < 1) throw config_error("augment.k_neighbors must be >= 1");
  const auto atk = effective_attacks();
  for (auto a : atk) check_attack(a, "transfer.attacks");
  for (auto a : atk) {
    if (std::count(atk.begin(), atk.end(), a) > 1) throw config_error("transfer.attacks lists a class twice");
  }
  if (modes.empty()) throw config_error("transfer.modes must not be empty");
  if (transforms.empty()) throw config_error("transfer.transform must not be empty");
  if (window_n < 1) throw config_error("transfer.window_n must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw config_error("transfer.threshold must be in (0, 1)");
  if (parallelism < 1) throw config_error("transfer.parallelism must be >= 1");
  for (const auto& [i, j] : compare_pairs) {
    check_attack(i, "transfer.compare_pairs");
    check_attack(j, "transfer.compare_pairs");
  }
  for (const auto& [i, j] : cells) {
    check_attack(i, "transfer.cells");
    check_attack(j, "transfer.cells");
    if (i == j) throw config_error("transfer.cells: diagonal cell " + std::to_string(i) + ":" + std::to_string(j));
    if (std::find(atk.begin(), atk.end(), i) == atk.end() || std::find(atk.begin(), atk.end(), j) == atk.end()) {
      throw config_error("transfer.cells: pair outside transfer.attacks");
    }
  }
  if (std::find(transforms.begin(), transforms.end(), TransformKind::kDct) != transforms.end() &&
      model.batch_size < 2) {
    throw config_error("DCT transform needs model.batch_size >= 2");
  }
  ModelConfig m = model;
  m.output_classes = 2;
  m.validate();
  rfe.validate();
  for (auto a : rfe_singles) check_attack(a, "rfe.singles");
  for (const auto& [a, b] : rfe_pairs) {
    check_attack(a, "rfe.pairs");
    check_attack(b, "rfe.pairs");
  }
  if (run_id.empty() || run_id.find('/') != std::string::npos) throw config_error("output.run_id must be a plain name");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  std::vector<std::string> paths;
  for (const auto& p : data_paths) paths.push_back(p.generic_string());
  j["data"] = {{"paths", paths}, {"cache", cache.generic_string()}};
  j["split"] = {{"train", fractions.train},
                {"validation", fractions.validation},
                {"test", fractions.test},
                {"seed", split_seed}};
  j["augment"] = {{"k_neighbors", k_neighbors}};
  std::vector<std::string> mode_names, transform_names;
  for (auto m : modes) mode_names.emplace_back(augment_label(m));
  for (auto t : transforms) transform_names.emplace_back(transform_label(t));
  j["transfer"] = {{"attacks", effective_attacks()},
                   {"modes", mode_names},
                   {"transform", transform_names},
                   {"window_n", window_n},
                   {"threshold", threshold},
                   {"parallelism", parallelism},
                   {"seed", transfer_seed},
                   {"compare_pairs", compare_pairs},
                   {"cells", cells}};
  j["model"] = {{"hidden", model.hidden_layers},   {"dropout", model.dropout_rate},
                {"learning_rate", model.learning_rate}, {"momentum", model.momentum},
                {"batch_size", model.batch_size},   {"epochs", model.epochs},
                {"seed", model.seed}};
  j["rfe"] = {{"step", rfe.step},
              {"tolerance", rfe.tolerance},
              {"l2", rfe.l2},
              {"max_benign", rfe.max_benign},
              {"seed", rfe.seed},
              {"singles", rfe_singles},
              {"pairs", rfe_pairs},
              {"truth", rfe_truth.generic_string()}};
  j["output"] = {{"dir", output_dir.generic_string()}, {"run_id", run_id}};
  return j;
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (body.front() == '[') {
      if (body.back() != ']') throw config_error(where + "malformed section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw config_error(where + "expected key = value");
    if (section.empty()) throw config_error(where + "key outside of a [section]");
    const std::string key = section + "." + std::string(trim(body.substr(0, eq)));
    try {
      set_value(c, key, body.substr(eq + 1));
    } catch (const Error& e) {
      throw config_error(where + e.what());
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw config_error("override must look like section.key=value");
  set_value(config, std::string(trim(assignment.substr(0, eq))), assignment.substr(eq + 1));
}

std::vector<std::filesystem::path> resolve_data_paths(const RunConfig& config) {
  const char* env = std::getenv(kDataDirEnv);
  const std::filesystem::path base = env ? env : "";
  std::vector<std::filesystem::path> out;
  if (config.data_paths.empty()) {
    if (base.empty()) throw config_error(std::string("no data.paths configured and ") + kDataDirEnv + " is not set");
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(base, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") out.push_back(entry.path());
    }
    if (ec) throw data_error("cannot list " + base.string() + ": " + ec.message());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw data_error("no .csv files in " + base.string());
    return out;
  }
  for (const auto& p : config.data_paths) out.push_back(p.is_relative() && !base.empty() ? base / p : p);
  return out;
}

}  // namespace atx
