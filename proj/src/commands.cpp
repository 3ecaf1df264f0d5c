#include "atx/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "atx/error.hpp"
#include "atx/rfe.hpp"
#include "atx/rng.hpp"

namespace atx {

namespace {

std::string pair_label(ClassId a, ClassId b) { return "(" + std::to_string(a) + "," + std::to_string(b) + ")"; }

RunManifest start_manifest(const RunConfig& config, const std::string& command) {
  RunManifest m;
  m.command = command;
  m.config = config.to_json();
  m.tool_version = kToolVersion;
  m.started_at = utc_now();
  m.seeds = {config.split_seed, config.transfer_seed, config.model.seed, config.rfe.seed};
  return m;
}

void finish_manifest(const ResultLayout& layout, RunManifest& m, const LoadedData& data) {
  m.dataset_rows = data.records->size();
  m.dataset_hash = data.hash;
  m.warnings.insert(m.warnings.end(), data.split.warnings.begin(), data.split.warnings.end());
  if (data.clean.total() > 0) {
    m.warnings.push_back("replaced " + std::to_string(data.clean.total()) + " non-finite feature values");
  }
  m.finished_at = utc_now();
  write_manifest(layout, m);
}

ResultLayout layout_for(const RunConfig& config) {
  ResultLayout layout{config.run_root()};
  layout.create();
  return layout;
}

std::vector<TransformSpec> transform_specs(const RunConfig& config) {
  std::vector<TransformSpec> out;
  for (auto kind : config.transforms) {
    out.push_back({kind, kind == TransformKind::kTemporalAverage ? config.window_n : 1});
  }
  return out;
}

void print_dataset_plan(const RunConfig& config, std::ostream& out) {
  const auto paths = resolve_data_paths(config);
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) throw data_error("dataset file not found: " + p.string());
    out << "  input " << p.string() << '\n';
  }
  if (!config.cache.empty()) out << "  cache " << config.cache.string() << '\n';
  out << "  output " << config.run_root().string() << '\n';
}

std::map<ClassId, std::vector<std::size_t>> read_truth(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text(path), nullptr, false);
  if (j.is_discarded() || !j.contains("informative")) {
    throw config_error("rfe.truth file " + path.string() + " has no 'informative' table");
  }
  std::map<ClassId, std::vector<std::size_t>> out;
  for (const auto& [key, feats] : j["informative"].items()) out[std::stoi(key)] = feats.get<std::vector<std::size_t>>();
  return out;
}

}  // namespace

const std::array<double, kClassCount>& reference_class_percent() {
  static const std::array<double, kClassCount> table = {80.3, 0.069, 4.52, 0.36,    8.16, 0.19,  0.2,     0.28,
                                                        0.00038, 0.0012, 5.61, 0.2, 0.053, 0.00074, 0.023};
  return table;
}

LoadedData load_and_split(const RunConfig& config) {
  const auto paths = resolve_data_paths(config);
  auto cleaned = load_dataset(paths, config.cache);
  if (cleaned.records.empty()) throw data_error("dataset is empty");
  LoadedData data;
  data.clean = cleaned.report;
  data.hash = dataset_hash(cleaned.records);
  data.records = std::make_shared<const RecordSet>(std::move(cleaned.records));
  data.split = split(data.records, config.fractions, config.split_seed);
  return data;
}

std::optional<IngestSummary> cmd_ingest(const RunConfig& config, const CommandIo& io, bool dry_run) {
  config.validate();
  if (dry_run) {
    io.out << "plan: ingest\n";
    print_dataset_plan(config, io.out);
    return std::nullopt;
  }
  auto manifest = start_manifest(config, "ingest");
  const auto data = load_and_split(config);
  const auto layout = layout_for(config);

  IngestSummary summary;
  summary.rows = data.records->size();
  summary.clean = data.clean;
  summary.histogram = class_histogram(*data.records);

  std::ostringstream table;
  table << "class,name,count,percent,reference_percent,deviation_pp\n";
  io.out << std::left << std::setw(6) << "class" << std::setw(28) << "name" << std::right << std::setw(10) << "count"
         << std::setw(11) << "percent" << std::setw(11) << "reference" << '\n';
  for (ClassId c = 0; c < kClassCount; ++c) {
    const auto it = summary.histogram.find(c);
    const ClassShare share = it == summary.histogram.end() ? ClassShare{} : it->second;
    const double pct = 100.0 * share.fraction;
    const double ref = reference_class_percent()[static_cast<std::size_t>(c)];
    const double dev = std::abs(pct - ref);
    summary.max_deviation_pp = std::max(summary.max_deviation_pp, dev);
    table << c << ',' << csv_escape(class_name(c)) << ',' << share.count << ',' << format_double(pct) << ','
          << format_double(ref) << ',' << format_double(dev) << '\n';
    io.out << std::left << std::setw(6) << c << std::setw(28) << class_name(c) << std::right << std::setw(10)
           << share.count << std::setw(10) << std::fixed << std::setprecision(4) << pct << '%' << std::setw(10)
           << ref << '%' << '\n';
  }
  io.out.unsetf(std::ios::floatfield);
  io.out << "rows " << summary.rows << ", non-finite values replaced " << summary.clean.total()
         << ", max deviation from reference " << summary.max_deviation_pp << " pp\n";

  const auto path = layout.matrices() / "class_histogram.csv";
  write_text(path, table.str());
  manifest.artifacts.push_back(path);
  finish_manifest(layout, manifest, data);
  return summary;
}

std::optional<MulticlassSummary> cmd_multiclass(const RunConfig& config, const CommandIo& io, bool dry_run) {
  config.validate();
  ModelConfig model = config.model;
  model.output_classes = kClassCount;
  model.validate();
  if (dry_run) {
    io.out << "plan: multiclass (" << kClassCount << "-class head, " << model.epochs << " epochs)\n";
    print_dataset_plan(config, io.out);
    return std::nullopt;
  }
  auto manifest = start_manifest(config, "multiclass");
  const auto data = load_and_split(config);
  const auto layout = layout_for(config);

  const auto scaler = standardize_fit(*data.records, data.split.train);
  const auto prepared = prepare_split(data.split, TransformSpec{}, scaler);
  const auto train_set = to_labeled(prepared.gather(Partition::kTrain));
  const auto val_set = to_labeled(prepared.gather(Partition::kValidation));
  const auto test_set = to_labeled(prepared.gather(Partition::kTest));
  const auto params = train(model, train_set, val_set);

  MulticlassSummary summary;
  summary.result = evaluate(params, test_set);
  for (auto a : config.effective_attacks()) {
    if (summary.result.support[static_cast<std::size_t>(a)] == 0) continue;
    summary.evaluated.push_back(a);
    if (summary.result.recall[static_cast<std::size_t>(a)] >= 0.98) ++summary.attacks_at_98;
  }

  for (const auto& p : emit_confusion(layout, "multiclass", summary.result, false)) manifest.artifacts.push_back(p);
  for (const auto& p : emit_confusion(layout, "multiclass_percent", summary.result, true)) {
    manifest.artifacts.push_back(p);
  }
  const auto model_path = layout.root / "multiclass.model";
  save_model(model_path, params);
  manifest.artifacts.push_back(model_path);

  for (ClassId c = 0; c < kClassCount; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (summary.result.support[i] == 0) continue;
    io.out << std::setw(3) << c << ' ' << std::left << std::setw(28) << class_name(c) << std::right
           << " recall " << format_double(summary.result.recall[i]) << " (n=" << summary.result.support[i] << ")\n";
  }
  io.out << "accuracy " << format_double(summary.result.accuracy) << "; " << summary.attacks_at_98 << " of "
         << summary.evaluated.size() << " evaluated attack classes at recall >= 0.98\n";
  finish_manifest(layout, manifest, data);
  return summary;
}

std::vector<TransferMatrix> cmd_transfer(const RunConfig& config, const CommandIo& io, bool dry_run) {
  config.validate();
  const auto attacks = config.effective_attacks();
  const auto transforms = transform_specs(config);
  const CellFilter filter(config.cells.begin(), config.cells.end());
  const std::size_t cells = filter.empty() ? attacks.size() * (attacks.size() - 1) : filter.size();
  if (dry_run) {
    io.out << "plan: transfer over " << attacks.size() << " attacks, " << cells << " cells per matrix, parallelism "
           << config.parallelism << '\n';
    for (auto mode : config.modes) {
      for (const auto& t : transforms) io.out << "  matrix " << regime_name(mode, t) << '\n';
    }
    print_dataset_plan(config, io.out);
    return {};
  }
  auto manifest = start_manifest(config, "transfer");
  const auto data = load_and_split(config);
  const auto layout = layout_for(config);

  std::vector<TransferMatrix> matrices;
  for (auto mode : config.modes) {
    for (const auto& t : transforms) {
      TransferSettings settings;
      settings.plan.mode = mode;
      settings.plan.k_neighbors = config.k_neighbors;
      settings.plan.seed = config.transfer_seed;
      settings.transform = t;
      settings.model = config.model;
      settings.seed = config.transfer_seed;
      io.out << "matrix " << regime_name(mode, t) << " ..." << std::flush;
      auto matrix = build_matrix(data.split, attacks, settings, config.parallelism, filter);
      io.out << " done (" << matrix.failed_count() << " failed)\n";

      for (const auto& p : emit_transfer_heatmap(layout, matrix)) manifest.artifacts.push_back(p);
      const auto relations = classify_relations(matrix, config.threshold);
      for (const auto& p : emit_relations(layout, relations, matrix)) manifest.artifacts.push_back(p);
      for (const auto& c : matrix.cells) {
        if (c.status == CellStatus::kFailed) {
          manifest.failures.push_back(regime_name(mode, t) + " " + pair_label(c.train_attack, c.test_attack) + ": " +
                                      c.error);
        }
      }
      matrices.push_back(std::move(matrix));
    }
  }
  if (!config.compare_pairs.empty()) {
    for (const auto& p : emit_comparison(layout, config.compare_pairs, matrices)) manifest.artifacts.push_back(p);
  }
  finish_manifest(layout, manifest, data);
  if (!manifest.failures.empty()) {
    io.err << manifest.failures.size() << " transfer cell(s) failed; see manifest\n";
  }
  return matrices;
}

std::optional<RfeSummary> cmd_rfe(const RunConfig& config, const CommandIo& io, bool dry_run) {
  config.validate();
  const auto singles = config.rfe_singles.empty() ? config.effective_attacks() : config.rfe_singles;
  if (dry_run) {
    io.out << "plan: rfe over " << singles.size() << " single attacks and " << config.rfe_pairs.size() << " pairs\n";
    for (auto a : singles) io.out << "  single " << a << '\n';
    for (const auto& [a, b] : config.rfe_pairs) io.out << "  pair " << pair_label(a, b) << '\n';
    print_dataset_plan(config, io.out);
    return std::nullopt;
  }
  std::map<ClassId, std::vector<std::size_t>> truth;
  if (!config.rfe_truth.empty()) truth = read_truth(config.rfe_truth);

  auto manifest = start_manifest(config, "rfe");
  const auto data = load_and_split(config);
  const auto layout = layout_for(config);

  // Rankings are independent; each one runs its rounds sequentially.
  struct Job {
    std::string name;
    ClassId a, b;
  };
  std::vector<Job> jobs;
  for (auto a : singles) jobs.push_back({"single_" + std::to_string(a), a, a});
  for (const auto& [a, b] : config.rfe_pairs) {
    jobs.push_back({"pair_" + std::to_string(a) + "_" + std::to_string(b), a, b});
  }
  std::vector<FeatureRanking> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        const auto& j = jobs[k];
        results[k] = j.a == j.b ? rfe_single(data.split, j.a, config.rfe) : rfe_pair(data.split, j.a, j.b, config.rfe);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(static_cast<std::size_t>(config.parallelism), 1, jobs.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RfeSummary summary;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    io.out << jobs[k].name << ": " << results[k].selected.size() << " features selected\n";
    summary.rankings.push_back({jobs[k].name, std::move(results[k])});
  }
  for (const auto& p : emit_rfe(layout, summary.rankings)) manifest.artifacts.push_back(p);

  if (!config.rfe_pairs.empty()) {
    // Pair counts laid out one column per pair.
    std::ostringstream head, row;
    head << "attack_pair";
    row << "selected_features";
    for (const auto& nr : summary.rankings) {
      if (nr.ranking.attacks.size() != 2) continue;
      head << ',' << csv_escape(pair_label(nr.ranking.attacks[0], nr.ranking.attacks[1]));
      row << ',' << nr.ranking.selected.size();
    }
    const auto path = layout.rfe() / "pair_counts.csv";
    write_text(path, head.str() + "\n" + row.str() + "\n");
    manifest.artifacts.push_back(path);
  }

  if (!truth.empty()) {
    std::ostringstream table;
    table << "name,planted,recovered,selected\n";
    for (const auto& nr : summary.rankings) {
      std::set<std::size_t> planted;
      bool known = true;
      for (auto a : nr.ranking.attacks) {
        const auto it = truth.find(a);
        if (it == truth.end()) {
          known = false;
          break;
        }
        planted.insert(it->second.begin(), it->second.end());
      }
      if (!known) continue;
      RfeRecovery rec{nr.name, planted.size(), 0, nr.ranking.selected.size()};
      for (auto f : nr.ranking.selected) rec.recovered += planted.count(f);
      table << nr.name << ',' << rec.planted << ',' << rec.recovered << ',' << rec.selected << '\n';
      io.out << nr.name << ": recovered " << rec.recovered << " of " << rec.planted << " planted features\n";
      summary.recovery.push_back(rec);
    }
    const auto path = layout.rfe() / "recovery.csv";
    write_text(path, table.str());
    manifest.artifacts.push_back(path);
  }
  finish_manifest(layout, manifest, data);
  return summary;
}

Artifacts cmd_report(const RunConfig& config, const CommandIo& io, bool dry_run) {
  config.validate();
  const ResultLayout layout{config.run_root()};
  std::vector<std::filesystem::path> tables;
  if (std::filesystem::is_directory(layout.matrices())) {
    for (const auto& entry : std::filesystem::directory_iterator(layout.matrices())) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("transfer_") && entry.path().extension() == ".csv") tables.push_back(entry.path());
    }
  }
  std::sort(tables.begin(), tables.end());
  if (tables.empty()) throw data_error("no transfer tables under " + layout.matrices().string());
  if (dry_run) {
    io.out << "plan: report from " << tables.size() << " transfer table(s)\n";
    for (const auto& t : tables) io.out << "  " << t.string() << '\n';
    return {};
  }

  // Regimes are rendered in config order when listed there, else by file name.
  std::vector<TransferMatrix> matrices;
  for (const auto& t : tables) matrices.push_back(read_transfer_table(t));
  std::vector<std::string> order;
  for (auto mode : config.modes) {
    for (const auto& t : transform_specs(config)) order.push_back(regime_name(mode, t));
  }
  const auto rank = [&](const TransferMatrix& m) {
    const auto it = std::find(order.begin(), order.end(), regime_name(m.mode, m.transform));
    return static_cast<std::size_t>(it - order.begin());
  };
  std::stable_sort(matrices.begin(), matrices.end(),
                   [&](const TransferMatrix& a, const TransferMatrix& b) { return rank(a) < rank(b); });

  auto manifest = start_manifest(config, "report");
  Artifacts produced;
  for (const auto& m : matrices) {
    const auto svg = layout.figures() / ("transfer_" + regime_name(m.mode, m.transform) + ".svg");
    write_text(svg, transfer_heatmap_svg(m));
    produced.push_back(svg);
    const auto relations = classify_relations(m, config.threshold);
    for (const auto& p : emit_relations(layout, relations, m)) produced.push_back(p);
  }
  if (!config.compare_pairs.empty()) {
    for (const auto& p : emit_comparison(layout, config.compare_pairs, matrices)) produced.push_back(p);
  }
  for (const auto& p : produced) io.out << "wrote " << p.string() << '\n';
  manifest.artifacts = produced;
  manifest.finished_at = utc_now();
  write_manifest(layout, manifest);
  return produced;
}

FixtureKind parse_fixture_kind(std::string_view text) {
  const auto t = normalize_label(text);
  if (t == "cicids") return FixtureKind::kCicids;
  if (t == "planted") return FixtureKind::kPlanted;
  throw config_error("unknown fixture kind '" + std::string(text) + "' (expected cicids or planted)");
}

void cmd_fixtures_generate(FixtureKind kind, const FixtureSpec& spec, const std::filesystem::path& dir,
                           const CommandIo& io) {
  Fixture fx;
  if (kind == FixtureKind::kCicids) {
    fx = cicids_like_fixture(spec);
  } else {
    // Two attacks with disjoint planted feature sets.
    Rng rng(derive_seed({spec.seed, 0x91a7}));
    std::vector<std::size_t> features(kFeatureCount);
    for (std::size_t f = 0; f < kFeatureCount; ++f) features[f] = f;
    rng.shuffle(features.begin(), features.end());
    std::vector<std::size_t> a(features.begin(), features.begin() + 5), b(features.begin() + 5, features.begin() + 10);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t benign = std::max<std::size_t>(spec.rows / 2, 1);
    const std::size_t attack = std::max<std::size_t>(spec.rows / 4, 1);
    fx = planted_fixture({{3, a}, {2, b}}, benign, attack, spec.separation, spec.seed);
  }
  std::filesystem::create_directories(dir);
  write_csv(dir / "fixture.csv", fx.records);
  write_text(dir / "truth.json", fx.truth().dump(2) + "\n");
  io.out << "wrote " << fx.records.size() << " rows to " << (dir / "fixture.csv").string() << '\n';
}

}  // namespace atx
