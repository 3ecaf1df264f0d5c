#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "atx/nn.hpp"
#include "atx/rfe.hpp"
#include "atx/transfer.hpp"

namespace atx {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Minimal RFC-4180 CSV helpers (quotes fields containing , " or newlines).
std::string csv_escape(std::string_view field);
std::vector<std::string> csv_split(std::string_view line);

/// results/<run-id>/{manifest.json, matrices/, confusion/, rfe/, figures/}
struct ResultLayout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path matrices() const { return root / "matrices"; }
  std::filesystem::path confusion() const { return root / "confusion"; }
  std::filesystem::path rfe() const { return root / "rfe"; }
  std::filesystem::path figures() const { return root / "figures"; }
  void create() const;
};

/// Paths of the files one emit call produced.
using Artifacts = std::vector<std::filesystem::path>;

/// Row-percentage view of a confusion matrix (rows with zero support stay 0).
std::vector<std::vector<double>> confusion_percentages(const EvalResult& result);

/// Confusion table (counts, or row percentages when `normalize`) plus a
/// heatmap image with class labels.
Artifacts emit_confusion(const ResultLayout& out, const std::string& name, const EvalResult& result, bool normalize);

// Transfer matrix table: one row per cell, fixed column order
//   train_attack,test_attack,mode,transform,window_n,status,attack_recall,
//   benign_recall,train_benign,train_attack_count,test_benign,
//   test_attack_count,seed,error
std::string transfer_table(const TransferMatrix& matrix);
TransferMatrix parse_transfer_table(std::string_view text);
TransferMatrix read_transfer_table(const std::filesystem::path& path);

/// File stem for a regime, e.g. "bootstrap_tavg5".
std::string regime_name(AugmentMode mode, const TransformSpec& transform);

std::string transfer_heatmap_svg(const TransferMatrix& matrix);

/// Table + heatmap for one matrix.
Artifacts emit_transfer_heatmap(const ResultLayout& out, const TransferMatrix& matrix);

/// One row per training attack: the attacks it transfers to, each annotated
/// sym/asym, with the matrix recall behind it.
std::string relations_table(const std::vector<TransferRelation>& relations, const TransferMatrix& matrix);
Artifacts emit_relations(const ResultLayout& out, const std::vector<TransferRelation>& relations,
                         const TransferMatrix& matrix);

/// Attack recall of selected ordered pairs across several regimes (grouped bars).
Artifacts emit_comparison(const ResultLayout& out, const std::vector<std::pair<ClassId, ClassId>>& pairs,
                          const std::vector<TransferMatrix>& matrices);

/// Ranking table: feature_index,feature_name,elimination_round,selected,importance
std::string ranking_table(const FeatureRanking& ranking);
/// Retained-set size vs. validation F1.
std::string ranking_scores_table(const FeatureRanking& ranking);

struct NamedRanking {
  std::string name;  // e.g. "single_3" or "pair_3_2"
  FeatureRanking ranking;
};

/// Per-ranking tables plus a count summary (one row per ranking, in
/// attack-pair layout) and, for every pair, the features it shares with its
/// members' single-attack rankings.
Artifacts emit_rfe(const ResultLayout& out, const std::vector<NamedRanking>& rankings);

struct RunManifest {
  std::string command;             // subcommand that produced this entry
  nlohmann::json config;           // snapshot of the effective configuration
  std::size_t dataset_rows = 0;
  std::string dataset_hash;        // SHA-256 over the cleaned records
  std::vector<std::uint64_t> seeds;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
  Artifacts artifacts;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;

  nlohmann::json to_json(const std::filesystem::path& root) const;
};

/// SHA-256 hex digest.
std::string sha256_hex(std::string_view bytes);
/// Content hash of a record set (features and labels, little-endian bytes).
std::string dataset_hash(const RecordSet& records);

/// Records `manifest` under commands/<command> in manifest.json, keeping
/// entries written earlier by other subcommands of the same run.
void write_manifest(const ResultLayout& out, const RunManifest& manifest);

/// UTC timestamp, ISO-8601.
std::string utc_now();

/// Writes `content` only, replacing any existing file.
void write_text(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

}  // namespace atx
