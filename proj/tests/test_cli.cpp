// End-to-end runs of the atx binary (path in ATX_BIN) on generated fixtures.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "atx/report.hpp"
#include "test_util.hpp"

using atx::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run atx_run(const TempDir& dir, const std::string& args, const std::string& env = "") {
  const char* bin = std::getenv("ATX_BIN");
  if (!bin) throw std::runtime_error("ATX_BIN not set");
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() + "' && env -u ATX_DATA_DIR " + env + " '" + bin + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = atx::read_text(out);
  r.err = atx::read_text(err);
  return r;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmallModel = R"(
[model]
hidden = 32, 16
dropout = 0.1
learning_rate = 0.01
batch_size = 64
epochs = 4
seed = 2
)";

}  // namespace

TEST(Cli, FixtureIngestHistogramMatchesGenerator) {
  TempDir dir;
  ASSERT_EQ(atx_run(dir, "fixtures generate --rows 4000 --min-per-class 30 --seed 3 -o fx").code, 0);
  write(dir / "run.cfg", "[data]\npaths = fx/fixture.csv\n[output]\ndir = results\nrun_id = r1\n");
  const auto r = atx_run(dir, "ingest -c run.cfg");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("BENIGN"), std::string::npos);

  const auto truth = nlohmann::json::parse(atx::read_text(dir / "fx/truth.json"));
  std::istringstream table(atx::read_text(dir / "results/r1/matrices/class_histogram.csv"));
  std::string line;
  std::getline(table, line);
  int rows = 0;
  while (std::getline(table, line)) {
    const auto f = atx::csv_split(line);
    EXPECT_EQ(std::stoul(f[2]), truth["counts"][f[0]].get<std::size_t>()) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 15);
  const auto manifest = nlohmann::json::parse(atx::read_text(dir / "results/r1/manifest.json"));
  EXPECT_EQ(manifest["commands"]["ingest"]["dataset"]["rows"].get<std::size_t>(),
            [&] {
              std::size_t n = 0;
              for (const auto& [k, v] : truth["counts"].items()) n += v.get<std::size_t>();
              return n;
            }());
}

TEST(Cli, ExitCodesByFailureClass) {
  TempDir dir;
  write(dir / "missing.cfg", "[data]\npaths = /nonexistent/file.csv\n");
  auto r = atx_run(dir, "ingest -c missing.cfg");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("nonexistent"), std::string::npos);

  write(dir / "typo.cfg", "[transfer]\nthreshhold = 0.5\n");
  r = atx_run(dir, "transfer -c typo.cfg");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("threshhold"), std::string::npos);

  EXPECT_EQ(atx_run(dir, "frobnicate").code, 2);
  EXPECT_EQ(atx_run(dir, "transfer --set model.epochs=zero").code, 2);
  EXPECT_EQ(atx_run(dir, "--help").code, 0);
}

TEST(Cli, DryRunPrintsPlanWithoutWork) {
  TempDir dir;
  ASSERT_EQ(atx_run(dir, "fixtures generate --rows 1000 --min-per-class 10 -o fx").code, 0);
  write(dir / "run.cfg",
        "[data]\npaths = fx/fixture.csv\n[transfer]\nmodes = real, smote\ntransform = none, tavg\n"
        "[output]\nrun_id = dry\n");
  const auto r = atx_run(dir, "transfer -c run.cfg --dry-run");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("110 cells per matrix"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("smote_tavg5"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(dir / "results/dry"));
  EXPECT_EQ(atx_run(dir, "rfe -c run.cfg --dry-run --set rfe.pairs=3:2").code, 0);
  EXPECT_EQ(atx_run(dir, "multiclass -c run.cfg --dry-run").code, 0);
}

TEST(Cli, SingleCellTransferAndByteIdenticalReport) {
  TempDir dir;
  ASSERT_EQ(atx_run(dir, "fixtures generate --rows 3000 --min-per-class 80 --seed 5 -o fx").code, 0);
  write(dir / "run.cfg", std::string("[data]\npaths = fx/fixture.csv\n[transfer]\nattacks = 3, 5\ncells = 3:5\n") +
                             "compare_pairs = 3:5\n[output]\nrun_id = one\n" + kSmallModel);
  const auto r = atx_run(dir, "transfer -c run.cfg");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto root = dir / "results/one";
  const auto m = atx::read_transfer_table(root / "matrices/transfer_real_none.csv");
  EXPECT_EQ(m.find(3, 5)->status, atx::CellStatus::kOk);
  EXPECT_EQ(m.find(5, 3)->status, atx::CellStatus::kNotRun);

  const auto svg = atx::read_text(root / "figures/transfer_real_none.svg");
  const auto rel = atx::read_text(root / "matrices/relations_real_none.csv");
  const auto cmp = atx::read_text(root / "figures/comparison.svg");
  std::filesystem::remove(root / "figures/transfer_real_none.svg");
  std::filesystem::remove(root / "figures/comparison.svg");
  const auto rep = atx_run(dir, "report -c run.cfg");
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_EQ(atx::read_text(root / "figures/transfer_real_none.svg"), svg);
  EXPECT_EQ(atx::read_text(root / "matrices/relations_real_none.csv"), rel);
  EXPECT_EQ(atx::read_text(root / "figures/comparison.svg"), cmp);
  const auto manifest = nlohmann::json::parse(atx::read_text(root / "manifest.json"));
  EXPECT_TRUE(manifest["commands"].contains("transfer"));
  EXPECT_TRUE(manifest["commands"].contains("report"));
}

TEST(Cli, MulticlassSummaryMatchesConfusionTable) {
  TempDir dir;
  ASSERT_EQ(atx_run(dir, "fixtures generate --rows 6000 --min-per-class 200 --separation 5 --seed 2 -o fx").code, 0);
  write(dir / "run.cfg", std::string("[data]\npaths = fx/fixture.csv\n[output]\nrun_id = mc\n") + kSmallModel +
                             "epochs = 12\n");
  const auto r = atx_run(dir, "multiclass -c run.cfg");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream table(atx::read_text(dir / "results/mc/confusion/multiclass.csv"));
  std::string line;
  std::getline(table, line);
  std::size_t correct = 0, total = 0, at_98 = 0;
  while (std::getline(table, line)) {
    const auto f = atx::csv_split(line);
    const auto cls = std::stoul(f[0]);
    const double recall = std::stod(f.back());
    // DoS classes share an offset in the fixture and may trade a few records.
    EXPECT_GE(recall, 0.9) << line;
    correct += std::stoul(f[1 + cls]);
    total += std::stoul(f[f.size() - 2]);
    if (cls != 0 && cls != 8 && cls != 9 && cls != 13 && recall >= 0.98) ++at_98;
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.98);
  EXPECT_NE(r.out.find(std::to_string(at_98) + " of 11 evaluated attack classes"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir / "results/mc/multiclass.model"));
  EXPECT_TRUE(std::filesystem::exists(dir / "results/mc/figures/confusion_multiclass.svg"));
}

TEST(Cli, RfeOnPlantedFixtureReportsRecovery) {
  TempDir dir;
  ASSERT_EQ(atx_run(dir, "fixtures generate --kind planted --rows 8000 --separation 1.5 --seed 4 -o fx").code, 0);
  write(dir / "run.cfg",
        "[data]\npaths = fx/fixture.csv\n[rfe]\nsingles = 3, 2\npairs = 3:2\nstep = 0.1\ntruth = fx/truth.json\n"
        "[output]\nrun_id = rfe\n");
  const auto r = atx_run(dir, "rfe -c run.cfg");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream table(atx::read_text(dir / "results/rfe/rfe/recovery.csv"));
  std::string line;
  std::getline(table, line);
  int rows = 0;
  while (std::getline(table, line)) {
    const auto f = atx::csv_split(line);
    EXPECT_GE(std::stoi(f[2]), std::stoi(f[1]) - 1) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_TRUE(std::filesystem::exists(dir / "results/rfe/rfe/pair_counts.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "results/rfe/rfe/common_features.csv"));
}
