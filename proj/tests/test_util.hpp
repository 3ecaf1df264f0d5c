#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <unistd.h>

#include "atx/ingest.hpp"
#include "atx/nn.hpp"

namespace atx::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "atx") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Small, fast network for tests.
inline ModelConfig small_model(int epochs = 8, std::uint64_t seed = 3) {
  ModelConfig c;
  c.hidden_layers = {32, 16};
  c.dropout_rate = 0.1;
  c.learning_rate = 0.01;
  c.momentum = 0.9;
  c.batch_size = 64;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

inline DatasetSplit split_records(RecordSet records, std::uint64_t seed = 1, SplitFractions f = {}) {
  return split(std::make_shared<const RecordSet>(std::move(records)), f, seed);
}

}  // namespace atx::testing
