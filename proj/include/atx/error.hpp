#pragma once

#include <stdexcept>
#include <string>

namespace atx {

/// Failure classes. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  kConfig,   // invalid run-config, parameters, or arguments
  kData,     // unreadable input, schema/label problems, empty classes
  kRuntime,  // training divergence and other failures during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::kConfig, what}; }
inline Error data_error(const std::string& what) { return {ErrorKind::kData, what}; }
inline Error runtime_error(const std::string& what) { return {ErrorKind::kRuntime, what}; }

}  // namespace atx
