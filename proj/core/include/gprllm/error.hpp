#pragma once

#include <stdexcept>
#include <string>

namespace gprllm {

/// Broad failure classes. The CLI maps each onto a process exit code.
enum class ErrorKind {
  config,           // invalid parameters or missing files
  data,             // malformed or inconsistent input data
  judge_transport,  // relevance judge unreachable or returned garbage
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class JudgeError : public Error {
 public:
  explicit JudgeError(const std::string& what) : Error(ErrorKind::judge_transport, what) {}
};

/// Process exit code for an error kind: config 1, data 2, judge 3.
constexpr int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
      return 1;
    case ErrorKind::data:
      return 2;
    case ErrorKind::judge_transport:
      return 3;
  }
  return 1;
}

}  // namespace gprllm
