// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sslaudio {

// Broad failure classes. The CLI maps each to a distinct exit code.
enum class ErrorCategory { kConfig, kData, kNumeric, kIo, kContract };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

// Tensor shapes do not fit the requested primitive.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorCategory::kContract, "dimension error: " + what) {}
};

// A caller broke an interface precondition.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ErrorCategory::kContract, "contract error: " + what) {}
};

// NaN/Inf produced or consumed.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorCategory::kNumeric, "numeric error: " + what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::kConfig, "config error: " + what) {}
};

// Bad input data (empty waveform, wrong sample rate, unlabeled example...).
class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error(ErrorCategory::kData, "input error: " + what) {}
};

// Unsupported file encoding (WAV header fields).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorCategory::kData, "format error: " + what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(ErrorCategory::kData,
              "parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Checkpoint contents fail integrity checks.
class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& what)
      : Error(ErrorCategory::kData, "corrupt checkpoint: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(ErrorCategory::kIo, "I/O error: " + what) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what)
      : Error(ErrorCategory::kData, "evaluation error: " + what) {}
};

}  // namespace sslaudio
