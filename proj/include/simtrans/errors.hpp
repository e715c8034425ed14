#pragma once

#include <stdexcept>
#include <string>

namespace simtrans {

// Bad arguments to an operation (shape mismatch, invalid axis, malformed tag, ...).
class ArgumentError : public std::invalid_argument {
 public:
  explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent input data (line count mismatch, over-long sentence, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure (missing or unreadable file).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Corrupt or incompatible serialized artifact (checkpoint, BPE model, vocab).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite math is required.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace simtrans
