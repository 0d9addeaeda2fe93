#pragma once

#include <stdexcept>
#include <string>

namespace ntrojan {

/// Broad failure class; the CLI maps each to an exit status.
enum class ErrorClass {
  kUsage,     // bad command line or configuration document
  kData,      // unreadable or malformed input files
  kContract,  // violated preconditions, shape/size/range problems, training errors
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorClass::kUsage, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorClass::kData, "format error: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::kData, "i/o error: " + what) {}
};

class PairingError : public Error {
 public:
  explicit PairingError(const std::string& what) : Error(ErrorClass::kData, "pairing error: " + what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorClass::kContract, "shape error: " + what) {}
};

class SizeError : public Error {
 public:
  explicit SizeError(const std::string& what) : Error(ErrorClass::kContract, "size error: " + what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error(ErrorClass::kContract, "range error: " + what) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(ErrorClass::kContract, "contract error: " + what) {}
};

/// A one-vs-rest training set lacks positives or negatives.
class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what)
      : Error(ErrorClass::kContract, "degenerate data: " + what) {}
};

/// Gate training data does not cover every class.
class CoverageError : public Error {
 public:
  explicit CoverageError(const std::string& what)
      : Error(ErrorClass::kContract, "coverage error: " + what) {}
};

}  // namespace ntrojan
