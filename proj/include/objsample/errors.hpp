#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace objsample {

/// Base for every error raised by the library. Callers that only care about
/// "did it work" catch this; the subclasses carry the specific failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TruncatedRecord : public Error {
 public:
  TruncatedRecord(std::size_t byte_len, std::size_t record_size)
      : Error("byte length " + std::to_string(byte_len) +
              " is not a multiple of the record size " +
              std::to_string(record_size)),
        byte_len(byte_len),
        record_size(record_size) {}
  std::size_t byte_len;
  std::size_t record_size;
};

class NonFinitePoint : public Error {
 public:
  explicit NonFinitePoint(std::size_t index)
      : Error("point " + std::to_string(index) + " has a non-finite coordinate"),
        index(index) {}
  std::size_t index;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t record, std::size_t line = 0)
      : Error(what), record(record), line(line) {}
  std::size_t record;
  std::size_t line;  // 0 when unknown
};

class InvalidBox : public Error {
 public:
  InvalidBox(const std::string& what, std::size_t record)
      : Error(what), record(record) {}
  std::size_t record;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class EmptyCloud : public Error {
 public:
  EmptyCloud() : Error("operation requires a non-empty point cloud") {}
};

class EmptyTrainingSet : public Error {
 public:
  EmptyTrainingSet() : Error("training set is empty") {}
};

class RegionOutOfRange : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class InfeasibleTotal : public Error {
 public:
  using Error::Error;
};

class ClassificationMismatch : public Error {
 public:
  using Error::Error;
};

class NoObjectPoints : public Error {
 public:
  NoObjectPoints() : Error("no point lies inside any ground-truth box") {}
};

class NoBoxes : public Error {
 public:
  NoBoxes() : Error("scene has no ground-truth boxes") {}
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

/// Bad command-line or config-file input. `flag` names the offending option.
class ConfigError : public Error {
 public:
  ConfigError(std::string flag, const std::string& what)
      : Error(what), flag(std::move(flag)) {}
  std::string flag;
};

}  // namespace objsample
