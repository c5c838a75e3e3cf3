#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rcpose {

enum class ErrorKind {
  kInvalidArgument,
  kFormat,
  kIo,
  kDegenerate,
  kConfiguration,
  kNumeric,
};

// Base of every error raised by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kInvalidArgument, what) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& what)
      : Error(ErrorKind::kConfiguration, what) {}
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(ErrorKind::kIo, what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Malformed binary/text payload. offset is the byte position of the problem.
class FormatError : public Error {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::kFormat,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Geometry or data that cannot support an estimate: empty mesh, empty mask,
// rank-deficient features, no visible candidate.
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorKind::kDegenerate, what) {}
};

class NonFiniteGradientError : public Error {
 public:
  NonFiniteGradientError(int probe, const std::string& what)
      : Error(ErrorKind::kNumeric,
              what + " (probe " + std::to_string(probe) + ")"),
        probe_(probe) {}
  int probe() const noexcept { return probe_; }

 private:
  int probe_;
};

class SamplingExhaustedError : public Error {
 public:
  explicit SamplingExhaustedError(const std::string& what)
      : Error(ErrorKind::kDegenerate, what) {}
};

class IncompleteRecordError : public Error {
 public:
  explicit IncompleteRecordError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Pipeline error tagged with the stage that raised it; keeps the original kind.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& inner)
      : Error(inner.kind(), "[" + stage + "] " + inner.what()),
        stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace rcpose
