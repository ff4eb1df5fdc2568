#pragma once

#include <stdexcept>
#include <string>

namespace dcan {

// Base of every error the toolkit throws. `code()` is a short stable token
// used by the CLI for machine-parsable error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training", what) {}
};

class CalibrationError : public Error {
 public:
  explicit CalibrationError(const std::string& what) : Error("calibration", what) {}
};

class SpecError : public Error {
 public:
  explicit SpecError(const std::string& what) : Error("spec", what) {}
};

class LengthError : public Error {
 public:
  explicit LengthError(const std::string& what) : Error("length", what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse", what) {}
};

class FrameAssemblyError : public Error {
 public:
  explicit FrameAssemblyError(const std::string& what) : Error("frame-assembly", what) {}
};

class IngestError : public Error {
 public:
  explicit IngestError(const std::string& what) : Error("ingest", what) {}
};

class RoutingError : public Error {
 public:
  explicit RoutingError(const std::string& what) : Error("routing", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

// Binary file (checkpoint / frame file) load failures.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format", what) {}

 protected:
  FormatError(std::string code, const std::string& what) : Error(std::move(code), what) {}
};

class TruncatedFileError : public FormatError {
 public:
  explicit TruncatedFileError(const std::string& what) : FormatError("truncated", what) {}
};

class VersionMismatchError : public FormatError {
 public:
  explicit VersionMismatchError(const std::string& what) : FormatError("version", what) {}
};

}  // namespace dcan
