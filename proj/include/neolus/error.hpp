#pragma once

#include <stdexcept>
#include <string>

namespace neolus {

/// Root of every error the library throws. `kind()` is a stable machine-readable tag used by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error("argument_error", msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config_error", msg) {}
};

/// Manifest / split / report parse failures. Row is 1-based over data rows (0 = not row specific).
class LoadError : public Error {
 public:
  LoadError(const std::string& msg, int row = 0, std::string field = {})
      : Error("load_error", msg), row_(row), field_(std::move(field)) {}
  int row() const noexcept { return row_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int row_;
  std::string field_;
};

class IngestionError : public Error {
 public:
  IngestionError(std::string video_id, const std::string& msg)
      : Error("ingestion_error", video_id + ": " + msg), video_id_(std::move(video_id)) {}
  const std::string& video_id() const noexcept { return video_id_; }

 private:
  std::string video_id_;
};

/// Spearman on a constant vector.
class UndefinedCorrelation : public Error {
 public:
  explicit UndefinedCorrelation(const std::string& msg) : Error("undefined_correlation", msg) {}
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(const std::string& msg) : Error("training_diverged", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io_error", msg) {}
};

}  // namespace neolus
