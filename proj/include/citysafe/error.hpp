#pragma once

#include <stdexcept>
#include <string>

namespace citysafe {

enum class ErrorCode {
  invalid_argument = 1,
  io,
  schema,
  empty_dataset,
  configuration,
  load,
  geocoding,
  parameter,
  undefined_score,
  no_valid_clustering,
  split,
  fit,
  evaluation,
  unknown_metric,
  stage,
  refused,
  internal,
};

/// Base of every error the library throws. The code maps 1:1 onto the C API
/// status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the pipeline when a stage aborts; carries the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCode cause, const std::string& what)
      : Error(ErrorCode::stage, "stage '" + stage + "' failed: " + what),
        stage_(std::move(stage)),
        cause_(cause) {}

  const std::string& stage() const noexcept { return stage_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  std::string stage_;
  ErrorCode cause_;
};

}  // namespace citysafe
