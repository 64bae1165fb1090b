#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace beliefaudit {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Evidence has zero marginal likelihood under the prior's support.
// `step` is set by cumulative folds (1-based); 0 means a single update.
class ImpossibleEvidenceError : public Error {
 public:
  explicit ImpossibleEvidenceError(const std::string& what, std::size_t step = 0)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

class StepSelectionError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  IngestError(std::size_t record, std::string field, const std::string& detail)
      : Error("record " + std::to_string(record) + ", field '" + field + "': " + detail),
        record_(record),
        field_(std::move(field)) {}
  std::size_t record() const noexcept { return record_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t record_;
  std::string field_;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

// Transport or protocol failure talking to an agent backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace beliefaudit
