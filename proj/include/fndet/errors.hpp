#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fndet {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// CSV header is missing a required column, or the file layout is wrong.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A specific data row could not be parsed; carries the 0-based data row index.
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (variant spec, experiment config, tokenizer spec).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint file problems: unreadable container, missing tensor, bad shape.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Invalid runtime input to a model (e.g. token id out of vocabulary range).
class InputError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Training aborted; carries the global step and the indices of the batch
// that produced the non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(std::int64_t step, std::vector<std::size_t> batch_indices,
                const std::string& what)
      : Error(what), step_(step), batch_indices_(std::move(batch_indices)) {}
  std::int64_t step() const { return step_; }
  const std::vector<std::size_t>& batch_indices() const { return batch_indices_; }

 private:
  std::int64_t step_;
  std::vector<std::size_t> batch_indices_;
};

}  // namespace fndet
