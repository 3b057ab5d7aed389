#pragma once

#include <stdexcept>
#include <string>

namespace ripplerec {

// Base class for every error raised by the library. CLI maps these to
// nonzero exit codes with the message on stderr.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed header, unknown field kind, missing required column,
// duplicate key column value.
class SchemaError : public Error {
public:
  using Error::Error;
};

// A data row that cannot be reconciled with the header (arity mismatch).
class RowError : public Error {
public:
  using Error::Error;
};

// A cell whose content cannot be coerced to its declared kind, or a
// record-level invariant violation (embedding length, label domain).
class ValueError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// Not enough temporal coverage to form train/valid/test splits.
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

// NaN/Inf surfaced inside loss or gradient computation.
class NumericError : public Error {
public:
  using Error::Error;
};

// Candidate item cannot be mapped to a model-space vector under the
// selected cold-start strategy.
class ColdStartUnresolvedError : public Error {
public:
  using Error::Error;
};

// Archive hash mismatch on load.
class CorruptionError : public Error {
public:
  using Error::Error;
};

// Archive format version not supported by this build.
class VersionError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class PipelineError : public Error {
public:
  using Error::Error;
};

}  // namespace ripplerec
