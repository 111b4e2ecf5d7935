#pragma once

#include <stdexcept>
#include <string>

namespace sforge {

// Error taxonomy.  The CLI maps these onto exit codes: config/usage problems
// exit 2, oracle evaluation problems exit 3, everything else exits 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Persistence failures keep distinct kinds so callers can tell a truncated
// file from a stale schema from a log that breaks a domain invariant.
struct PersistError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : PersistError {
  using PersistError::PersistError;
};
struct CorruptJsonError : PersistError {
  using PersistError::PersistError;
};
struct SchemaError : PersistError {
  using PersistError::PersistError;
};
struct InvariantError : PersistError {
  using PersistError::PersistError;
};
struct DimensionError : PersistError {
  using PersistError::PersistError;
};
struct MethodMismatchError : PersistError {
  using PersistError::PersistError;
};

}  // namespace sforge
