#pragma once

#include <stdexcept>
#include <string>

namespace mgbr {

struct MgbrError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// shape disagreement between tensor operands
struct DimensionError : MgbrError {
  using MgbrError::MgbrError;
};

// malformed sparse structure or graph edge (index out of range, duplicate entry)
struct StructuralError : MgbrError {
  using MgbrError::MgbrError;
};

// math function applied outside its domain (e.g. log of a non-positive value)
struct DomainError : MgbrError {
  using MgbrError::MgbrError;
};

// API misuse: a precondition the caller controls was violated
struct ContractError : MgbrError {
  using MgbrError::MgbrError;
};

struct ParseError : MgbrError {
  using MgbrError::MgbrError;
};

struct ValidationError : MgbrError {
  using MgbrError::MgbrError;
};

struct DataError : MgbrError {
  using MgbrError::MgbrError;
};

struct SamplingError : MgbrError {
  using MgbrError::MgbrError;
};

struct LookupError : MgbrError {
  using MgbrError::MgbrError;
};

struct ConfigError : MgbrError {
  using MgbrError::MgbrError;
};

struct CompatibilityError : MgbrError {
  using MgbrError::MgbrError;
};

// training produced a non-finite loss
struct DivergenceError : MgbrError {
  using MgbrError::MgbrError;
};

}  // namespace mgbr
