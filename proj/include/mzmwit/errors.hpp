#pragma once

#include <stdexcept>
#include <string>

namespace mzmwit {

// Argument failed a documented precondition (bad normalization, bad pairing, ...).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operands live on incompatible Fock spaces.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mode or site label outside the space.
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Mathematically undefined input (zero couplings, vanishing denominators).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Requested combination is not covered by an implemented formula.
struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

// A measured quantity cannot be mapped back into its physical range.
struct MeasurementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mzmwit
