#pragma once

#include <stdexcept>
#include <string>

namespace en2 {

// Caller broke an operation's precondition (shape, channel count, range).
struct ContractViolation : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

// A configuration that cannot be realised (infeasible mask, bad network dims).
struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Non-finite values produced during a computation.
struct NumericError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Input is well-formed but the quantity is undefined for it (e.g. zero noise spread).
struct DegenerateInput : std::domain_error
{
  using std::domain_error::domain_error;
};

struct IoError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// File contents do not follow the expected layout.
struct FormatError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

} // namespace en2
