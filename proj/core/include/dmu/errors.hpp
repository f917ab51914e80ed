#pragma once

#include <stdexcept>
#include <string>

namespace dmu
{

/// Input violates a documented precondition or type invariant.
class InvalidInput : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A criterion or agent produced a non-finite value.
class EvaluationFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected at construction time (e.g. damping not positive definite).
class ConfigurationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dmu
