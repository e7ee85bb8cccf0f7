#pragma once

#include <stdexcept>
#include <string>

namespace pdespot {

/// A caller broke an operation's precondition (bad action index, bad depth, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EmptyBeliefError : public std::invalid_argument {
 public:
  EmptyBeliefError() : std::invalid_argument("belief has no particles") {}
};

/// All particle weights vanished after conditioning on an observation.
class BeliefDegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendShutdownError : public std::runtime_error {
 public:
  BackendShutdownError() : std::runtime_error("simulation backend is shut down") {}
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pdespot
