#pragma once

#include <stdexcept>
#include <string>

namespace coedit {

// Position or length outside the current document. Usually a buggy
// position/identifier conversion inside an engine.
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// A remote operation was handed to an engine before its causal
// predecessors. Signals a delivery-layer bug.
struct CausalityError : std::logic_error {
  using std::logic_error::logic_error;
};

// WOOT integration attempted on an operation that is not executable yet.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

struct StaleRevisionError : std::logic_error {
  using std::logic_error::logic_error;
};

// Identifier allocation asked for an empty interval.
struct OrderError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A pending delivery buffer never drained.
struct DeliveryStall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SequenceGapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownSession : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coedit
