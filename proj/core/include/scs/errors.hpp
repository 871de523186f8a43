#pragma once

#include <stdexcept>
#include <string>

namespace scs {

/// Incompatible tensor shapes.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside an operation's mathematical domain (e.g. p <= 0).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// API misuse, such as calling backward on a non-scalar root.
class UsageError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// A NaN or Inf showed up where only finite values are allowed.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (dataset records, checkpoints).
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Unreadable, corrupt or mismatched checkpoint.
class CheckpointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace scs
