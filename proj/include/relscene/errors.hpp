#pragma once

#include <stdexcept>
#include <string>

namespace relscene {

/// Violated precondition or type invariant on in-memory values.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent file content. The message names file, record
/// and field where they are known.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transport failure after the retry budget is exhausted.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The remote answered, but not in the chat-completion shape.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace relscene
