#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spectail {

// Invalid argument outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A simulated recursion produced a non-finite state.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, std::int64_t index)
      : std::runtime_error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}

  std::int64_t index() const noexcept { return index_; }

 private:
  std::int64_t index_;
};

// A moment equation has no positive root or no bracket could be found.
class NoRootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An estimator was asked to work on an empty exceedance set.
class NoExceedancesError : public std::runtime_error {
 public:
  NoExceedancesError() : std::runtime_error("no exceedances over the threshold") {}
};

// Lag, functional or model combination the routine does not cover.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too many bootstrap replicates had a vanishing weighted denominator.
class UnreliableIntervalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spectail
