#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aoi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class InvalidEvent : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class InvalidAction : public Error {
 public:
  using Error::Error;
};

class StateNotInTable : public Error {
 public:
  using Error::Error;
};

class InvalidDepth : public Error {
 public:
  using Error::Error;
};

class DegenerateP : public Error {
 public:
  using Error::Error;
};

class NoAction : public Error {
 public:
  using Error::Error;
};

/// Raised when forward reachability exceeds the configured state cap.
class StateSpaceTooLarge : public Error {
 public:
  StateSpaceTooLarge(std::size_t count, std::size_t cap)
      : Error("reachable state space too large: " + std::to_string(count) +
              " states exceed cap of " + std::to_string(cap)),
        count_(count),
        cap_(cap) {}

  std::size_t count() const noexcept { return count_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t count_;
  std::size_t cap_;
};

}  // namespace aoi
