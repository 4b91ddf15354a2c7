#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csbs {

// Operation called in a state that its preconditions forbid, e.g. removing a
// plane whose multiplicity is already zero.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A regularized per-frequency block failed to factor as positive definite.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(std::size_t frequency, const std::string& what)
      : std::runtime_error(what + " (frequency index " + std::to_string(frequency) + ")"),
        frequency_(frequency) {}

  std::size_t frequency() const noexcept { return frequency_; }

 private:
  std::size_t frequency_;
};

}  // namespace csbs
