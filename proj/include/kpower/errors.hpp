#pragma once

#include <stdexcept>
#include <string>

namespace kpower {

/// An operation declined to run: an input is above a documented cap, or a
/// precondition gate (for example super-typicality) is not met.
class Refused : public std::runtime_error {
 public:
  explicit Refused(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kpower
