#pragma once

#include <stdexcept>

namespace qnmag {

/// Inconsistent solver or benchmark configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace qnmag
