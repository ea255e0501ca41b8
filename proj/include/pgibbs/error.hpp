#ifndef PGIBBS_ERROR_HPP
#define PGIBBS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pgibbs {

/// Invalid inputs: malformed tables, out-of-range labels, bad configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical breakdown such as every potential underflowing at some time.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pgibbs

#endif  // PGIBBS_ERROR_HPP
