#ifndef CVBELL_ERRORS_HPP
#define CVBELL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cvbell {

// Error taxonomy maps onto CLI exit codes: config 2, numerical 3, sampling 4.

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Cutoff/tail/dimension failures and numerical-tolerance breaches.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Insufficient or malformed sample data.
class SamplingError : public std::runtime_error {
 public:
  explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cvbell

#endif
