#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace egd {

// Each error class maps onto one CLI exit code (see cli.hpp).

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ContextOverflow : public std::length_error {
 public:
  ContextOverflow(std::size_t length, std::size_t limit)
      : std::length_error("sequence length " + std::to_string(length) +
                          " exceeds context limit " + std::to_string(limit)),
        length_(length),
        limit_(limit) {}

  std::size_t length() const noexcept { return length_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t length_;
  std::size_t limit_;
};

class TraceExhausted : public std::out_of_range {
 public:
  TraceExhausted(std::size_t step, std::size_t num_steps)
      : std::out_of_range("replay step " + std::to_string(step) +
                          " requested but trace holds " +
                          std::to_string(num_steps) + " steps") {}
};

/// Input data could not be read or is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A benchmark protocol rule was broken, e.g. an MME image without exactly
/// two questions. `offenders` lists the ids at fault.
class ProtocolViolation : public std::runtime_error {
 public:
  ProtocolViolation(const std::string& what, std::vector<std::string> offenders)
      : std::runtime_error(what + ": " + join(offenders)),
        offenders_(std::move(offenders)) {}

  const std::vector<std::string>& offenders() const noexcept { return offenders_; }

 private:
  static std::string join(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ", ";
      out += ids[i];
    }
    return out;
  }

  std::vector<std::string> offenders_;
};

}  // namespace egd
