#pragma once

#include <stdexcept>
#include <string>

namespace svgp {

// Thrown when a symmetric factorization cannot be completed even after
// exhausting the jitter schedule. Carries the last jitter value tried.
class conditioning_error : public std::runtime_error {
public:
  conditioning_error(const std::string& what, double last_jitter)
      : std::runtime_error(what), last_jitter_(last_jitter) {}

  double last_jitter() const { return last_jitter_; }

private:
  double last_jitter_;
};

}  // namespace svgp
