#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nlcg {

/// Thrown when a request would exceed one of the SolverLimits.
class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(std::string cap, const std::string& what)
      : std::runtime_error(what), cap_(std::move(cap)) {}
  const std::string& cap() const { return cap_; }

 private:
  std::string cap_;
};

struct SolverLimits {
  // 2^20 pieces is roughly a million inner solves.
  int max_enumerated_hidden_units = 20;
  std::uint64_t max_joint_actions = 1'000'000;
};

}  // namespace nlcg
