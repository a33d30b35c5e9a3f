#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "txncat/matrix.hpp"

namespace txncat {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are allocated lazily on the
/// first step and stay shape-congruent with their parameters.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  /// One update over a parameter set. params and grads must align pairwise
  /// and across calls.
  void step(std::span<Matrix* const> params, std::span<const Matrix* const> grads);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
};

}  // namespace txncat
