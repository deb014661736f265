#pragma once

#include <cstdint>
#include <vector>

#include "qicnn/autodiff.hpp"

namespace qicnn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected first and second moments.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config = {});

  // One update from the gradients currently stored in the parameters.
  // Throws NumericalError naming the parameter if any gradient is not finite;
  // in that case no parameter is modified.
  void step();
  void zero_grad();

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const Tensor& first_moment(std::size_t i) const { return m_.at(i); }
  const Tensor& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t t_ = 0;
};

}  // namespace qicnn
