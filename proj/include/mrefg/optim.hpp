#pragma once

#include <string>
#include <vector>

#include "mrefg/autodiff.hpp"

namespace mrefg {

struct OptimizerConfig {
  std::string algo = "adam";  // "adam" or "sgd"
  double lr = 1e-3;
  double momentum = 0.0;      // sgd only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 5.0;     // global gradient-norm clip; <= 0 disables
};

class Optimizer {
 public:
  Optimizer(std::vector<ad::Param*> params, OptimizerConfig cfg);

  // Applies one update from the accumulated gradients, then zeroes them.
  void step();
  void zero_grad();
  const std::vector<ad::Param*>& params() const { return params_; }

 private:
  std::vector<ad::Param*> params_;
  OptimizerConfig cfg_;
  std::vector<ad::Mat> m_;  // first moment / momentum buffer
  std::vector<ad::Mat> v_;  // second moment (adam)
  long t_ = 0;
};

}  // namespace mrefg
