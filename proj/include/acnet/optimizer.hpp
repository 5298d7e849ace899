// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "acnet/model.hpp"

namespace acnet {

/// Adam with decoupled weight decay: the decay term is applied to the
/// parameter directly instead of being folded into the gradient.
class AdamW {
 public:
  struct Options {
    double learning_rate = 8e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(ParamStore& params, const Options& options);

  void zero_grad();
  void step();
  int step_count() const { return t_; }

 private:
  ParamStore* params_;
  Options options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int t_ = 0;
};

}  // namespace acnet
