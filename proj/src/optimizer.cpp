// SPDX-License-Identifier: Apache-2.0
#include "acnet/optimizer.hpp"

#include <cmath>

#include "acnet/errors.hpp"

namespace acnet {

AdamW::AdamW(ParamStore& params, const Options& options)
    : params_(&params), options_(options) {
  if (options.learning_rate <= 0.0) throw ConfigError("adamw: learning rate must be positive");
  if (options.beta1 < 0.0 || options.beta1 >= 1.0 || options.beta2 < 0.0 ||
      options.beta2 >= 1.0) {
    throw ConfigError("adamw: betas must lie in [0, 1)");
  }
  if (options.weight_decay < 0.0) throw ConfigError("adamw: weight decay must be >= 0");
  for (const auto& [name, var] : params.items()) {
    m_.emplace_back(var.value().rows(), var.value().cols());
    v_.emplace_back(var.value().rows(), var.value().cols());
  }
}

void AdamW::zero_grad() { params_->zero_grad(); }

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, t_);
  const double bc2 = 1.0 - std::pow(options_.beta2, t_);
  auto& items = params_->items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    ad::Var var = items[k].second;
    Matrix& value = var.mutable_value();
    const Matrix& grad = var.grad();
    Matrix& m = m_[k];
    Matrix& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad.data()[i];
      m.data()[i] = options_.beta1 * m.data()[i] + (1.0 - options_.beta1) * g;
      v.data()[i] = options_.beta2 * v.data()[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m.data()[i] / bc1;
      const double v_hat = v.data()[i] / bc2;
      value.data()[i] -= options_.learning_rate *
                         (m_hat / (std::sqrt(v_hat) + options_.eps) +
                          options_.weight_decay * value.data()[i]);
    }
  }
}

}  // namespace acnet
