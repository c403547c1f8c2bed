#pragma once

#include <cstdint>
#include <vector>

#include "rger/tensor.hpp"

namespace rger {

enum class StepDirection { Descent, Ascent };

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled-weight-decay Adam over a fixed parameter set. Ascent negates the
// gradient before the moment update; weight decay always pulls toward zero.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg);

  // Consumes the gradients currently stored on the parameters.
  void step(StepDirection direction = StepDirection::Descent);
  // Step against an explicit gradient list (one per parameter, same shapes).
  void step(const std::vector<std::vector<double>>& grads, StepDirection direction);

  void zero_grad();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  std::int64_t step_count() const { return step_count_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  void apply(const std::vector<const std::vector<double>*>& grads, StepDirection direction);

  std::vector<Tensor> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t step_count_ = 0;
};

}  // namespace rger
