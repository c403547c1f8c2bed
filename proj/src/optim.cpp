#include "rger/optim.hpp"

#include <cmath>
#include <string>

namespace rger {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void AdamW::step(StepDirection direction) {
  std::vector<const std::vector<double>*> grads;
  grads.reserve(params_.size());
  for (auto& p : params_) grads.push_back(&p.grad());
  apply(grads, direction);
}

void AdamW::step(const std::vector<std::vector<double>>& grads, StepDirection direction) {
  if (grads.size() != params_.size())
    throw ContractError("adamw: got " + std::to_string(grads.size()) + " gradients for " +
                        std::to_string(params_.size()) + " parameters");
  std::vector<const std::vector<double>*> ptrs;
  ptrs.reserve(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != static_cast<std::size_t>(params_[i].size()))
      throw ContractError("adamw: gradient " + std::to_string(i) + " size mismatch");
    ptrs.push_back(&grads[i]);
  }
  apply(ptrs, direction);
}

void AdamW::apply(const std::vector<const std::vector<double>*>& grads, StepDirection direction) {
  ++step_count_;
  const double sign = direction == StepDirection::Ascent ? -1.0 : 1.0;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].data();
    const auto& g = *grads[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = sign * g[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p[j]);
    }
  }
}

}  // namespace rger
