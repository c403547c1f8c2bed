#pragma once

#include <functional>
#include <vector>

#include "rger/tensor.hpp"

namespace rger {

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences. `f` must close over `params` and be deterministic
// (checked by evaluating twice); eps in (0, 1e-3].
// Returns the max over all parameter elements of
//   |analytic - fd| / max(|analytic|, |fd|, 1e-12).
double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double eps = 1e-5);

}  // namespace rger
