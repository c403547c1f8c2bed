#include "rger/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace rger {

double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double eps) {
  if (!(eps > 0.0) || eps > 1e-3) throw ContractError("grad_check: eps must be in (0, 1e-3]");

  const double v1 = f().item();
  const double v2 = f().item();
  if (v1 != v2) throw ContractError("grad_check: function is not deterministic");

  for (auto p : params) p.zero_grad();
  Tensor loss = f();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    auto& d = p.data();
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double saved = d[j];
      d[j] = saved + eps;
      double fp;
      {
        NoGradGuard ng;
        fp = f().item();
      }
      d[j] = saved - eps;
      double fm;
      {
        NoGradGuard ng;
        fm = f().item();
      }
      d[j] = saved;
      const double fd = (fp - fm) / (2.0 * eps);
      const double a = analytic[i][j];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-12});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace rger
