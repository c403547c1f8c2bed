#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rger::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

// Self-check suites backing the `verify` command. Each returns one line per
// check; a suite passes when every line does.
std::vector<CheckResult> suite_grad(std::uint64_t seed);
std::vector<CheckResult> suite_mi(std::uint64_t seed);
std::vector<CheckResult> suite_metrics();
std::vector<CheckResult> suite_invariants(std::uint64_t seed);

bool all_pass(const std::vector<CheckResult>& results);

// Trains an identity-activation estimator on 1-D Gaussian pairs with the
// given correlation and returns the DV estimate on fresh samples.
double train_gaussian_mine(double rho, int steps, int batch, std::uint64_t seed,
                           int hidden = 64, double lr = 1e-3, int eval_samples = 20000);

}  // namespace rger::verify

#include <functional>

#include "rger/tensor.hpp"

namespace rger::verify {

// Central-difference comparison scaled to the gradient magnitude: the error
// denominator is floored at 1e-3 of the largest analytic gradient element,
// so elements in the roundoff-noise regime are held to an absolute bound
// instead of a meaningless relative one. A wrong small gradient still fails
// through that absolute term.
double fd_compare(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double eps = 1e-5);

}  // namespace rger::verify
