#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rger/errors.hpp"
#include "rger/rng.hpp"

namespace rger {

struct TensorImpl;

// Dense row-major 2-D tensor of doubles with an optional autodiff node.
// Value-semantic handle onto shared storage; copying a Tensor aliases it.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, double v, bool requires_grad = false);
  static Tensor from(int rows, int cols, std::vector<double> vals, bool requires_grad = false);
  static Tensor row(std::vector<double> vals, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor randn(int rows, int cols, double stddev, Rng& rng, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  int rows() const;
  int cols() const;
  std::int64_t size() const;
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  std::vector<double>& data();
  const std::vector<double>& data() const;
  double at(int r, int c) const;
  double& at(int r, int c);

  // Scalar access; throws ContractError when the tensor is not 1x1.
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool rg);

  // Gradient buffer, allocated (zero) on first access.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  bool has_grad() const;
  void zero_grad();

  TensorImpl* impl() const { return impl_.get(); }
  std::shared_ptr<TensorImpl> handle() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
  friend Tensor wrap(std::shared_ptr<TensorImpl>);
};

Tensor wrap(std::shared_ptr<TensorImpl> impl);

// One recorded op: saved parents and the local backward rule. The chain of
// nodes reachable from a loss tensor is the computation record for a step.
struct OpNode {
  std::string op;
  std::vector<Tensor> parents;
  std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
  std::vector<double> grad;  // empty until touched
  bool requires_grad = false;
  std::shared_ptr<OpNode> node;  // null for leaves

  std::int64_t size() const { return static_cast<std::int64_t>(rows) * cols; }
  void ensure_grad() {
    if (grad.empty()) grad.assign(static_cast<std::size_t>(size()), 0.0);
  }
};

// Thread-local switch: when off, ops do not record nodes (pure evaluation).
bool grad_enabled();
void set_grad_enabled(bool on);

struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
  ~NoGradGuard() { set_grad_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Reverse-mode sweep from a scalar loss. Visits each recorded node once;
// leaf gradients accumulate into Tensor::grad().
void backward(const Tensor& loss);

// FNV-1a over the raw bytes of a parameter set, for freeze/stage checks.
std::uint64_t hash_params(const std::vector<Tensor>& params);

}  // namespace rger
