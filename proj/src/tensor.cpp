#include "rger/tensor.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_set>

namespace rger {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool on) { g_grad_enabled = on; }

Tensor wrap(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

static std::shared_ptr<TensorImpl> make_impl(int rows, int cols, bool rg) {
  if (rows < 0 || cols < 0) throw ShapeError("tensor: negative dimension");
  auto impl = std::make_shared<TensorImpl>();
  impl->rows = rows;
  impl->cols = cols;
  impl->data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  impl->requires_grad = rg;
  return impl;
}

Tensor Tensor::zeros(int rows, int cols, bool rg) { return wrap(make_impl(rows, cols, rg)); }

Tensor Tensor::full(int rows, int cols, double v, bool rg) {
  auto t = make_impl(rows, cols, rg);
  std::fill(t->data.begin(), t->data.end(), v);
  return wrap(std::move(t));
}

Tensor Tensor::from(int rows, int cols, std::vector<double> vals, bool rg) {
  if (static_cast<std::int64_t>(vals.size()) != static_cast<std::int64_t>(rows) * cols)
    throw ShapeError("tensor: data length does not match shape");
  auto t = make_impl(rows, cols, rg);
  t->data = std::move(vals);
  return wrap(std::move(t));
}

Tensor Tensor::row(std::vector<double> vals, bool rg) {
  int n = static_cast<int>(vals.size());
  return from(1, n, std::move(vals), rg);
}

Tensor Tensor::scalar(double v, bool rg) { return from(1, 1, {v}, rg); }

Tensor Tensor::randn(int rows, int cols, double stddev, Rng& rng, bool rg) {
  auto t = make_impl(rows, cols, rg);
  for (auto& v : t->data) v = stddev * rng.gaussian();
  return wrap(std::move(t));
}

int Tensor::rows() const { return impl_ ? impl_->rows : 0; }
int Tensor::cols() const { return impl_ ? impl_->cols : 0; }
std::int64_t Tensor::size() const { return impl_ ? impl_->size() : 0; }

std::vector<double>& Tensor::data() { return impl_->data; }
const std::vector<double>& Tensor::data() const { return impl_->data; }

double Tensor::at(int r, int c) const { return impl_->data[static_cast<std::size_t>(r) * impl_->cols + c]; }
double& Tensor::at(int r, int c) { return impl_->data[static_cast<std::size_t>(r) * impl_->cols + c]; }

double Tensor::item() const {
  if (!impl_ || impl_->size() != 1) throw ContractError("item: tensor is not scalar");
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool rg) { impl_->requires_grad = rg; }

std::vector<double>& Tensor::grad() {
  impl_->ensure_grad();
  return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
  impl_->ensure_grad();
  return impl_->grad;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::zero_grad() {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward: loss must be a scalar tensor");

  // Iterative post-order topological sort over the recorded graph.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  struct Frame {
    TensorImpl* impl;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  if (loss.impl()->node) {
    stack.push_back({loss.impl(), 0});
    visited.insert(loss.impl());
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    auto& node = f.impl->node;
    if (node && f.next_child < node->parents.size()) {
      TensorImpl* child = node->parents[f.next_child++].impl();
      if (child->node && !visited.count(child)) {
        visited.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(f.impl);
      stack.pop_back();
    }
  }

  loss.impl()->ensure_grad();
  loss.impl()->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* impl = *it;
    impl->ensure_grad();
    impl->node->backward(*impl);
  }
}

std::uint64_t hash_params(const std::vector<Tensor>& params) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& p : params) {
    for (double v : p.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

}  // namespace rger
