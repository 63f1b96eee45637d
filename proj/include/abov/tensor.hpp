#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace abov {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_str(const Shape& shape);

template <typename Real>
class Tensor;

namespace detail {

template <typename Real>
struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const noexcept { return !backward_fn; }
  std::vector<Real>& ensure_grad();
};

}  // namespace detail

// Disables tape recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool grad_enabled() noexcept;

 private:
  bool previous_;
};

// Dense row-major tensor handle. Copies share storage and tape position;
// use clone() for a deep copy.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false) {
    return from({1}, {value}, requires_grad);
  }

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const Real> data() const { return node_->data; }
  // Mutating storage does not invalidate recorded tape closures; only do it on
  // leaves between forward passes (optimizer updates, initialization).
  std::span<Real> mutable_data() { return node_->data; }
  Real item() const;
  Real operator[](std::size_t i) const { return node_->data[i]; }

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  void set_requires_grad(bool flag);
  bool has_grad() const noexcept { return node_ && !node_->grad.empty(); }
  // Empty span when no gradient has been accumulated.
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  // Reverse-mode sweep from this scalar. Leaf gradients accumulate across calls.
  void backward() const;

  Tensor detach() const;
  Tensor clone() const;
  bool is_leaf() const noexcept { return !node_ || node_->is_leaf(); }
  bool same_storage(const Tensor& other) const noexcept { return node_ == other.node_; }

  // Builds a result node; records it on the tape when grad mode is on and any
  // input requires grad. Used by the op implementations.
  static Tensor make_result(Shape shape, std::vector<Real> values, std::vector<Tensor> inputs,
                            std::function<void(detail::Node<Real>&)> backward_fn);

  detail::Node<Real>& node() const { return *node_; }
  std::shared_ptr<detail::Node<Real>> node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node<Real>> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node<Real>> node_;
};

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
  std::vector<To> values(t.data().begin(), t.data().end());
  return Tensor<To>::from(t.shape(), std::move(values));
}

}  // namespace abov
