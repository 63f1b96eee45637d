#include "abov/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <sstream>
#include <unordered_set>

#include "abov/errors.hpp"

namespace abov {

namespace {
thread_local bool t_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() noexcept : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool NoGradGuard::grad_enabled() noexcept { return t_grad_enabled; }

namespace detail {
template <typename Real>
std::vector<Real>& Node<Real>::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), Real(0));
  return grad;
}
}  // namespace detail

namespace {

void validate_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
}

// Branch-free exponent test so the loop vectorizes.
template <typename Real>
bool all_finite(std::span<const Real> values) {
  using Bits = std::conditional_t<sizeof(Real) == 4, std::uint32_t, std::uint64_t>;
  constexpr Bits exponent = static_cast<Bits>(sizeof(Real) == 4 ? 0x7f800000ull : 0x7ff0000000000000ull);
  Bits bad = 0;
  for (Real v : values) bad |= static_cast<Bits>((std::bit_cast<Bits>(v) & exponent) == exponent);
  return bad == 0;
}

}  // namespace

template <typename Real>
Tensor<Real> Tensor<Real>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real(0), requires_grad);
}

template <typename Real>
Tensor<Real> Tensor<Real>::full(Shape shape, Real value, bool requires_grad) {
  validate_shape(shape);
  auto node = std::make_shared<detail::Node<Real>>();
  node->data.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename Real>
Tensor<Real> Tensor<Real>::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " does not match " + std::to_string(values.size()) +
                     " values");
  }
  for (Real v : values) {
    if (!std::isfinite(v)) throw NumericsError("non-finite value in tensor initializer");
  }
  auto node = std::make_shared<detail::Node<Real>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape()));
  return node_->data[0];
}

template <typename Real>
void Tensor<Real>::set_requires_grad(bool flag) {
  if (!is_leaf()) throw Error("requires_grad can only be changed on leaf tensors");
  node_->requires_grad = flag;
}

template <typename Real>
void Tensor<Real>::zero_grad() {
  if (node_) node_->grad.clear();
}

template <typename Real>
Tensor<Real> Tensor<Real>::detach() const {
  auto node = std::make_shared<detail::Node<Real>>();
  node->shape = node_->shape;
  node->data = node_->data;
  return Tensor(std::move(node));
}

template <typename Real>
Tensor<Real> Tensor<Real>::clone() const {
  Tensor out = detach();
  out.node_->requires_grad = node_->requires_grad && is_leaf();
  return out;
}

template <typename Real>
Tensor<Real> Tensor<Real>::make_result(Shape shape, std::vector<Real> values, std::vector<Tensor> inputs,
                                       std::function<void(detail::Node<Real>&)> backward_fn) {
  if (!all_finite(std::span<const Real>(values))) throw NumericsError("non-finite value produced by tensor op");
  auto node = std::make_shared<detail::Node<Real>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  if (t_grad_enabled) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (auto& in : inputs) node->parents.push_back(in.node_);
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

template <typename Real>
void Tensor<Real>::backward() const {
  if (!node_ || shape_numel(node_->shape) != 1 || node_->shape.size() != 1) {
    throw ShapeError("backward() requires a scalar loss of shape [1]");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  using NodeT = detail::Node<Real>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeT* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Interior gradients are per-sweep; leaves keep accumulating.
  for (NodeT* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->data.size(), Real(0));
  }
  node_->ensure_grad()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (!n->is_leaf()) n->backward_fn(*n);
  }
}

template struct detail::Node<float>;
template struct detail::Node<double>;
template class Tensor<float>;
template class Tensor<double>;

}  // namespace abov
