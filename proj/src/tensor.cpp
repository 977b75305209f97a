#include "uwct/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace uwct {

namespace {

bool g_check_finite = false;

// Single logical thread of execution; the pass counter is shared by both
// precisions so nested float/double graphs cannot collide.
uint64_t g_backward_pass = 0;

}  // namespace

void set_check_finite(bool enabled) { g_check_finite = enabled; }
bool check_finite_enabled() { return g_check_finite; }

int64_t numel_of(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

template <typename T>
static void check_values_finite(std::span<const T> values, const char* what) {
  for (const T v : values) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(what) + ": non-finite value detected");
    }
  }
}

void throw_if_nonfinite(std::span<const float> values, const char* what) {
  check_values_finite(values, what);
}
void throw_if_nonfinite(std::span<const double> values, const char* what) {
  check_values_finite(values, what);
}

template <typename T>
std::span<T> TensorNode<T>::grad_acc() {
  const size_t n = values.size();
  if (is_leaf) {
    if (grad.size() != n) grad.assign(n, T(0));
  } else if (grad_pass != g_backward_pass) {
    grad.assign(n, T(0));
    grad_pass = g_backward_pass;
  }
  return grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return from_vector(shape, std::vector<T>(static_cast<size_t>(numel_of(shape)), T(0)),
                     requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value, bool requires_grad) {
  return from_vector(shape, std::vector<T>(static_cast<size_t>(numel_of(shape)), value),
                     requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_vector(const Shape& shape, std::vector<T> values,
                                 bool requires_grad) {
  const int64_t n = numel_of(shape);
  if (static_cast<int64_t>(values.size()) != n) {
    throw std::invalid_argument("tensor data size " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = shape;
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  node->needs_grad = requires_grad;
  node->is_leaf = true;
  return wrap(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::wrap(std::shared_ptr<TensorNode<T>> node) {
  Tensor<T> t;
  t.node_ = std::move(node);
  return t;
}

template <typename T>
std::span<T> Tensor<T>::mutable_values() {
  if (!node_->is_leaf) {
    throw std::logic_error("mutable_values: only leaf tensors may be edited in place");
  }
  return node_->values;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item: tensor of shape " + shape_str(shape()) +
                                " is not a scalar");
  }
  return node_->values[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from_vector(shape(), std::vector<T>(node_->values.begin(), node_->values.end()),
                     false);
}

template <typename T>
void Tensor<T>::backward() const {
  if (!defined() || numel() != 1) {
    throw std::invalid_argument("backward: root must be a scalar, got shape " +
                                (defined() ? shape_str(shape()) : std::string("<null>")));
  }
  if (!node_->needs_grad) return;

  ++g_backward_pass;

  // Post-order over parent edges; reversed, consumers always precede the
  // nodes they feed, so each gradient is complete before being propagated.
  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> visited;
  struct Frame {
    TensorNode<T>* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({node_.get(), 0});
  visited.insert(node_.get());
  while (!stack.empty()) {
    Frame& frame = stack.back();
    if (frame.next_parent < frame.node->parents.size()) {
      TensorNode<T>* parent = frame.node->parents[frame.next_parent++].get();
      if (parent->needs_grad && visited.insert(parent).second) {
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(frame.node);
      stack.pop_back();
    }
  }

  node_->grad_acc()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* node = *it;
    if (node->backprop) node->backprop(*node);
  }
}

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> values, std::vector<Tensor<T>> parents,
                  std::function<void(TensorNode<T>&)> backprop) {
  if (g_check_finite) {
    throw_if_nonfinite(std::span<const T>(values), "op result");
  }
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->is_leaf = false;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.needs_grad();
  node->needs_grad = needs;
  if (needs) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.handle());
    node->backprop = std::move(backprop);
  }
  return Tensor<T>::wrap(std::move(node));
}

template struct TensorNode<float>;
template struct TensorNode<double>;
template class Tensor<float>;
template class Tensor<double>;

template Tensor<float> make_op<float>(Shape, std::vector<float>, std::vector<Tensor<float>>,
                                      std::function<void(TensorNode<float>&)>);
template Tensor<double> make_op<double>(Shape, std::vector<double>,
                                        std::vector<Tensor<double>>,
                                        std::function<void(TensorNode<double>&)>);

}  // namespace uwct
