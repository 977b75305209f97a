#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace uwct {

// Row-major extents. Images are NCHW.
using Shape = std::vector<int64_t>;

int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

// When enabled, every op output is scanned for NaN/Inf and non-finite values
// raise. Off by default; training enables it through the config.
void set_check_finite(bool enabled);
bool check_finite_enabled();

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> values;
  // Leaf tensors with requires_grad keep their gradient across backward calls
  // (accumulation contract). Interior nodes use this buffer as per-pass
  // scratch, reset whenever grad_pass falls behind the active pass.
  std::vector<T> grad;
  uint64_t grad_pass = 0;
  bool requires_grad = false;
  bool needs_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Scatters this node's gradient into its parents. Null for leaves and for
  // nodes outside any gradient path.
  std::function<void(TensorNode&)> backprop;

  // Gradient buffer ready for accumulation during the active backward pass.
  std::span<T> grad_acc();
};

// Reference-counted handle to one value in the computation graph. Copying a
// Tensor aliases the same node.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from_vector(const Shape& shape, std::vector<T> values,
                            bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t numel() const { return static_cast<int64_t>(node_->values.size()); }
  int64_t dim(size_t i) const { return node_->shape.at(i); }

  std::span<const T> values() const { return node_->values; }
  // Direct value access for initialization and optimizer updates; leaves only.
  std::span<T> mutable_values();
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool needs_grad() const { return node_->needs_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  // Empty until the tensor has received a gradient.
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad();

  // Fresh leaf holding a copy of the values, cut off from this graph.
  Tensor detach() const;

  // Reverse-mode sweep from a scalar root. Gradients of requires_grad leaves
  // accumulate additively across calls.
  void backward() const;

  TensorNode<T>* node() const { return node_.get(); }
  std::shared_ptr<TensorNode<T>> handle() const { return node_; }
  static Tensor wrap(std::shared_ptr<TensorNode<T>> node);

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

// Builds an op result node. Parents are dropped (and the closure discarded)
// when no parent needs gradients, so detached subgraphs free eagerly.
template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> values,
                  std::vector<Tensor<T>> parents,
                  std::function<void(TensorNode<T>&)> backprop);

void throw_if_nonfinite(std::span<const float> values, const char* what);
void throw_if_nonfinite(std::span<const double> values, const char* what);

extern template struct TensorNode<float>;
extern template struct TensorNode<double>;
extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace uwct
