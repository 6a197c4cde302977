#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace jointnlu {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// One recorded value in the dynamic autodiff graph. Leaves (parameters and
// constants) have no backward function; op results hold their inputs alive.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

// Dense row-major array of doubles with optional gradient tracking.
//
// Tensor is a cheap shared handle: copies alias the same storage. Operations
// in ops.hpp record their inputs when gradient tracking is enabled on the
// current thread and any input requires a gradient; backward() then walks the
// recorded graph in reverse topological order.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }

  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  // Writable storage. Intended for leaves (parameters, optimizer updates);
  // mutating a recorded intermediate invalidates its graph.
  std::span<double> mutable_values();

  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Accumulates d(this)/d(leaf) into every reachable leaf that requires a
  // gradient. Only valid on single-element tensors.
  void backward() const;

  // Copy of the values with no recorded history.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

// Builds an op result. The backward function is stored only if recording is
// enabled and at least one input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);

}  // namespace detail

}  // namespace jointnlu
