#include "jointnlu/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

thread_local bool t_grad_enabled = true;

detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw Error("use of an undefined Tensor");
  return *node;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = shape_numel(shape);
  return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape_numel(shape)) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(node_).value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  if (s.size() != 2) throw ShapeError("expected a matrix, got shape " + shape_str(s));
  return s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  if (s.size() != 2) throw ShapeError("expected a matrix, got shape " + shape_str(s));
  return s[1];
}

std::span<const double> Tensor::values() const { return checked(node_).value; }

std::span<double> Tensor::mutable_values() { return checked(node_).value; }

double Tensor::item() const {
  auto& n = checked(node_);
  if (n.value.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(n.shape));
  }
  return n.value[0];
}

double Tensor::at(std::size_t i) const { return checked(node_).value.at(i); }

double Tensor::at(std::size_t row, std::size_t col) const {
  return checked(node_).value.at(row * cols() + col);
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

void Tensor::set_requires_grad(bool on) { checked(node_).requires_grad = on; }

bool Tensor::has_grad() const {
  auto& n = checked(node_);
  return n.grad.size() == n.value.size();
}

std::span<const double> Tensor::grad() const { return checked(node_).grad; }

std::span<double> Tensor::mutable_grad() {
  auto& n = checked(node_);
  n.ensure_grad();
  return n.grad;
}

void Tensor::zero_grad() {
  auto& n = checked(node_);
  n.grad.assign(n.value.size(), 0.0);
}

void Tensor::backward() const {
  auto& root = checked(node_);
  if (root.value.size() != 1) {
    throw ShapeError("backward() requires a scalar loss, got shape " + shape_str(root.shape));
  }
  if (!root.requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      auto* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (node->backward_fn) node->grad.assign(node->value.size(), 0.0);
  }
  root.ensure_grad();
  root.grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

Tensor Tensor::detach() const {
  auto& n = checked(node_);
  return from_values(n.shape, n.value, false);
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool track = false;
  if (t_grad_enabled) {
    for (const auto& in : inputs) track = track || in.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace jointnlu
