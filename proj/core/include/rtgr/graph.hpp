#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtgr/tensor.hpp"

namespace rtgr {

/// Reverse-mode tape. Forward ops append one node per differentiable result;
/// backward() replays the nodes in exact reverse recording order and then
/// scatters accumulated gradients into the bound parameter tensors.
///
/// A graph and the tensors it owns are confined to one worker at a time.
template <typename T>
class GraphT {
 public:
  using Id = std::uint32_t;
  static constexpr Id npos = ~Id{0};

  GraphT() = default;
  GraphT(const GraphT&) = delete;
  GraphT& operator=(const GraphT&) = delete;
  GraphT(GraphT&&) = default;
  GraphT& operator=(GraphT&&) = default;

  /// Adds a value that never receives a gradient (inputs, targets).
  Id constant(TensorT<T> value) {
    value.set_requires_grad(false);
    return push(std::move(value), nullptr);
  }

  /// Adds a leaf bound to an external parameter. The data is copied in; on
  /// backward() the accumulated gradient is added to param.grad(). Binding
  /// the same tensor twice returns the original id (parameter sharing).
  Id leaf(TensorT<T>& param) {
    auto it = leaf_ids_.find(&param);
    if (it != leaf_ids_.end()) return it->second;
    TensorT<T> copy(param.shape(), param.data());
    copy.set_requires_grad(param.requires_grad());
    const Id id = push(std::move(copy), &param);
    leaf_ids_.emplace(&param, id);
    return id;
  }

  /// Backward callback of one node; receives the graph and the node's
  /// output id, whose grad buffer is already populated.
  using BackwardFn = std::function<void(GraphT&, Id)>;

  /// Records an op result. requires_grad of the output is derived from the
  /// inputs; the node is kept only when a gradient can flow through it.
  Id record(const char* op, std::vector<Id> inputs, TensorT<T> out, BackwardFn backward) {
    if (check_finite_ && !all_finite(out.data()))
      fail(std::string(op) + ": forward produced a non-finite value");
    bool rg = false;
    for (Id in : inputs) {
      if (in >= values_.size()) fail(std::string(op) + ": unknown input tensor id");
      rg = rg || values_[in].tensor.requires_grad();
    }
    out.set_requires_grad(rg);
    const Id id = push(std::move(out), nullptr);
    if (rg) nodes_.push_back(Node{op, std::move(inputs), id, std::move(backward)});
    return id;
  }

  const TensorT<T>& val(Id id) const { return values_[id].tensor; }
  TensorT<T>& val(Id id) { return values_[id].tensor; }

  bool needs_grad(Id id) const { return values_[id].tensor.requires_grad(); }
  bool has_grad(Id id) const { return values_[id].tensor.has_grad(); }
  std::vector<T>& grad(Id id) { return values_[id].tensor.grad(); }

  /// Seeds d(root)/d(root) = 1 and runs every recorded node in reverse
  /// recording order, accumulating (+=) across fan-out. Afterwards each
  /// bound parameter's grad() holds dRoot/dParam.
  void backward(Id root) {
    if (root >= values_.size()) fail("backward: unknown tensor id");
    if (val(root).numel() != 1)
      fail("backward: root must be a scalar, got shape " + shape_str(val(root).shape()));
    if (!needs_grad(root)) fail("backward: root does not require gradients");
    if (backward_done_) fail("backward: graph already differentiated");
    backward_done_ = true;

    grad(root)[0] = T{1};
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (values_[it->output].tensor.has_grad()) it->backward(*this, it->output);
    }
    for (auto& slot : values_) {
      if (slot.bound != nullptr && slot.tensor.has_grad()) {
        auto& dst = slot.bound->grad();
        const auto& src = slot.tensor.grad();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
  }

  std::size_t num_values() const { return values_.size(); }
  std::size_t num_nodes() const { return nodes_.size(); }
  const char* node_op(std::size_t i) const { return nodes_[i].op; }

  /// Disables the per-op finite check (benchmarks only; the check is the
  /// contract everywhere else).
  void set_check_finite(bool v) { check_finite_ = v; }

 private:
  struct Value {
    TensorT<T> tensor;
    TensorT<T>* bound = nullptr;
  };
  struct Node {
    const char* op;
    std::vector<Id> inputs;
    Id output;
    BackwardFn backward;
  };

  Id push(TensorT<T> tensor, TensorT<T>* bound) {
    if (check_finite_ && bound == nullptr && !all_finite(tensor.data())) {
      // Leaves are validated too, so a poisoned input is caught at entry.
      fail("graph: non-finite value added to graph");
    }
    if (bound != nullptr && check_finite_ && !all_finite(tensor.data()))
      fail("graph: parameter '" + shape_str(tensor.shape()) + "' holds a non-finite value");
    values_.push_back(Value{std::move(tensor), bound});
    return static_cast<Id>(values_.size() - 1);
  }

  std::vector<Value> values_;
  std::vector<Node> nodes_;
  std::unordered_map<const TensorT<T>*, Id> leaf_ids_;
  bool check_finite_ = true;
  bool backward_done_ = false;
};

extern template class GraphT<float>;
extern template class GraphT<double>;

using Graph = GraphT<double>;

}  // namespace rtgr
