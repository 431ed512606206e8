#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "feats/tensor.hpp"

namespace feats {

/// A named trainable tensor with its accumulated gradient.
///
/// `scaling` marks the attention scaling coefficients, the only parameters that
/// L1/L2 penalties apply to.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value, bool scaling = false);

  std::string name;
  Tensor value;
  Tensor grad;
  bool scaling = false;

  void zero_grad();
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while its graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
/// the node list is always topologically sorted.
class Graph {
 public:
  enum class Mode { Train, Inference };

  // Receives the graph and the id of the node whose gradient is being propagated.
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  explicit Graph(Mode mode = Mode::Train) : mode_(mode) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf bound to `p`; backward accumulates into p.grad. In inference mode the
  // leaf is recorded as a constant.
  Var parameter(Parameter& p);

  // Low-level entry for op implementations.
  Var record(const char* tag, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return value(v.id()); }
  // Gradient of the last backward() loss with respect to node `v`; empty when unreached.
  const Tensor& grad(Var v) const { return nodes_[v.id()].grad; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  const char* tag(std::size_t id) const { return nodes_[id].tag; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  Mode mode() const { return mode_; }
  std::size_t size() const { return nodes_.size(); }

  // Zero-initialised on first access.
  Tensor& grad_buffer(std::size_t id);

  // Seeds d(loss)/d(loss) = 1 and walks the tape backwards. Node gradients are
  // reset on entry, so repeated calls are idempotent; parameter gradients
  // accumulate and must be zeroed by the caller.
  void backward(Var loss);

 private:
  struct Node {
    const char* tag = "";
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Mode mode_;
  std::vector<Node> nodes_;
};

}  // namespace feats
