#include "feats/graph.hpp"

#include "feats/errors.hpp"
#include "feats/kernels.hpp"

namespace feats {

Parameter::Parameter(std::string name_, Tensor value_, bool scaling_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape(), 0.0), scaling(scaling_) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape())
    grad = Tensor(value.shape(), 0.0);
  else
    grad.fill(0.0);
}

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::constant(Tensor value) {
  Node node;
  node.tag = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Parameter& p) {
  if (mode_ == Mode::Inference) return constant(p.value);
  Node node;
  node.tag = "parameter";
  node.value = p.value;
  node.param = &p;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(const char* tag, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node node;
  node.tag = tag;
  node.value = std::move(value);
  if (mode_ == Mode::Train)
    for (auto id : inputs) node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  node.inputs = std::move(inputs);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor(node.value.shape(), 0.0);
  return node.grad;
}

void Graph::backward(Var loss) {
  if (loss.id() >= nodes_.size() || &loss.graph() != this) throw ContractError("loss node is not part of this graph");
  if (nodes_[loss.id()].value.size() != 1)
    throw ContractError("backward requires a scalar loss, got shape " + to_string(nodes_[loss.id()].value.shape()));
  for (auto& node : nodes_) node.grad = Tensor{};
  if (!nodes_[loss.id()].requires_grad) return;

  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.param) {
      Parameter& p = *node.param;
      if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape(), 0.0);
      kernels::active().axpy(p.grad.size(), 1.0, node.grad.raw(), p.grad.raw());
    } else if (node.backward) {
      node.backward(*this, id);
    }
  }
}

}  // namespace feats
