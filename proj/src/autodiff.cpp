#include "qicnn/autodiff.hpp"

#include <stdexcept>

namespace qicnn {

const Tensor& Var::value() const { return tape_->value(id_); }
const Shape& Var::shape() const { return tape_->value(id_).shape(); }
Tensor Var::grad() const { return tape_->grad(*this); }

Var Tape::push(Node node) {
  if (consumed_) {
    throw std::logic_error("tape already consumed by backward(); call reset() before recording");
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw std::logic_error("operand recorded on a different tape");
    if (nodes_[in.id()].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Tensor Tape::grad(const Var& v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.empty()) return Tensor(n.value.shape());
  return n.grad;
}

Tensor& Tape::grad_buffer(const Var& v) {
  Node& n = nodes_.at(v.id());
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (consumed_) throw std::logic_error("backward() called twice on the same forward pass");
  if (loss.tape() != this) throw std::logic_error("loss recorded on a different tape");
  if (value(loss.id()).size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " +
                     shape_to_string(value(loss.id()).shape()));
  }
  consumed_ = true;
  grad_buffer(loss).fill(1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    // Rules only write to operand buffers, which precede this node.
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) n.param->grad.add_(n.grad);
  }
}

void Tape::reset() {
  nodes_.clear();
  consumed_ = false;
  diag_ = TapeDiagnostics{};
}

void Tape::mix_branch(std::uint64_t v) {
  // FNV-1a over the 8 bytes of v.
  for (int i = 0; i < 8; ++i) {
    diag_.branch_signature ^= (v >> (8 * i)) & 0xff;
    diag_.branch_signature *= 0x100000001b3ULL;
  }
}

}  // namespace qicnn
