#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "qicnn/tensor.hpp"

namespace qicnn {

/// A learnable tensor. `grad` accumulates across backward passes until
/// zero_grad() is called.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool angle = false;  // phase parameter fed through f(θ) = cosθ + i sinθ

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool is_angle = false)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), angle(is_angle) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const;
  // Gradient after backward(); an all-zero tensor if nothing reached this node.
  Tensor grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Per-forward diagnostics filled in by ops as they run.
struct TapeDiagnostics {
  // Elements where arg(v) was undefined (|v| < eps) and got clamped.
  std::uint64_t singularities = 0;
  // Hash of every branch decision taken (ReLU masks, pooling argmax,
  // singular clamps). Only maintained while branch tracking is on.
  std::uint64_t branch_signature = 0xcbf29ce484222325ULL;
};

/// Reverse-mode differentiation record.
///
/// Nodes are appended in execution order, so the node list is already a
/// topological order. backward() walks it once in reverse; each node's rule
/// adds into its operands' gradient buffers, so fan-out accumulates.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that requires a gradient but is not bound to a Parameter.
  Var variable(Tensor value);
  // Leaf bound to `p`; backward() adds the node gradient into p.grad.
  Var parameter(Parameter& p);

  // Records an op output. `fn` receives the output gradient and must push
  // operand gradients with grad_buffer(). It is only called when at least
  // one operand requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);

  void backward(const Var& loss);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(const Var& v) const { return nodes_.at(v.id()).requires_grad; }
  Tensor grad(const Var& v) const;

  // Zero-initialized (on first use) gradient accumulator of `v`. Only valid
  // inside a backward rule.
  Tensor& grad_buffer(const Var& v);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Drops all nodes so the tape can record a new forward pass.
  void reset();

  TapeDiagnostics& diagnostics() { return diag_; }
  const TapeDiagnostics& diagnostics() const { return diag_; }
  void set_branch_tracking(bool on) { track_branches_ = on; }
  bool branch_tracking() const { return track_branches_; }
  void mix_branch(std::uint64_t v);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool consumed_ = false;
  bool track_branches_ = false;
  TapeDiagnostics diag_;
};

}  // namespace qicnn
