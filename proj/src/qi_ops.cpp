#include "qicnn/qi_ops.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "qicnn/ops.hpp"

namespace qicnn {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void require_pair(const ComplexPair& v, const char* op) {
  if (!v.real.valid() || v.real.tape() != v.imag.tape() || v.real.shape() != v.imag.shape()) {
    throw ShapeError(std::string(op) + ": real and imaginary parts must share tape and shape");
  }
}

[[maybe_unused]] bool unit_modulus(const ComplexPair& v) {
  const Tensor& r = v.real.value();
  const Tensor& i = v.imag.value();
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (std::abs(r[k] * r[k] + i[k] * i[k] - 1.0) > 1e-9) return false;
  }
  return true;
}

QiOutput apply_boundary(const ComplexPair& y, Boundary boundary) {
  if (boundary == Boundary::kReadout) return im_sq_readout(y);
  return y;
}

// (x.r + i x.i) · (cos u + i sin u) summed over the inner dim, minus f(b).
ComplexPair complex_affine(const ComplexPair& x, const Var& u_angles, const Var& b_angles) {
  const Var ur = cos(u_angles);
  const Var ui = sin(u_angles);
  const Var br = cos(b_angles);
  const Var bi = sin(b_angles);
  Var real = sub(matmul(x.real, ur), matmul(x.imag, ui));
  Var imag = add(matmul(x.imag, ur), matmul(x.real, ui));
  real = add_row_bias(real, br, -1.0);
  imag = add_row_bias(imag, bi, -1.0);
  return {real, imag};
}

}  // namespace

ComplexPair phase_encode(const Var& theta) { return {cos(theta), sin(theta)}; }

ComplexPair encode_unit_interval(const Var& x) { return phase_encode(scale(x, kHalfPi)); }

ComplexPair rotate_compose(const ComplexPair& a, const ComplexPair& b) {
  require_pair(a, "rotate_compose");
  require_pair(b, "rotate_compose");
  assert(unit_modulus(a) && unit_modulus(b));
  Var real = sub(mul(a.real, b.real), mul(a.imag, b.imag));
  Var imag = add(mul(a.real, b.imag), mul(a.imag, b.real));
  return {real, imag};
}

ComplexPair cnot_like(const Var& theta, int delta) {
  if (delta != 0 && delta != 1) {
    throw std::invalid_argument("cnot_like: delta must be 0 or 1, got " + std::to_string(delta));
  }
  Var shifted = scale(theta, -1.0);
  if (delta == 1) {
    shifted = add(shifted, theta.tape()->constant(Tensor(theta.shape(), kHalfPi)));
  }
  return phase_encode(shifted);
}

ArgNot arg_not(const ComplexPair& v) {
  require_pair(v, "arg_not");
  Tape& tape = *v.real.tape();
  const Tensor& re = v.real.value();
  const Tensor& im = v.imag.value();
  Tensor theta(re.shape());
  std::uint64_t singular = 0;
  for (std::size_t k = 0; k < re.size(); ++k) {
    if (std::hypot(re[k], im[k]) < kArgEpsilon) {
      theta[k] = 0.0;
      ++singular;
      if (tape.branch_tracking()) tape.mix_branch(k);
    } else {
      theta[k] = kHalfPi - std::atan2(im[k], re[k]);
    }
  }
  tape.diagnostics().singularities += singular;
  const Var real = v.real;
  const Var imag = v.imag;
  Var theta_var = tape.record(std::move(theta), {real, imag}, [real, imag](Tape& t, const Tensor& g) {
    const Tensor& re = t.value(real.id());
    const Tensor& im = t.value(imag.id());
    // dθ/dre = im/|v|², dθ/dim = −re/|v|² (θ = π/2 − arg v).
    Tensor* d_re = t.requires_grad(real) ? &t.grad_buffer(real) : nullptr;
    Tensor* d_im = t.requires_grad(imag) ? &t.grad_buffer(imag) : nullptr;
    for (std::size_t k = 0; k < re.size(); ++k) {
      if (std::hypot(re[k], im[k]) < kArgEpsilon) continue;
      const double r2 = re[k] * re[k] + im[k] * im[k];
      if (d_re) (*d_re)[k] += g[k] * im[k] / r2;
      if (d_im) (*d_im)[k] -= g[k] * re[k] / r2;
    }
  });
  return {theta_var, phase_encode(theta_var)};
}

Var im_sq_readout(const ComplexPair& y) {
  require_pair(y, "im_sq_readout");
  return square(y.imag);
}

ComplexPair complex_conv2d(const ComplexPair& x, const Var& w_angles,
                           const std::optional<Var>& b_angles, int pad) {
  require_pair(x, "complex_conv2d");
  const Var wr = cos(w_angles);
  const Var wi = sin(w_angles);
  Var real = sub(conv2d(x.real, wr, pad), conv2d(x.imag, wi, pad));
  Var imag = add(conv2d(x.imag, wr, pad), conv2d(x.real, wi, pad));
  if (b_angles) {
    real = add_channel_bias(real, cos(*b_angles), -1.0);
    imag = add_channel_bias(imag, sin(*b_angles), -1.0);
  }
  return {real, imag};
}

QiOutput qi_conv_layer(const ComplexPair& x, const Var& w_angles,
                       const std::optional<Var>& b_angles, int pad, Boundary boundary) {
  const ComplexPair v = complex_conv2d(x, w_angles, b_angles, pad);
  return apply_boundary(arg_not(v).y, boundary);
}

QiOutput qi_neuron_layer(const Var& x, const Var& u_angles, const Var& b_angles,
                         Boundary boundary) {
  if (x.shape().size() != 2) {
    throw ShapeError("qi_neuron_layer: input must be [N,D], got " + shape_to_string(x.shape()));
  }
  return qi_neuron_hidden_chain(encode_unit_interval(x), u_angles, b_angles, boundary);
}

QiOutput qi_neuron_hidden_chain(const ComplexPair& prev, const Var& u_angles,
                                const Var& b_angles, Boundary boundary) {
  require_pair(prev, "qi_neuron_hidden_chain");
  const ComplexPair sigma = complex_affine(prev, u_angles, b_angles);
  return apply_boundary(arg_not(sigma).y, boundary);
}

}  // namespace qicnn
