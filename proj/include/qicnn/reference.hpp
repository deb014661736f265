#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qicnn/tensor.hpp"

// Straight-line reference implementations. They share nothing with the
// tape-based ops: plain loops over explicit std::complex numbers, written
// directly from the defining formulas. Used by `qicnn verify-ops` and tests.
namespace qicnn::reference {

using cplx = std::complex<double>;

/// Complex tensor with an explicit shape, row-major.
struct ComplexTensor {
  Shape shape;
  std::vector<cplx> data;
};

ComplexTensor make_complex(const Tensor& real, const Tensor& imag);

/// Quadruple-loop cross-correlation; x [N,C,H,W], k [F,C,kH,kW].
Tensor conv2d(const Tensor& x, const Tensor& k, int pad, int stride = 1);

/// Window-scan 2x2 max pooling.
Tensor maxpool2(const Tensor& x);

/// Triple-loop x[N,D] * w[D,M] (+ b[M] when non-empty).
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b = Tensor());

/// Mean over rows of log(sum_j exp z_j) - z_label.
double softmax_xent(const Tensor& logits, std::span<const int> labels);

/// sum over (c, i, j) of x[n,c,...] * exp(i w[f,c,i,j]) minus exp(i b[f]).
/// `b_angles` may be empty (no bias).
ComplexTensor complex_conv(const ComplexTensor& x, const Tensor& w_angles,
                           const Tensor& b_angles, int pad);

/// The five-step quantum-inspired convolution on explicit complex numbers:
/// rotate-and-sum, arg, NOT (θ = π/2 − arg), y = e^{iθ}. With `readout`
/// the result is |Im y|² stored in the real part.
ComplexTensor qi_conv(const ComplexTensor& x, const Tensor& w_angles, const Tensor& b_angles,
                      int pad, bool readout);

/// Improved neuron on real inputs x[N,D]:
///   Σ = Σ_n e^{i u[n,m]} e^{i (π/2) x[n]} − e^{i b[m]},  S = e^{i (π/2 − arg Σ)}
ComplexTensor qi_neuron(const Tensor& x, const Tensor& u_angles, const Tensor& b_angles);

/// Same neuron with complex inputs prev[N,D].
ComplexTensor qi_neuron_chain(const ComplexTensor& prev, const Tensor& u_angles,
                              const Tensor& b_angles);

/// e^{i θ} elementwise.
ComplexTensor phase(const Tensor& theta);

}  // namespace qicnn::reference
