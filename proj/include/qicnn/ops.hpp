#pragma once

#include <span>
#include <vector>

#include "qicnn/autodiff.hpp"

namespace qicnn {

// Differentiable real-tensor operations. Every op records itself on the tape
// of its operands and returns the output node.

/// 2-D cross-correlation (no kernel flip).
/// input [N,C,H,W], kernel [F,C,kH,kW] -> [N,F,(H+2p-kH)/s+1,(W+2p-kW)/s+1]
Var conv2d(const Var& input, const Var& kernel, int pad = 0, int stride = 1);

/// y[n,f,h,w] + sign * bias[f]
Var add_channel_bias(const Var& input, const Var& bias, double sign = 1.0);

/// Non-overlapping 2x2 max pooling; ties go to the first maximum in
/// row-major window order.
Var maxpool2(const Var& input);

Var relu(const Var& x);

/// x[N,D] * w[D,M]
Var matmul(const Var& x, const Var& w);
/// y[n,m] + sign * bias[m]
Var add_row_bias(const Var& input, const Var& bias, double sign = 1.0);
/// x[N,D] * w[D,M] + b[M]
Var affine(const Var& x, const Var& weight, const Var& bias);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double c);
Var cos(const Var& x);
Var sin(const Var& x);
Var square(const Var& x);
Var reshape(const Var& x, Shape shape);
/// Sum of all elements, as a [1] tensor.
Var sum(const Var& x);

/// Mean over the batch of -log softmax(logits)[label].
Var softmax_xent(const Var& logits, std::span<const int> labels);
/// Mean over the batch of sum_c (out[n,c] - onehot(label_n)[c])^2.
Var mse_onehot(const Var& outputs, std::span<const int> labels);

}  // namespace qicnn
