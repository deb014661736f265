#pragma once

#include <numbers>
#include <optional>
#include <variant>

#include "qicnn/autodiff.hpp"

namespace qicnn {

// Quantum-inspired building blocks. Complex values are carried as two real
// tensors of identical shape; every op here records on the operands' tape.

/// Logically complex tensor stored as separate real and imaginary parts.
struct ComplexPair {
  Var real;
  Var imag;
};

/// |v| below this makes arg(v) undefined; see arg_not().
inline constexpr double kArgEpsilon = 1e-12;

/// f(θ) = cos θ + i sin θ.
ComplexPair phase_encode(const Var& theta);

/// Pixel values in [0, 1] mapped onto the first quadrant: f((π/2)·x).
ComplexPair encode_unit_interval(const Var& x);

/// Complex product a·b. For phase-encoded inputs this is f(θa + θb).
ComplexPair rotate_compose(const ComplexPair& a, const ComplexPair& b);

/// f((π/2)·δ − θ): δ = 0 gives the conjugate (cos θ, −sin θ), δ = 1 swaps
/// the parts to (sin θ, cos θ). Throws std::invalid_argument for other δ.
ComplexPair cnot_like(const Var& theta, int delta);

struct ArgNot {
  Var theta;      // π/2 − arg(v)
  ComplexPair y;  // f(theta) = (sin arg v, cos arg v)
};

/// θ = π/2 − atan2(imag, real), y = f(θ).
///
/// Elements with |v| < kArgEpsilon have no defined argument: θ is set to 0,
/// their gradient is zeroed, and each one is added to
/// Tape::diagnostics().singularities.
ArgNot arg_not(const ComplexPair& v);

/// Elementwise Im(y)².
Var im_sq_readout(const ComplexPair& y);

/// Complex convolution of x with W = f(w_angles), minus the phase-encoded
/// per-channel bias f(b_angles) when given:
///   real = conv(x.r, cos w) − conv(x.i, sin w) − cos b
///   imag = conv(x.i, cos w) + conv(x.r, sin w) − sin b
ComplexPair complex_conv2d(const ComplexPair& x, const Var& w_angles,
                           const std::optional<Var>& b_angles, int pad);

enum class Boundary {
  kComplex,   // keep the complex output for the next quantum layer
  kReadout,   // emit |Im(y)|² for a following real-valued layer
};

using QiOutput = std::variant<ComplexPair, Var>;

/// Quantum-inspired convolution: complex_conv2d, then arg_not, then the
/// optional |Im|² readout.
QiOutput qi_conv_layer(const ComplexPair& x, const Var& w_angles,
                       const std::optional<Var>& b_angles, int pad, Boundary boundary);

/// Improved quantum-inspired neuron layer on a real input x[N,D]:
///   Σ_m = Σ_n f(u[n,m]) f((π/2) x[n]) − f(b[m]),  S = f(π/2 − arg Σ_m)
QiOutput qi_neuron_layer(const Var& x, const Var& u_angles, const Var& b_angles,
                         Boundary boundary);

/// Same neuron fed by an already complex input (no phase encoding).
QiOutput qi_neuron_hidden_chain(const ComplexPair& prev, const Var& u_angles,
                                const Var& b_angles, Boundary boundary);

}  // namespace qicnn
