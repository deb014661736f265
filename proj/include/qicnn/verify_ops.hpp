#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qicnn/gradcheck.hpp"
#include "qicnn/network.hpp"

namespace qicnn {

/// Outcome of one randomized comparison suite.
struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  double max_error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return instances > 0 && max_error <= tolerance; }
};

/// complex_conv2d against the explicit complex-arithmetic convolution.
SuiteResult verify_complex_conv(std::uint64_t seed, std::size_t instances = 100);

/// qi_neuron_layer against the direct neuron formula, D <= 16 inputs and
/// M <= 8 outputs.
SuiteResult verify_neuron(std::uint64_t seed, std::size_t instances = 100);

/// Hidden-chain neuron (complex input) against the same formula.
SuiteResult verify_neuron_chain(std::uint64_t seed, std::size_t instances = 100);

/// Full quantum convolution (both boundaries) against the five-step oracle.
SuiteResult verify_qi_conv(std::uint64_t seed, std::size_t instances = 100);

/// Phase-encoding homomorphism, both cnot_like branches and the arg_not
/// identity f(π/2 − arg v) = (Im v, Re v)/|v|.
std::vector<SuiteResult> verify_unit_circle(std::uint64_t seed, std::size_t angles = 1000);

/// Everything above.
std::vector<SuiteResult> run_verify_ops(std::uint64_t seed);

/// Gradient checks of each layer type in isolation.
std::vector<std::pair<std::string, GradCheckReport>> layer_gradchecks(std::uint64_t seed);

/// Gradient check of a whole network on a small random batch. `tiny` uses
/// the 8x8 schedule; otherwise the canonical dataset geometry.
GradCheckReport network_gradcheck(NetworkVariant variant, bool tiny, std::uint64_t seed,
                                  LossKind loss = LossKind::kCrossEntropy,
                                  NetworkOptions options = {});

}  // namespace qicnn
