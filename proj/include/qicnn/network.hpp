#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qicnn/autodiff.hpp"
#include "qicnn/gradcheck.hpp"

namespace qicnn {

/// The template CNN and the five quantum-inspired variants.
enum class NetworkVariant : std::uint8_t { kClassical = 0, kI1 = 1, kI2 = 2, kI3 = 3, kII = 4, kF = 5 };

enum class DatasetKind : std::uint8_t { kMnist = 0, kCifar10 = 1 };

enum class LossKind : std::uint8_t { kCrossEntropy = 0, kMse = 1 };

inline constexpr std::array<NetworkVariant, 6> kAllVariants = {
    NetworkVariant::kClassical, NetworkVariant::kI1, NetworkVariant::kI2,
    NetworkVariant::kI3,        NetworkVariant::kII, NetworkVariant::kF};

std::string_view to_string(NetworkVariant v);
std::string_view to_string(DatasetKind d);
std::string_view to_string(LossKind l);
std::optional<NetworkVariant> parse_variant(std::string_view tag);
std::optional<DatasetKind> parse_dataset(std::string_view tag);
std::optional<LossKind> parse_loss(std::string_view tag);

struct ConvBlockSpec {
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t pad;
  bool pool;  // 2x2 max pooling after the ReLU
  bool quantum = false;
};

struct FcBlockSpec {
  std::size_t width;
  bool quantum = false;
};

/// Three conv blocks and two fully connected blocks; the last FC block's
/// width is the number of classes.
struct ArchSpec {
  std::size_t channels;
  std::size_t height;
  std::size_t width;
  std::array<ConvBlockSpec, 3> conv;
  std::array<FcBlockSpec, 2> fc;

  std::size_t num_classes() const { return fc[1].width; }
  // Throws ShapeError if spatial dims collapse or pooling sees an odd size.
  void validate() const;
  // Flattened feature count after the conv stack.
  std::size_t flat_features() const;
};

/// LeNet-5 style schedule: conv 5x5x6 (pad 2 on MNIST) / pool / conv 5x5x16 /
/// pool / conv 5x5x120 -> 1x1, fc 84, fc 10. All quantum flags off.
ArchSpec template_spec(DatasetKind dataset);

/// 8x8 single-channel schedule used for gradient checks and oracle tests.
ArchSpec tiny_spec(std::size_t channels = 1);

/// Sets the per-layer quantum flags of `variant` on a copy of `spec`.
ArchSpec apply_variant(ArchSpec spec, NetworkVariant variant);

struct NetworkOptions {
  // F variant only: keep conv3's complex output (no |Im|² readout) and feed
  // it straight into the quantum FC chain.
  bool f_complex_fc = false;
};

class Network {
 public:
  Network(NetworkVariant variant, DatasetKind dataset, const ArchSpec& spec, std::uint64_t seed,
          NetworkOptions options = {});

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  /// Records the forward pass of `batch` [N,C,H,W] on `tape`; returns
  /// logits [N, num_classes].
  Var forward(Tape& tape, const Tensor& batch);

  /// Forward pass plus the configured loss.
  Var loss(Tape& tape, const Tensor& batch, std::span<const int> labels, LossKind kind);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find_parameter(std::string_view name);
  const Parameter* find_parameter(std::string_view name) const;
  std::size_t parameter_count() const;

  NetworkVariant variant() const { return variant_; }
  DatasetKind dataset() const { return dataset_; }
  const ArchSpec& spec() const { return spec_; }
  const NetworkOptions& options() const { return options_; }

  // Quantum flags in layer order: conv1..conv3, fc1, fc2.
  std::array<bool, 5> quantum_flags() const;

 private:
  struct ConvLayer {
    ConvBlockSpec spec;
    Parameter* weight;
    Parameter* bias;
  };
  struct FcLayer {
    FcBlockSpec spec;
    Parameter* weight;
    Parameter* bias;
  };

  NetworkVariant variant_;
  DatasetKind dataset_;
  ArchSpec spec_;
  NetworkOptions options_;
  // Stable addresses: layers and tapes point into this storage.
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<ConvLayer> conv_;
  std::vector<FcLayer> fc_;
};

/// Network for the canonical dataset geometry.
Network build(NetworkVariant variant, DatasetKind dataset, std::uint64_t seed,
              NetworkOptions options = {});

/// Gradient check of every parameter of `net` on one batch.
GradCheckReport finite_diff_check(Network& net, const Tensor& input, std::span<const int> labels,
                                  LossKind loss, const GradCheckOptions& options = {});

}  // namespace qicnn
