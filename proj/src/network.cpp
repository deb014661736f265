#include "qicnn/network.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qicnn/ops.hpp"
#include "qicnn/qi_ops.hpp"
#include "qicnn/random.hpp"

namespace qicnn {

std::string_view to_string(NetworkVariant v) {
  switch (v) {
    case NetworkVariant::kClassical: return "classical";
    case NetworkVariant::kI1: return "i1";
    case NetworkVariant::kI2: return "i2";
    case NetworkVariant::kI3: return "i3";
    case NetworkVariant::kII: return "ii";
    case NetworkVariant::kF: return "f";
  }
  return "?";
}

std::string_view to_string(DatasetKind d) {
  return d == DatasetKind::kMnist ? "mnist" : "cifar10";
}

std::string_view to_string(LossKind l) { return l == LossKind::kCrossEntropy ? "xent" : "mse"; }

std::optional<NetworkVariant> parse_variant(std::string_view tag) {
  for (auto v : kAllVariants) {
    if (to_string(v) == tag) return v;
  }
  return std::nullopt;
}

std::optional<DatasetKind> parse_dataset(std::string_view tag) {
  if (tag == "mnist") return DatasetKind::kMnist;
  if (tag == "cifar10") return DatasetKind::kCifar10;
  return std::nullopt;
}

std::optional<LossKind> parse_loss(std::string_view tag) {
  if (tag == "xent") return LossKind::kCrossEntropy;
  if (tag == "mse") return LossKind::kMse;
  return std::nullopt;
}

namespace {

struct Spatial {
  std::size_t h, w;
};

std::vector<Spatial> trace_spatial(const ArchSpec& spec) {
  std::vector<Spatial> out;
  std::size_t h = spec.height, w = spec.width;
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const ConvBlockSpec& c = spec.conv[i];
    const std::string name = "conv" + std::to_string(i + 1);
    if (c.kernel == 0 || c.out_channels == 0 || c.kernel > h + 2 * c.pad ||
        c.kernel > w + 2 * c.pad) {
      throw ShapeError(name + ": kernel " + std::to_string(c.kernel) + " does not fit " +
                       std::to_string(h) + "x" + std::to_string(w) + " input");
    }
    h = h + 2 * c.pad - c.kernel + 1;
    w = w + 2 * c.pad - c.kernel + 1;
    if (c.pool) {
      if (h % 2 || w % 2) {
        throw ShapeError(name + ": pooling needs even dims, got " + std::to_string(h) + "x" +
                         std::to_string(w));
      }
      h /= 2;
      w /= 2;
    }
    out.push_back({h, w});
  }
  return out;
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void fill_uniform(Tensor& t, SplitMix64& rng, double lo, double hi) {
  for (double& v : t.data()) v = rng.uniform(lo, hi);
}

ComplexPair relu_parts(const ComplexPair& z) { return {relu(z.real), relu(z.imag)}; }
ComplexPair pool_parts(const ComplexPair& z) { return {maxpool2(z.real), maxpool2(z.imag)}; }
ComplexPair flatten_parts(const ComplexPair& z, const Shape& s) {
  return {reshape(z.real, s), reshape(z.imag, s)};
}

}  // namespace

void ArchSpec::validate() const {
  if (channels == 0 || height == 0 || width == 0) throw ShapeError("empty input geometry");
  trace_spatial(*this);
  for (const FcBlockSpec& f : fc) {
    if (f.width == 0) throw ShapeError("fully connected width must be >= 1");
  }
}

std::size_t ArchSpec::flat_features() const {
  const Spatial last = trace_spatial(*this).back();
  return conv.back().out_channels * last.h * last.w;
}

ArchSpec template_spec(DatasetKind dataset) {
  const bool mnist = dataset == DatasetKind::kMnist;
  ArchSpec s{};
  s.channels = mnist ? 1 : 3;
  s.height = s.width = mnist ? 28 : 32;
  s.conv = {ConvBlockSpec{6, 5, mnist ? 2u : 0u, true}, ConvBlockSpec{16, 5, 0, true},
            ConvBlockSpec{120, 5, 0, false}};
  s.fc = {FcBlockSpec{84}, FcBlockSpec{10}};
  return s;
}

ArchSpec tiny_spec(std::size_t channels) {
  ArchSpec s{};
  s.channels = channels;
  s.height = s.width = 8;
  s.conv = {ConvBlockSpec{2, 3, 1, true}, ConvBlockSpec{3, 3, 1, true},
            ConvBlockSpec{4, 2, 0, false}};
  s.fc = {FcBlockSpec{5}, FcBlockSpec{10}};
  return s;
}

ArchSpec apply_variant(ArchSpec spec, NetworkVariant variant) {
  std::array<bool, 5> q{};
  switch (variant) {
    case NetworkVariant::kClassical: q = {0, 0, 0, 0, 0}; break;
    case NetworkVariant::kI1: q = {1, 0, 0, 0, 0}; break;
    case NetworkVariant::kI2: q = {1, 1, 0, 0, 0}; break;
    case NetworkVariant::kI3: q = {1, 1, 1, 0, 0}; break;
    case NetworkVariant::kII: q = {0, 0, 0, 1, 1}; break;
    case NetworkVariant::kF: q = {1, 1, 1, 1, 1}; break;
  }
  for (std::size_t i = 0; i < 3; ++i) spec.conv[i].quantum = q[i];
  for (std::size_t i = 0; i < 2; ++i) spec.fc[i].quantum = q[3 + i];
  return spec;
}

Network::Network(NetworkVariant variant, DatasetKind dataset, const ArchSpec& spec,
                 std::uint64_t seed, NetworkOptions options)
    : variant_(variant), dataset_(dataset), spec_(apply_variant(spec, variant)), options_(options) {
  spec_.validate();
  if (options_.f_complex_fc && variant_ != NetworkVariant::kF) {
    throw std::invalid_argument("complex FC wiring only applies to the f variant");
  }
  SplitMix64 rng(seed);
  constexpr double kPi = std::numbers::pi;
  auto add_param = [&](std::string name, Shape shape, bool angle) {
    params_.push_back(std::make_unique<Parameter>(std::move(name), Tensor(std::move(shape)), angle));
    return params_.back().get();
  };

  std::size_t in_channels = spec_.channels;
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    const ConvBlockSpec& c = spec_.conv[i];
    const std::string prefix = "conv" + std::to_string(i + 1);
    Parameter* w = add_param(prefix + ".weight", {c.out_channels, in_channels, c.kernel, c.kernel},
                             c.quantum);
    Parameter* b = add_param(prefix + ".bias", {c.out_channels}, c.quantum);
    if (c.quantum) {
      fill_uniform(w->value, rng, -kPi, kPi);
    } else {
      const double lim = glorot_limit(in_channels * c.kernel * c.kernel,
                                      c.out_channels * c.kernel * c.kernel);
      fill_uniform(w->value, rng, -lim, lim);
    }
    conv_.push_back({c, w, b});
    in_channels = c.out_channels;
  }

  std::size_t in_features = spec_.flat_features();
  for (std::size_t i = 0; i < spec_.fc.size(); ++i) {
    const FcBlockSpec& f = spec_.fc[i];
    const std::string prefix = "fc" + std::to_string(i + 1);
    Parameter* w = add_param(prefix + ".weight", {in_features, f.width}, f.quantum);
    Parameter* b = add_param(prefix + ".bias", {f.width}, f.quantum);
    if (f.quantum) {
      fill_uniform(w->value, rng, -kPi, kPi);
    } else {
      const double lim = glorot_limit(in_features, f.width);
      fill_uniform(w->value, rng, -lim, lim);
    }
    fc_.push_back({f, w, b});
    in_features = f.width;
  }
}

std::array<bool, 5> Network::quantum_flags() const {
  return {conv_[0].spec.quantum, conv_[1].spec.quantum, conv_[2].spec.quantum,
          fc_[0].spec.quantum, fc_[1].spec.quantum};
}

Var Network::forward(Tape& tape, const Tensor& batch) {
  const Shape& s = batch.shape();
  if (s.size() != 4 || s[1] != spec_.channels || s[2] != spec_.height || s[3] != spec_.width) {
    throw ShapeError("network expects [N," + std::to_string(spec_.channels) + "," +
                     std::to_string(spec_.height) + "," + std::to_string(spec_.width) +
                     "] input, got " + shape_to_string(s));
  }
  const std::size_t n = s[0];

  // Exactly one of `real` / `cplx` carries the activations at any time.
  Var real = tape.constant(batch);
  std::optional<ComplexPair> cplx;

  for (std::size_t i = 0; i < conv_.size(); ++i) {
    const ConvLayer& layer = conv_[i];
    const Var w = tape.parameter(*layer.weight);
    const Var b = tape.parameter(*layer.bias);
    const int pad = static_cast<int>(layer.spec.pad);
    if (layer.spec.quantum) {
      if (!cplx) cplx = encode_unit_interval(real);
      const bool stay_complex = i + 1 < conv_.size()
                                    ? conv_[i + 1].spec.quantum
                                    : fc_[0].spec.quantum && options_.f_complex_fc;
      QiOutput out = qi_conv_layer(*cplx, w, b, pad,
                                   stay_complex ? Boundary::kComplex : Boundary::kReadout);
      if (stay_complex) {
        cplx = relu_parts(std::get<ComplexPair>(out));
        if (layer.spec.pool) cplx = pool_parts(*cplx);
      } else {
        cplx.reset();
        real = relu(std::get<Var>(out));
        if (layer.spec.pool) real = maxpool2(real);
      }
    } else {
      if (cplx) {
        real = im_sq_readout(*cplx);
        cplx.reset();
      }
      real = relu(add_channel_bias(conv2d(real, w, pad), b));
      if (layer.spec.pool) real = maxpool2(real);
    }
  }

  const Shape flat{n, spec_.flat_features()};
  if (cplx) {
    cplx = flatten_parts(*cplx, flat);
  } else {
    real = reshape(real, flat);
  }

  for (std::size_t i = 0; i < fc_.size(); ++i) {
    const FcLayer& layer = fc_[i];
    const Var w = tape.parameter(*layer.weight);
    const Var b = tape.parameter(*layer.bias);
    const bool last = i + 1 == fc_.size();
    if (layer.spec.quantum) {
      const bool stay_complex = !last && fc_[i + 1].spec.quantum;
      const Boundary boundary = stay_complex ? Boundary::kComplex : Boundary::kReadout;
      QiOutput out = cplx ? qi_neuron_hidden_chain(*cplx, w, b, boundary)
                          : qi_neuron_layer(real, w, b, boundary);
      if (stay_complex) {
        cplx = std::get<ComplexPair>(out);
      } else {
        cplx.reset();
        real = std::get<Var>(out);
      }
    } else {
      if (cplx) {
        real = im_sq_readout(*cplx);
        cplx.reset();
      }
      real = affine(real, w, b);
      if (!last) real = relu(real);
    }
  }
  return real;
}

Var Network::loss(Tape& tape, const Tensor& batch, std::span<const int> labels, LossKind kind) {
  const Var logits = forward(tape, batch);
  return kind == LossKind::kMse ? mse_onehot(logits, labels) : softmax_xent(logits, labels);
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> Network::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

Parameter* Network::find_parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* Network::find_parameter(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

Network build(NetworkVariant variant, DatasetKind dataset, std::uint64_t seed,
              NetworkOptions options) {
  return Network(variant, dataset, template_spec(dataset), seed, options);
}

GradCheckReport finite_diff_check(Network& net, const Tensor& input, std::span<const int> labels,
                                  LossKind loss, const GradCheckOptions& options) {
  const std::vector<Parameter*> params = net.parameters();
  return finite_diff_check(
      params, [&](Tape& tape) { return net.loss(tape, input, labels, loss); }, options);
}

}  // namespace qicnn
