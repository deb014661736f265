#include <gtest/gtest.h>

#include <complex>

#include "qicnn/network.hpp"
#include "qicnn/ops.hpp"
#include "qicnn/reference.hpp"
#include "qicnn/verify_ops.hpp"
#include "test_util.hpp"

using namespace qicnn;
using qicnn::testing::kPi;
using qicnn::testing::random_tensor;
using cplx = std::complex<double>;
using reference::ComplexTensor;

TEST(Variants, QuantumFlagSchedule) {
  using F = std::array<bool, 5>;
  const std::map<NetworkVariant, F> expected{
      {NetworkVariant::kClassical, F{0, 0, 0, 0, 0}}, {NetworkVariant::kI1, F{1, 0, 0, 0, 0}},
      {NetworkVariant::kI2, F{1, 1, 0, 0, 0}},        {NetworkVariant::kI3, F{1, 1, 1, 0, 0}},
      {NetworkVariant::kII, F{0, 0, 0, 1, 1}},        {NetworkVariant::kF, F{1, 1, 1, 1, 1}}};
  for (const auto& [v, flags] : expected) {
    EXPECT_EQ(build(v, DatasetKind::kMnist, 1).quantum_flags(), flags) << to_string(v);
  }
}

TEST(Variants, TagsRoundTrip) {
  for (NetworkVariant v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_FALSE(parse_variant("bogus").has_value());
  EXPECT_FALSE(parse_variant("I3").has_value());
}

TEST(Build, ParameterCountsMatchLayerHandCount) {
  // conv1 6*1*25+6, conv2 16*6*25+16, conv3 120*16*25+120, fc1 120*84+84, fc2 84*10+10
  EXPECT_EQ(build(NetworkVariant::kClassical, DatasetKind::kMnist, 0).parameter_count(), 61706u);
  // conv1 sees 3 channels: 6*3*25+6
  EXPECT_EQ(build(NetworkVariant::kClassical, DatasetKind::kCifar10, 0).parameter_count(), 62006u);
}

TEST(Build, ParameterParityAcrossVariants) {
  for (DatasetKind d : {DatasetKind::kMnist, DatasetKind::kCifar10}) {
    const std::size_t ref = build(NetworkVariant::kClassical, d, 0).parameter_count();
    for (NetworkVariant v : kAllVariants) EXPECT_EQ(build(v, d, 0).parameter_count(), ref);
  }
}

TEST(Build, ParameterNamesAndShapes) {
  Network net = build(NetworkVariant::kClassical, DatasetKind::kMnist, 0);
  std::vector<std::string> names;
  for (const Parameter* p : net.parameters()) names.push_back(p->name);
  EXPECT_EQ(names, (std::vector<std::string>{"conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias",
                                             "conv3.weight", "conv3.bias", "fc1.weight", "fc1.bias",
                                             "fc2.weight", "fc2.bias"}));
  EXPECT_EQ(net.find_parameter("conv1.weight")->value.shape(), (Shape{6, 1, 5, 5}));
  EXPECT_EQ(net.find_parameter("fc1.weight")->value.shape(), (Shape{120, 84}));
}

TEST(Build, InitializationRanges) {
  Network net = build(NetworkVariant::kF, DatasetKind::kMnist, 3);
  for (const Parameter* p : net.parameters()) {
    EXPECT_TRUE(p->angle) << p->name;
    const bool bias = p->name.ends_with(".bias");
    for (double v : p->value.data()) {
      if (bias) {
        ASSERT_EQ(v, 0.0) << p->name;
      } else {
        ASSERT_GE(v, -kPi) << p->name;
        ASSERT_LE(v, kPi) << p->name;
      }
    }
  }
}

TEST(Build, SameSeedSameWeightsDifferentSeedDifferent) {
  Network a = build(NetworkVariant::kI2, DatasetKind::kMnist, 5);
  Network b = build(NetworkVariant::kI2, DatasetKind::kMnist, 5);
  Network c = build(NetworkVariant::kI2, DatasetKind::kMnist, 6);
  EXPECT_EQ(a.find_parameter("conv2.weight")->value, b.find_parameter("conv2.weight")->value);
  EXPECT_NE(a.find_parameter("conv2.weight")->value, c.find_parameter("conv2.weight")->value);
}

TEST(Build, ComplexFcWiringOnlyForF) {
  NetworkOptions opts;
  opts.f_complex_fc = true;
  EXPECT_THROW(build(NetworkVariant::kII, DatasetKind::kMnist, 0, opts), std::invalid_argument);
  EXPECT_NO_THROW(build(NetworkVariant::kF, DatasetKind::kMnist, 0, opts));
}

TEST(Forward, OutputShapeBothDatasets) {
  std::mt19937_64 rng(41);
  for (NetworkVariant v : kAllVariants) {
    Network m = build(v, DatasetKind::kMnist, 1);
    Tape t1;
    EXPECT_EQ(m.forward(t1, random_tensor({3, 1, 28, 28}, rng, 0, 1)).shape(), (Shape{3, 10}));
    Network c = build(v, DatasetKind::kCifar10, 1);
    Tape t2;
    EXPECT_EQ(c.forward(t2, random_tensor({2, 3, 32, 32}, rng, 0, 1)).shape(), (Shape{2, 10}));
  }
}

TEST(Forward, RejectsWrongInputShape) {
  Network net = build(NetworkVariant::kClassical, DatasetKind::kMnist, 1);
  Tape t;
  EXPECT_THROW((void)net.forward(t, Tensor({1, 3, 28, 28})), ShapeError);
}

TEST(Forward, IdenticalInputsGiveIdenticalLogits) {
  std::mt19937_64 rng(42);
  const Tensor one = random_tensor({1, 1, 28, 28}, rng, 0, 1);
  Tensor two({2, 1, 28, 28});
  for (std::size_t i = 0; i < 784; ++i) two[i] = two[784 + i] = one[i];
  for (NetworkVariant v : kAllVariants) {
    Network net = build(v, DatasetKind::kMnist, 9);
    Tape t1, t2;
    const Tensor a = net.forward(t1, two).value();
    const Tensor b = net.forward(t2, two).value();
    EXPECT_EQ(a, b);
    for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(a.at(0, j), a.at(1, j));
  }
}

TEST(Forward, ClassicalHasNoSingularities) {
  std::mt19937_64 rng(43);
  Network net = build(NetworkVariant::kClassical, DatasetKind::kMnist, 1);
  Tape t;
  (void)net.forward(t, random_tensor({4, 1, 28, 28}, rng, 0, 1));
  EXPECT_EQ(t.diagnostics().singularities, 0u);
}

TEST(Backward, EveryParameterReceivesAGradient) {
  std::mt19937_64 rng(44);
  const std::vector<int> labels{1, 7, 3, 0};
  for (NetworkVariant v : kAllVariants) {
    Network net = build(v, DatasetKind::kMnist, 2);
    const Tensor x = random_tensor({4, 1, 28, 28}, rng, 0, 1);
    Tape t;
    t.backward(net.loss(t, x, labels, LossKind::kCrossEntropy));
    for (const Parameter* p : net.parameters()) {
      ASSERT_EQ(p->grad.shape(), p->value.shape());
      ASSERT_TRUE(p->grad.all_finite()) << to_string(v) << " " << p->name;
      double mag = 0.0;
      for (double g : p->grad.data()) mag += std::abs(g);
      EXPECT_GT(mag, 0.0) << to_string(v) << " " << p->name;
    }
  }
}

// Step-by-step transcription of the tiny quantum networks on explicit
// complex numbers, independent of the tape ops.
namespace {

ComplexTensor encode(const Tensor& x) {
  ComplexTensor z{x.shape(), std::vector<cplx>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) z.data[i] = std::polar(1.0, kPi / 2 * x[i]);
  return z;
}

ComplexTensor relu_parts(ComplexTensor z) {
  for (cplx& v : z.data) v = {std::max(v.real(), 0.0), std::max(v.imag(), 0.0)};
  return z;
}

Tensor part(const ComplexTensor& z, bool imag) {
  Tensor t(z.shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = imag ? z.data[i].imag() : z.data[i].real();
  return t;
}

ComplexTensor pool_parts(const ComplexTensor& z) {
  return reference::make_complex(reference::maxpool2(part(z, false)), reference::maxpool2(part(z, true)));
}

Tensor relu(Tensor t) {
  for (double& v : t.data()) v = std::max(v, 0.0);
  return t;
}

Tensor flatten(const Tensor& t) { return t.reshaped({t.dim(0), t.size() / t.dim(0)}); }

Tensor readout(const ComplexTensor& z) {
  Tensor t(z.shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = z.data[i].imag() * z.data[i].imag();
  return t;
}

Tensor val(Network& net, const std::string& name) { return net.find_parameter(name)->value; }

// Quantum conv stack of i3 / f, ending with the conv3 readout: [N, 4].
Tensor quantum_convs(Network& net, const Tensor& x) {
  ComplexTensor z = encode(x);
  z = pool_parts(relu_parts(reference::qi_conv(z, val(net, "conv1.weight"), val(net, "conv1.bias"), 1, false)));
  z = pool_parts(relu_parts(reference::qi_conv(z, val(net, "conv2.weight"), val(net, "conv2.bias"), 1, false)));
  const ComplexTensor r = reference::qi_conv(z, val(net, "conv3.weight"), val(net, "conv3.bias"), 0, true);
  return flatten(part(r, false));
}

Tensor classical_convs(Network& net, const Tensor& x) {
  auto block = [&](const Tensor& in, const std::string& l, int pad, bool pool) {
    Tensor y = reference::conv2d(in, val(net, l + ".weight"), pad);
    const Tensor b = val(net, l + ".bias");
    const std::size_t hw = y.dim(2) * y.dim(3);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[(i / hw) % y.dim(1)];
    y = relu(y);
    return pool ? reference::maxpool2(y) : y;
  };
  return flatten(block(block(block(x, "conv1", 1, true), "conv2", 1, true), "conv3", 0, false));
}

Tensor quantum_fcs(Network& net, const Tensor& h) {
  const ComplexTensor s1 = reference::qi_neuron(h, val(net, "fc1.weight"), val(net, "fc1.bias"));
  return readout(reference::qi_neuron_chain(s1, val(net, "fc2.weight"), val(net, "fc2.bias")));
}

Tensor classical_fcs(Network& net, const Tensor& h) {
  const Tensor a = relu(reference::affine(h, val(net, "fc1.weight"), val(net, "fc1.bias")));
  return reference::affine(a, val(net, "fc2.weight"), val(net, "fc2.bias"));
}

Tensor network_logits(Network& net, const Tensor& x) {
  Tape t;
  return net.forward(t, x).value();
}

}  // namespace

TEST(TinyOracle, I3MatchesStepByStepComposition) {
  std::mt19937_64 rng(45);
  Network net(NetworkVariant::kI3, DatasetKind::kMnist, tiny_spec(), 11);
  const Tensor x = random_tensor({3, 1, 8, 8}, rng, 0, 1);
  EXPECT_LE(qicnn::testing::max_abs_diff(network_logits(net, x), classical_fcs(net, quantum_convs(net, x))),
            1e-10);
}

TEST(TinyOracle, IIMatchesStepByStepComposition) {
  std::mt19937_64 rng(46);
  Network net(NetworkVariant::kII, DatasetKind::kMnist, tiny_spec(), 12);
  const Tensor x = random_tensor({3, 1, 8, 8}, rng, 0, 1);
  EXPECT_LE(qicnn::testing::max_abs_diff(network_logits(net, x), quantum_fcs(net, classical_convs(net, x))),
            1e-10);
}

TEST(TinyOracle, FMatchesStepByStepComposition) {
  std::mt19937_64 rng(47);
  Network net(NetworkVariant::kF, DatasetKind::kMnist, tiny_spec(), 13);
  const Tensor x = random_tensor({3, 1, 8, 8}, rng, 0, 1);
  EXPECT_LE(qicnn::testing::max_abs_diff(network_logits(net, x), quantum_fcs(net, quantum_convs(net, x))),
            1e-10);
}

TEST(TinyOracle, FComplexWiringSkipsConv3Readout) {
  std::mt19937_64 rng(48);
  NetworkOptions opts;
  opts.f_complex_fc = true;
  Network net(NetworkVariant::kF, DatasetKind::kMnist, tiny_spec(), 14, opts);
  const Tensor x = random_tensor({2, 1, 8, 8}, rng, 0, 1);
  ComplexTensor z = encode(x);
  z = pool_parts(relu_parts(reference::qi_conv(z, val(net, "conv1.weight"), val(net, "conv1.bias"), 1, false)));
  z = pool_parts(relu_parts(reference::qi_conv(z, val(net, "conv2.weight"), val(net, "conv2.bias"), 1, false)));
  z = relu_parts(reference::qi_conv(z, val(net, "conv3.weight"), val(net, "conv3.bias"), 0, false));
  z.shape = {2, 4};
  const ComplexTensor s1 = reference::qi_neuron_chain(z, val(net, "fc1.weight"), val(net, "fc1.bias"));
  const Tensor expected = readout(reference::qi_neuron_chain(s1, val(net, "fc2.weight"), val(net, "fc2.bias")));
  EXPECT_LE(qicnn::testing::max_abs_diff(network_logits(net, x), expected), 1e-10);
}

class TinyGradcheck : public ::testing::TestWithParam<NetworkVariant> {};

TEST_P(TinyGradcheck, WithinTolerance) {
  for (LossKind loss : {LossKind::kCrossEntropy, LossKind::kMse}) {
    const GradCheckReport r = network_gradcheck(GetParam(), true, 7, loss);
    EXPECT_GT(r.num_checked, 20u);
    EXPECT_LE(r.max_rel_error, 1e-4) << r.worst_parameter << "[" << r.worst_coordinate << "]";
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, TinyGradcheck, ::testing::ValuesIn(kAllVariants),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(TinyGradcheck, FComplexWiring) {
  NetworkOptions opts;
  opts.f_complex_fc = true;
  const GradCheckReport r = network_gradcheck(NetworkVariant::kF, true, 8, LossKind::kCrossEntropy, opts);
  EXPECT_LE(r.max_rel_error, 1e-4);
}
