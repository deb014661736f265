#include "qicnn/verify_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qicnn/ops.hpp"
#include "qicnn/qi_ops.hpp"
#include "qicnn/random.hpp"
#include "qicnn/reference.hpp"

namespace qicnn {

namespace {

constexpr double kPi = std::numbers::pi;

Tensor random_tensor(Shape shape, SplitMix64& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::size_t pick(SplitMix64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

double max_abs_diff(const Var& real, const Var& imag, const reference::ComplexTensor& expected) {
  if (real.shape() != expected.shape || imag.shape() != expected.shape) return INFINITY;
  double err = 0.0;
  for (std::size_t i = 0; i < expected.data.size(); ++i) {
    err = std::max(err, std::abs(real.value()[i] - expected.data[i].real()));
    err = std::max(err, std::abs(imag.value()[i] - expected.data[i].imag()));
  }
  return err;
}

double max_abs_diff(const Var& readout, const reference::ComplexTensor& expected) {
  if (readout.shape() != expected.shape) return INFINITY;
  double err = 0.0;
  for (std::size_t i = 0; i < expected.data.size(); ++i) {
    err = std::max(err, std::abs(readout.value()[i] - expected.data[i].real()));
  }
  return err;
}

struct ConvCase {
  Tensor xr, xi, w, b;
  int pad;
  bool with_bias;
};

ConvCase random_conv_case(SplitMix64& rng, bool unit_inputs) {
  const std::size_t n = pick(rng, 1, 3), c = pick(rng, 1, 3), f = pick(rng, 1, 4);
  const std::size_t h = pick(rng, 3, 9), w = pick(rng, 3, 9);
  const std::size_t k = pick(rng, 1, std::min<std::size_t>(5, std::min(h, w)));
  ConvCase cc;
  cc.pad = static_cast<int>(rng.below(3));
  cc.with_bias = rng.below(2) == 1;
  if (unit_inputs) {
    const Tensor theta = random_tensor({n, c, h, w}, rng, -kPi, kPi);
    cc.xr = Tensor(theta.shape());
    cc.xi = Tensor(theta.shape());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      cc.xr[i] = std::cos(theta[i]);
      cc.xi[i] = std::sin(theta[i]);
    }
  } else {
    cc.xr = random_tensor({n, c, h, w}, rng, -1.0, 1.0);
    cc.xi = random_tensor({n, c, h, w}, rng, -1.0, 1.0);
  }
  cc.w = random_tensor({f, c, k, k}, rng, -kPi, kPi);
  cc.b = random_tensor({f}, rng, -kPi, kPi);
  return cc;
}

}  // namespace

SuiteResult verify_complex_conv(std::uint64_t seed, std::size_t instances) {
  SuiteResult r{"complex_conv2d vs complex-arithmetic convolution", instances, 0.0, 1e-10};
  SplitMix64 rng(seed);
  for (std::size_t t = 0; t < instances; ++t) {
    const ConvCase cc = random_conv_case(rng, false);
    Tape tape;
    const ComplexPair x{tape.constant(cc.xr), tape.constant(cc.xi)};
    std::optional<Var> b;
    if (cc.with_bias) b = tape.constant(cc.b);
    const ComplexPair out = complex_conv2d(x, tape.constant(cc.w), b, cc.pad);
    const auto expected = reference::complex_conv(reference::make_complex(cc.xr, cc.xi), cc.w,
                                                  cc.with_bias ? cc.b : Tensor(), cc.pad);
    r.max_error = std::max(r.max_error, max_abs_diff(out.real, out.imag, expected));
  }
  return r;
}

SuiteResult verify_qi_conv(std::uint64_t seed, std::size_t instances) {
  SuiteResult r{"qi_conv_layer vs five-step oracle", instances, 0.0, 1e-10};
  SplitMix64 rng(seed);
  for (std::size_t t = 0; t < instances; ++t) {
    const ConvCase cc = random_conv_case(rng, true);
    const bool readout = rng.below(2) == 1;
    Tape tape;
    const ComplexPair x{tape.constant(cc.xr), tape.constant(cc.xi)};
    std::optional<Var> b;
    if (cc.with_bias) b = tape.constant(cc.b);
    const QiOutput out = qi_conv_layer(x, tape.constant(cc.w), b, cc.pad,
                                       readout ? Boundary::kReadout : Boundary::kComplex);
    const auto expected = reference::qi_conv(reference::make_complex(cc.xr, cc.xi), cc.w,
                                             cc.with_bias ? cc.b : Tensor(), cc.pad, readout);
    const double err = readout ? max_abs_diff(std::get<Var>(out), expected)
                               : max_abs_diff(std::get<ComplexPair>(out).real,
                                              std::get<ComplexPair>(out).imag, expected);
    r.max_error = std::max(r.max_error, err);
  }
  return r;
}

SuiteResult verify_neuron(std::uint64_t seed, std::size_t instances) {
  SuiteResult r{"qi_neuron_layer vs neuron formula", instances, 0.0, 1e-10};
  SplitMix64 rng(seed);
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t batch = pick(rng, 1, 4), d = pick(rng, 1, 16), m = pick(rng, 1, 8);
    const Tensor x = random_tensor({batch, d}, rng, 0.0, 1.0);
    const Tensor u = random_tensor({d, m}, rng, -kPi, kPi);
    const Tensor b = random_tensor({m}, rng, -kPi, kPi);
    Tape tape;
    const QiOutput out =
        qi_neuron_layer(tape.constant(x), tape.constant(u), tape.constant(b), Boundary::kComplex);
    const ComplexPair& s = std::get<ComplexPair>(out);
    r.max_error = std::max(r.max_error, max_abs_diff(s.real, s.imag, reference::qi_neuron(x, u, b)));
  }
  return r;
}

SuiteResult verify_neuron_chain(std::uint64_t seed, std::size_t instances) {
  SuiteResult r{"qi_neuron_hidden_chain vs neuron formula", instances, 0.0, 1e-10};
  SplitMix64 rng(seed);
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t batch = pick(rng, 1, 4), d = pick(rng, 1, 16), m = pick(rng, 1, 8);
    const Tensor theta = random_tensor({batch, d}, rng, -kPi, kPi);
    Tensor pr(theta.shape()), pi(theta.shape());
    for (std::size_t i = 0; i < theta.size(); ++i) {
      pr[i] = std::cos(theta[i]);
      pi[i] = std::sin(theta[i]);
    }
    const Tensor u = random_tensor({d, m}, rng, -kPi, kPi);
    const Tensor b = random_tensor({m}, rng, -kPi, kPi);
    Tape tape;
    const QiOutput out = qi_neuron_hidden_chain({tape.constant(pr), tape.constant(pi)},
                                                tape.constant(u), tape.constant(b),
                                                Boundary::kComplex);
    const ComplexPair& s = std::get<ComplexPair>(out);
    const auto expected = reference::qi_neuron_chain(reference::make_complex(pr, pi), u, b);
    r.max_error = std::max(r.max_error, max_abs_diff(s.real, s.imag, expected));
  }
  return r;
}

std::vector<SuiteResult> verify_unit_circle(std::uint64_t seed, std::size_t angles) {
  SplitMix64 rng(seed);
  const Tensor a = random_tensor({angles}, rng, -4.0 * kPi, 4.0 * kPi);
  const Tensor b = random_tensor({angles}, rng, -4.0 * kPi, 4.0 * kPi);
  Tensor vr = random_tensor({angles}, rng, -10.0, 10.0);
  Tensor vi = random_tensor({angles}, rng, -10.0, 10.0);

  Tape tape;
  const Var va = tape.constant(a), vb = tape.constant(b);
  const ComplexPair composed = rotate_compose(phase_encode(va), phase_encode(vb));
  const ComplexPair summed = phase_encode(add(va, vb));
  const ComplexPair not0 = cnot_like(va, 0);
  const ComplexPair not1 = cnot_like(va, 1);
  const ArgNot an = arg_not({tape.constant(vr), tape.constant(vi)});

  SuiteResult homo{"phase_encode homomorphism f(a)f(b) = f(a+b)", angles, 0.0, 1e-12};
  SuiteResult c0{"cnot_like delta=0 is the conjugate", angles, 0.0, 1e-12};
  SuiteResult c1{"cnot_like delta=1 swaps the parts", angles, 0.0, 1e-12};
  SuiteResult ident{"arg_not output equals (Im v, Re v)/|v|", angles, 0.0, 1e-12};
  for (std::size_t i = 0; i < angles; ++i) {
    const double ca = std::cos(a[i]), sa = std::sin(a[i]);
    homo.max_error = std::max({homo.max_error, std::abs(composed.real.value()[i] - summed.real.value()[i]),
                               std::abs(composed.imag.value()[i] - summed.imag.value()[i])});
    c0.max_error = std::max({c0.max_error, std::abs(not0.real.value()[i] - ca),
                             std::abs(not0.imag.value()[i] + sa)});
    c1.max_error = std::max({c1.max_error, std::abs(not1.real.value()[i] - sa),
                             std::abs(not1.imag.value()[i] - ca)});
    const double mod = std::hypot(vr[i], vi[i]);
    ident.max_error = std::max({ident.max_error, std::abs(an.y.real.value()[i] - vi[i] / mod),
                                std::abs(an.y.imag.value()[i] - vr[i] / mod)});
  }
  return {homo, c0, c1, ident};
}

std::vector<SuiteResult> run_verify_ops(std::uint64_t seed) {
  std::vector<SuiteResult> out;
  out.push_back(verify_complex_conv(seed));
  out.push_back(verify_qi_conv(seed + 1));
  out.push_back(verify_neuron(seed + 2));
  out.push_back(verify_neuron_chain(seed + 3));
  for (SuiteResult& r : verify_unit_circle(seed + 4)) out.push_back(std::move(r));
  return out;
}

namespace {

// Scalar probe: sum of elementwise products with fixed random weights, so
// every output element gets a distinct, non-trivial upstream gradient.
Var probe(Tape& tape, const Var& v, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return sum(mul(v, tape.constant(random_tensor(v.shape(), rng, -1.0, 1.0))));
}

Var probe(Tape& tape, const ComplexPair& v, std::uint64_t seed) {
  return add(probe(tape, v.real, seed), probe(tape, v.imag, seed + 1));
}

Var probe(Tape& tape, const QiOutput& v, std::uint64_t seed) {
  return std::visit([&](const auto& x) { return probe(tape, x, seed); }, v);
}

Parameter param(const std::string& name, Shape shape, SplitMix64& rng, double lo, double hi) {
  return Parameter(name, random_tensor(std::move(shape), rng, lo, hi));
}

}  // namespace

std::vector<std::pair<std::string, GradCheckReport>> layer_gradchecks(std::uint64_t seed) {
  std::vector<std::pair<std::string, GradCheckReport>> out;
  SplitMix64 rng(seed);
  GradCheckOptions opts;
  opts.seed = seed;

  auto run = [&](const std::string& name, std::vector<Parameter*> ps, const LossBuilder& fn) {
    out.emplace_back(name, finite_diff_check(ps, fn, opts));
  };

  {
    Parameter x = param("x", {2, 2, 6, 6}, rng, -1, 1), k = param("k", {3, 2, 3, 3}, rng, -1, 1),
              b = param("b", {3}, rng, -1, 1);
    run("conv2d+bias", {&x, &k, &b}, [&](Tape& t) {
      return probe(t, add_channel_bias(conv2d(t.parameter(x), t.parameter(k), 1), t.parameter(b)),
                   seed);
    });
  }
  {
    Parameter x = param("x", {2, 2, 6, 6}, rng, -1, 1);
    run("maxpool2", {&x}, [&](Tape& t) { return probe(t, maxpool2(t.parameter(x)), seed); });
  }
  {
    Parameter x = param("x", {3, 7}, rng, -1, 1);
    run("relu", {&x}, [&](Tape& t) { return probe(t, relu(t.parameter(x)), seed); });
  }
  {
    Parameter x = param("x", {3, 7}, rng, -1, 1), w = param("w", {7, 4}, rng, -1, 1),
              b = param("b", {4}, rng, -1, 1);
    run("affine", {&x, &w, &b}, [&](Tape& t) {
      return probe(t, affine(t.parameter(x), t.parameter(w), t.parameter(b)), seed);
    });
  }
  {
    Parameter x = param("x", {4, 10}, rng, -2, 2);
    const std::vector<int> labels{0, 3, 9, 3};
    run("softmax_xent", {&x}, [&](Tape& t) { return softmax_xent(t.parameter(x), labels); });
    run("mse_onehot", {&x}, [&](Tape& t) { return mse_onehot(t.parameter(x), labels); });
  }
  {
    Parameter xr = param("x.real", {2, 2, 5, 5}, rng, -1, 1),
              xi = param("x.imag", {2, 2, 5, 5}, rng, -1, 1),
              w = param("w", {3, 2, 3, 3}, rng, -kPi, kPi), b = param("b", {3}, rng, -kPi, kPi);
    run("complex_conv2d", {&xr, &xi, &w, &b}, [&](Tape& t) {
      return probe(t,
                   complex_conv2d({t.parameter(xr), t.parameter(xi)}, t.parameter(w),
                                  t.parameter(b), 1),
                   seed);
    });
    run("qi_conv_layer complex", {&xr, &xi, &w, &b}, [&](Tape& t) {
      return probe(t,
                   qi_conv_layer({t.parameter(xr), t.parameter(xi)}, t.parameter(w),
                                 t.parameter(b), 1, Boundary::kComplex),
                   seed);
    });
    run("qi_conv_layer readout", {&xr, &xi, &w, &b}, [&](Tape& t) {
      return probe(t,
                   qi_conv_layer({t.parameter(xr), t.parameter(xi)}, t.parameter(w),
                                 t.parameter(b), 1, Boundary::kReadout),
                   seed);
    });
  }
  {
    Parameter x = param("x", {3, 9}, rng, 0, 1), u = param("u", {9, 5}, rng, -kPi, kPi),
              b = param("b", {5}, rng, -kPi, kPi);
    run("qi_neuron_layer complex", {&x, &u, &b}, [&](Tape& t) {
      return probe(t, qi_neuron_layer(t.parameter(x), t.parameter(u), t.parameter(b),
                                      Boundary::kComplex),
                   seed);
    });
    run("qi_neuron_layer readout", {&x, &u, &b}, [&](Tape& t) {
      return probe(t, qi_neuron_layer(t.parameter(x), t.parameter(u), t.parameter(b),
                                      Boundary::kReadout),
                   seed);
    });
    Parameter pr = param("prev.real", {3, 9}, rng, -1, 1), pi = param("prev.imag", {3, 9}, rng, -1, 1);
    run("qi_neuron_hidden_chain", {&pr, &pi, &u, &b}, [&](Tape& t) {
      return probe(t,
                   qi_neuron_hidden_chain({t.parameter(pr), t.parameter(pi)}, t.parameter(u),
                                          t.parameter(b), Boundary::kReadout),
                   seed);
    });
  }
  return out;
}

GradCheckReport network_gradcheck(NetworkVariant variant, bool tiny, std::uint64_t seed,
                                  LossKind loss, NetworkOptions options) {
  Network net = tiny ? Network(variant, DatasetKind::kMnist, tiny_spec(1), seed, options)
                     : build(variant, DatasetKind::kMnist, seed, options);
  const ArchSpec& spec = net.spec();
  SplitMix64 rng(seed ^ 0x5eedULL);
  const std::size_t batch = 4;
  const Tensor x = random_tensor({batch, spec.channels, spec.height, spec.width}, rng, 0.0, 1.0);
  std::vector<int> labels(batch);
  for (int& l : labels) l = static_cast<int>(rng.below(10));
  GradCheckOptions opts;
  opts.seed = seed;
  return finite_diff_check(net, x, labels, loss, opts);
}

}  // namespace qicnn
