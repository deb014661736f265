#include "qicnn/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qicnn/parallel.hpp"

namespace qicnn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using Index = Eigen::Index;

Index ix(std::size_t v) { return static_cast<Index>(v); }

void require_same_tape(const Var& a, const Var& b, const char* op) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw std::logic_error(std::string(op) + ": operands must live on the same tape");
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  require_same_tape(a, b, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_to_string(v.shape()));
  }
}

struct ConvGeometry {
  std::size_t n, c, h, w;      // input
  std::size_t f, kh, kw;       // kernel
  std::size_t ho, wo;          // output
  std::size_t pad, stride;
  std::size_t patch() const { return c * kh * kw; }
  std::size_t pixels() const { return ho * wo; }
};

// cols[(c*kh + i)*kw + j, oh*wo + ow] = x[n, c, oh*s + i - pad, ow*s + j - pad]
void im2col(const ConvGeometry& g, const double* image, double* cols) {
  const std::size_t p = g.pixels();
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* plane = image + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        double* row = cols + ((c * g.kh + i) * g.kw + j) * p;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                          static_cast<std::ptrdiff_t>(g.pad);
          double* out = row + oh * g.wo;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(out, out + g.wo, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(ih) * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                            static_cast<std::ptrdiff_t>(g.pad);
            out[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w))
                          ? 0.0
                          : src[static_cast<std::size_t>(iw)];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* cols, double* image) {
  const std::size_t p = g.pixels();
  for (std::size_t c = 0; c < g.c; ++c) {
    double* plane = image + c * g.h * g.w;
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const double* row = cols + ((c * g.kh + i) * g.kw + j) * p;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
          double* dst = plane + static_cast<std::size_t>(ih) * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) continue;
            dst[static_cast<std::size_t>(iw)] += row[oh * g.wo + ow];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& input, const Var& kernel, int pad, int stride) {
  require_same_tape(input, kernel, "conv2d");
  require_rank(input, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (pad < 0 || stride < 1) throw std::invalid_argument("conv2d: pad must be >= 0, stride >= 1");
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  if (is[1] != ks[1]) {
    throw ShapeError("conv2d: input has " + std::to_string(is[1]) + " channels, kernel expects " +
                     std::to_string(ks[1]));
  }
  ConvGeometry g{is[0], is[1], is[2], is[3], ks[0], ks[2], ks[3], 0, 0,
                 static_cast<std::size_t>(pad), static_cast<std::size_t>(stride)};
  if (g.kh > g.h + 2 * g.pad || g.kw > g.w + 2 * g.pad) {
    throw ShapeError("conv2d: kernel " + shape_to_string(ks) + " larger than padded input " +
                     shape_to_string(is));
  }
  g.ho = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.wo = (g.w + 2 * g.pad - g.kw) / g.stride + 1;

  const Tensor& x = input.value();
  const Tensor& k = kernel.value();
  Tensor out({g.n, g.f, g.ho, g.wo});
  const std::size_t in_stride = g.c * g.h * g.w;
  const std::size_t out_stride = g.f * g.pixels();
  parallel_for(g.n, [&](std::size_t n) {
    std::vector<double> cols(g.patch() * g.pixels());
    im2col(g, x.raw() + n * in_stride, cols.data());
    MatMap(out.raw() + n * out_stride, ix(g.f), ix(g.pixels())).noalias() =
        ConstMatMap(k.raw(), ix(g.f), ix(g.patch())) *
        ConstMatMap(cols.data(), ix(g.patch()), ix(g.pixels()));
  });

  return input.tape()->record(std::move(out), {input, kernel}, [input, kernel, g](Tape& tape, const Tensor& gout) {
    const Tensor& x = tape.value(input.id());
    const Tensor& k = tape.value(kernel.id());
    const bool need_x = tape.requires_grad(input);
    const bool need_k = tape.requires_grad(kernel);
    Tensor* dx = need_x ? &tape.grad_buffer(input) : nullptr;
    const std::size_t in_stride = g.c * g.h * g.w;
    const std::size_t out_stride = g.f * g.pixels();
    const std::size_t kernel_size = g.f * g.patch();
    // Per-image kernel partials are summed afterwards in image order, so the
    // result does not depend on the worker count.
    std::vector<double> partial(need_k ? g.n * kernel_size : 0);
    parallel_for(g.n, [&](std::size_t n) {
      std::vector<double> cols(g.patch() * g.pixels());
      ConstMatMap go(gout.raw() + n * out_stride, ix(g.f), ix(g.pixels()));
      if (need_k) {
        im2col(g, x.raw() + n * in_stride, cols.data());
        MatMap(partial.data() + n * kernel_size, ix(g.f), ix(g.patch())).noalias() =
            go * ConstMatMap(cols.data(), ix(g.patch()), ix(g.pixels())).transpose();
      }
      if (need_x) {
        MatMap(cols.data(), ix(g.patch()), ix(g.pixels())).noalias() =
            ConstMatMap(k.raw(), ix(g.f), ix(g.patch())).transpose() * go;
        col2im_add(g, cols.data(), dx->raw() + n * in_stride);
      }
    });
    if (need_k) {
      Tensor& dk = tape.grad_buffer(kernel);
      for (std::size_t n = 0; n < g.n; ++n) {
        const double* p = partial.data() + n * kernel_size;
        for (std::size_t i = 0; i < kernel_size; ++i) dk[i] += p[i];
      }
    }
  });
}

Var add_channel_bias(const Var& input, const Var& bias, double sign) {
  require_same_tape(input, bias, "add_channel_bias");
  require_rank(input, 4, "add_channel_bias input");
  const Shape& s = input.shape();
  if (bias.value().size() != s[1]) {
    throw ShapeError("add_channel_bias: bias " + shape_to_string(bias.shape()) +
                     " does not match channels of " + shape_to_string(s));
  }
  const std::size_t plane = s[2] * s[3];
  Tensor out = input.value();
  const Tensor& b = bias.value();
  for (std::size_t n = 0; n < s[0]; ++n) {
    for (std::size_t c = 0; c < s[1]; ++c) {
      double* p = out.raw() + (n * s[1] + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += sign * b[c];
    }
  }
  return input.tape()->record(std::move(out), {input, bias}, [input, bias, sign, s, plane](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(input)) tape.grad_buffer(input).add_(g);
    if (tape.requires_grad(bias)) {
      Tensor& db = tape.grad_buffer(bias);
      for (std::size_t n = 0; n < s[0]; ++n) {
        for (std::size_t c = 0; c < s[1]; ++c) {
          const double* p = g.raw() + (n * s[1] + c) * plane;
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += p[i];
          db[c] += sign * acc;
        }
      }
    }
  });
}

Var maxpool2(const Var& input) {
  require_rank(input, 4, "maxpool2");
  const Shape& s = input.shape();
  if (s[2] % 2 != 0 || s[3] % 2 != 0) {
    throw ShapeError("maxpool2: spatial dims must be even, got " + shape_to_string(s));
  }
  const std::size_t ho = s[2] / 2, wo = s[3] / 2;
  const Tensor& x = input.value();
  Tensor out({s[0], s[1], ho, wo});
  std::vector<std::size_t> argmax(out.size());
  Tape& tape = *input.tape();
  std::size_t o = 0;
  for (std::size_t nc = 0; nc < s[0] * s[1]; ++nc) {
    const std::size_t base = nc * s[2] * s[3];
    for (std::size_t oh = 0; oh < ho; ++oh) {
      for (std::size_t ow = 0; ow < wo; ++ow, ++o) {
        std::size_t best = base + 2 * oh * s[3] + 2 * ow;
        unsigned slot = 0;
        const std::size_t cand[3] = {best + 1, best + s[3], best + s[3] + 1};
        for (unsigned k = 0; k < 3; ++k) {
          if (x[cand[k]] > x[best]) {
            best = cand[k];
            slot = k + 1;
          }
        }
        out[o] = x[best];
        argmax[o] = best;
        if (tape.branch_tracking()) tape.mix_branch(o * 4 + slot);
      }
    }
  }
  return tape.record(std::move(out), {input}, [input, argmax = std::move(argmax)](Tape& t, const Tensor& g) {
    Tensor& dx = t.grad_buffer(input);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += g[i];
  });
}

Var relu(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  Tape& tape = *x.tape();
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const bool on = xv[i] > 0.0;
    out[i] = on ? xv[i] : 0.0;
    if (tape.branch_tracking()) {
      word = (word << 1) | (on ? 1u : 0u);
      if (i % 64 == 63) {
        tape.mix_branch(word);
        word = 0;
      }
    }
  }
  if (tape.branch_tracking()) tape.mix_branch(word);
  return tape.record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += g[i];
    }
  });
}

Var matmul(const Var& x, const Var& w) {
  require_same_tape(x, w, "matmul");
  require_rank(x, 2, "matmul lhs");
  require_rank(w, 2, "matmul rhs");
  const std::size_t n = x.shape()[0], d = x.shape()[1], m = w.shape()[1];
  if (w.shape()[0] != d) {
    throw ShapeError("matmul: inner dims differ " + shape_to_string(x.shape()) + " x " +
                     shape_to_string(w.shape()));
  }
  Tensor out({n, m});
  MatMap(out.raw(), ix(n), ix(m)).noalias() =
      ConstMatMap(x.value().raw(), ix(n), ix(d)) * ConstMatMap(w.value().raw(), ix(d), ix(m));
  return x.tape()->record(std::move(out), {x, w}, [x, w, n, d, m](Tape& t, const Tensor& g) {
    ConstMatMap go(g.raw(), ix(n), ix(m));
    if (t.requires_grad(x)) {
      MatMap(t.grad_buffer(x).raw(), ix(n), ix(d)).noalias() +=
          go * ConstMatMap(t.value(w.id()).raw(), ix(d), ix(m)).transpose();
    }
    if (t.requires_grad(w)) {
      MatMap(t.grad_buffer(w).raw(), ix(d), ix(m)).noalias() +=
          ConstMatMap(t.value(x.id()).raw(), ix(n), ix(d)).transpose() * go;
    }
  });
}

Var add_row_bias(const Var& input, const Var& bias, double sign) {
  require_same_tape(input, bias, "add_row_bias");
  require_rank(input, 2, "add_row_bias input");
  const std::size_t n = input.shape()[0], m = input.shape()[1];
  if (bias.value().size() != m) {
    throw ShapeError("add_row_bias: bias " + shape_to_string(bias.shape()) + " vs " +
                     shape_to_string(input.shape()));
  }
  Tensor out = input.value();
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] += sign * b[c];
  }
  return input.tape()->record(std::move(out), {input, bias}, [input, bias, sign, n, m](Tape& t, const Tensor& g) {
    if (t.requires_grad(input)) t.grad_buffer(input).add_(g);
    if (t.requires_grad(bias)) {
      Tensor& db = t.grad_buffer(bias);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) db[c] += sign * g[r * m + c];
      }
    }
  });
}

Var affine(const Var& x, const Var& weight, const Var& bias) {
  return add_row_bias(matmul(x, weight), bias);
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out.add_(b.value());
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.grad_buffer(a).add_(g);
    if (t.requires_grad(b)) t.grad_buffer(b).add_(g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.grad_buffer(a).add_(g);
    if (t.requires_grad(b)) {
      Tensor& db = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a.id());
    const Tensor& bv = t.value(b.id());
    if (t.requires_grad(a)) {
      Tensor& da = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      Tensor& db = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& x, double c) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= c;
  return x.tape()->record(std::move(out), {x}, [x, c](Tape& t, const Tensor& g) {
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += c * g[i];
  });
}

Var cos(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::cos(xv[i]);
  return x.tape()->record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] -= g[i] * std::sin(xv[i]);
  });
}

Var sin(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::sin(xv[i]);
  return x.tape()->record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * std::cos(xv[i]);
  });
}

Var square(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * xv[i];
  return x.tape()->record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(x.id());
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += 2.0 * xv[i] * g[i];
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape()->record(std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& dx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  return x.tape()->record(Tensor::scalar(acc), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& dx = t.grad_buffer(x);
    for (double& v : dx.data()) v += g[0];
  });
}

namespace {
void check_labels(std::span<const int> labels, std::size_t n, std::size_t classes, const char* op) {
  if (labels.size() != n) {
    throw ShapeError(std::string(op) + ": " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::out_of_range(std::string(op) + ": label " + std::to_string(labels[i]) +
                              " at row " + std::to_string(i) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
  }
}
}  // namespace

Var softmax_xent(const Var& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_xent");
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  check_labels(labels, n, c, "softmax_xent");
  const Tensor& z = logits.value();
  // Row softmax, kept for the backward rule.
  Tensor probs({n, c});
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = z.raw() + r * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < c; ++j) probs[r * c + j] = std::exp(row[j] - lse);
    loss += lse - row[static_cast<std::size_t>(labels[r])];
  }
  loss /= static_cast<double>(n);
  std::vector<int> lab(labels.begin(), labels.end());
  return logits.tape()->record(Tensor::scalar(loss), {logits}, [logits, probs = std::move(probs), lab = std::move(lab), n, c](Tape& t, const Tensor& g) {
    Tensor& dz = t.grad_buffer(logits);
    const double s = g[0] / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const double target = static_cast<std::size_t>(lab[r]) == j ? 1.0 : 0.0;
        dz[r * c + j] += s * (probs[r * c + j] - target);
      }
    }
  });
}

Var mse_onehot(const Var& outputs, std::span<const int> labels) {
  require_rank(outputs, 2, "mse_onehot");
  const std::size_t n = outputs.shape()[0], c = outputs.shape()[1];
  check_labels(labels, n, c, "mse_onehot");
  const Tensor& y = outputs.value();
  Tensor diff({n, c});
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const double target = static_cast<std::size_t>(labels[r]) == j ? 1.0 : 0.0;
      const double d = y[r * c + j] - target;
      diff[r * c + j] = d;
      loss += d * d;
    }
  }
  loss /= static_cast<double>(n);
  return outputs.tape()->record(Tensor::scalar(loss), {outputs}, [outputs, diff = std::move(diff), n](Tape& t, const Tensor& g) {
    Tensor& dy = t.grad_buffer(outputs);
    const double s = 2.0 * g[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < diff.size(); ++i) dy[i] += s * diff[i];
  });
}

}  // namespace qicnn
