#include "qicnn/reference.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qicnn::reference {

namespace {
constexpr double kHalfPi = std::numbers::pi / 2.0;

cplx unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

cplx not_rotation(cplx v) {
  // arg is undefined at 0; mirror the library's clamp (θ = 0).
  if (std::abs(v) < 1e-12) return unit(0.0);
  return unit(kHalfPi - std::arg(v));
}
}  // namespace

ComplexTensor make_complex(const Tensor& real, const Tensor& imag) {
  if (real.shape() != imag.shape()) throw ShapeError("make_complex: shape mismatch");
  ComplexTensor out{real.shape(), std::vector<cplx>(real.size())};
  for (std::size_t i = 0; i < real.size(); ++i) out.data[i] = {real[i], imag[i]};
  return out;
}

Tensor conv2d(const Tensor& x, const Tensor& k, int pad, int stride) {
  const std::size_t n_ = x.dim(0), c_ = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t f_ = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  if (k.dim(1) != c_) throw ShapeError("reference conv2d: channel mismatch");
  const long ho = (static_cast<long>(h) + 2 * pad - static_cast<long>(kh)) / stride + 1;
  const long wo = (static_cast<long>(w) + 2 * pad - static_cast<long>(kw)) / stride + 1;
  Tensor out({n_, f_, static_cast<std::size_t>(ho), static_cast<std::size_t>(wo)});
  for (std::size_t n = 0; n < n_; ++n)
    for (std::size_t f = 0; f < f_; ++f)
      for (long oh = 0; oh < ho; ++oh)
        for (long ow = 0; ow < wo; ++ow) {
          double acc = 0.0;
          for (std::size_t c = 0; c < c_; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long ih = oh * stride + static_cast<long>(i) - pad;
                const long iw = ow * stride + static_cast<long>(j) - pad;
                if (ih < 0 || iw < 0 || ih >= static_cast<long>(h) || iw >= static_cast<long>(w))
                  continue;
                acc += x.at(n, c, static_cast<std::size_t>(ih), static_cast<std::size_t>(iw)) *
                       k.at(f, c, i, j);
              }
          out.at(n, f, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)) = acc;
        }
  return out;
}

Tensor maxpool2(const Tensor& x) {
  Tensor out({x.dim(0), x.dim(1), x.dim(2) / 2, x.dim(3) / 2});
  for (std::size_t n = 0; n < x.dim(0); ++n)
    for (std::size_t c = 0; c < x.dim(1); ++c)
      for (std::size_t oh = 0; oh < out.dim(2); ++oh)
        for (std::size_t ow = 0; ow < out.dim(3); ++ow) {
          double m = x.at(n, c, 2 * oh, 2 * ow);
          for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) m = std::max(m, x.at(n, c, 2 * oh + i, 2 * ow + j));
          out.at(n, c, oh, ow) = m;
        }
  return out;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t n_ = x.dim(0), d_ = x.dim(1), m_ = w.dim(1);
  Tensor out({n_, m_});
  for (std::size_t n = 0; n < n_; ++n)
    for (std::size_t m = 0; m < m_; ++m) {
      double acc = b.empty() ? 0.0 : b[m];
      for (std::size_t d = 0; d < d_; ++d) acc += x.at(n, d) * w.at(d, m);
      out.at(n, m) = acc;
    }
  return out;
}

double softmax_xent(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n_ = logits.dim(0), c_ = logits.dim(1);
  double total = 0.0;
  for (std::size_t n = 0; n < n_; ++n) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < c_; ++c) mx = std::max(mx, logits.at(n, c));
    double s = 0.0;
    for (std::size_t c = 0; c < c_; ++c) s += std::exp(logits.at(n, c) - mx);
    total += mx + std::log(s) - logits.at(n, static_cast<std::size_t>(labels[n]));
  }
  return total / static_cast<double>(n_);
}

ComplexTensor phase(const Tensor& theta) {
  ComplexTensor out{theta.shape(), std::vector<cplx>(theta.size())};
  for (std::size_t i = 0; i < theta.size(); ++i) out.data[i] = unit(theta[i]);
  return out;
}

ComplexTensor complex_conv(const ComplexTensor& x, const Tensor& w_angles, const Tensor& b_angles,
                           int pad) {
  const std::size_t n_ = x.shape[0], c_ = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::size_t f_ = w_angles.dim(0), kh = w_angles.dim(2), kw = w_angles.dim(3);
  if (w_angles.dim(1) != c_) throw ShapeError("reference complex_conv: channel mismatch");
  const long ho = static_cast<long>(h) + 2 * pad - static_cast<long>(kh) + 1;
  const long wo = static_cast<long>(w) + 2 * pad - static_cast<long>(kw) + 1;
  ComplexTensor out{{n_, f_, static_cast<std::size_t>(ho), static_cast<std::size_t>(wo)}, {}};
  out.data.resize(n_ * f_ * static_cast<std::size_t>(ho * wo));
  std::size_t o = 0;
  for (std::size_t n = 0; n < n_; ++n)
    for (std::size_t f = 0; f < f_; ++f)
      for (long oh = 0; oh < ho; ++oh)
        for (long ow = 0; ow < wo; ++ow, ++o) {
          cplx acc = 0.0;
          for (std::size_t c = 0; c < c_; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long ih = oh + static_cast<long>(i) - pad;
                const long iw = ow + static_cast<long>(j) - pad;
                if (ih < 0 || iw < 0 || ih >= static_cast<long>(h) || iw >= static_cast<long>(w))
                  continue;
                const cplx xv = x.data[((n * c_ + c) * h + static_cast<std::size_t>(ih)) * w +
                                       static_cast<std::size_t>(iw)];
                acc += xv * unit(w_angles.at(f, c, i, j));
              }
          if (!b_angles.empty()) acc -= unit(b_angles[f]);
          out.data[o] = acc;
        }
  return out;
}

ComplexTensor qi_conv(const ComplexTensor& x, const Tensor& w_angles, const Tensor& b_angles,
                      int pad, bool readout) {
  ComplexTensor v = complex_conv(x, w_angles, b_angles, pad);
  for (cplx& z : v.data) {
    const cplx y = not_rotation(z);
    z = readout ? cplx(y.imag() * y.imag(), 0.0) : y;
  }
  return v;
}

ComplexTensor qi_neuron_chain(const ComplexTensor& prev, const Tensor& u_angles,
                              const Tensor& b_angles) {
  const std::size_t n_ = prev.shape[0], d_ = prev.shape[1], m_ = u_angles.dim(1);
  if (u_angles.dim(0) != d_) throw ShapeError("reference neuron: dim mismatch");
  ComplexTensor out{{n_, m_}, std::vector<cplx>(n_ * m_)};
  for (std::size_t n = 0; n < n_; ++n)
    for (std::size_t m = 0; m < m_; ++m) {
      cplx sigma = 0.0;
      for (std::size_t d = 0; d < d_; ++d) sigma += unit(u_angles.at(d, m)) * prev.data[n * d_ + d];
      sigma -= unit(b_angles[m]);
      out.data[n * m_ + m] = not_rotation(sigma);
    }
  return out;
}

ComplexTensor qi_neuron(const Tensor& x, const Tensor& u_angles, const Tensor& b_angles) {
  ComplexTensor encoded{x.shape(), std::vector<cplx>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) encoded.data[i] = unit(kHalfPi * x[i]);
  return qi_neuron_chain(encoded, u_angles, b_angles);
}

}  // namespace qicnn::reference
