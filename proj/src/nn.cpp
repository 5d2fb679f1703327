#include "urveda/nn.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace urveda {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kh, kw, stride, pad_h, pad_w;
  std::size_t out_h, out_w;

  std::size_t patch() const { return channels * kh * kw; }
  std::size_t positions() const { return out_h * out_w; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad_h == 0 && pad_w == 0; }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& w, std::size_t stride, Padding padding) {
  if (x.size() != 3) throw ShapeError("conv2d expects C×H×W input, got " + shape_str(x));
  if (w.size() != 4) throw ShapeError("conv2d expects O×I×kH×kW weights, got " + shape_str(w));
  if (x[0] != w[1]) {
    throw ShapeError("conv2d channel mismatch: input " + shape_str(x) + " vs weights " +
                     shape_str(w));
  }
  if (stride == 0) throw ShapeError("conv2d stride must be positive");
  ConvGeometry g{};
  g.channels = x[0];
  g.height = x[1];
  g.width = x[2];
  g.kh = w[2];
  g.kw = w[3];
  g.stride = stride;
  if (padding == Padding::kSame) {
    if (g.kh % 2 == 0 || g.kw % 2 == 0) {
      throw ShapeError("same padding needs odd kernel extents, got " + shape_str(w));
    }
    g.pad_h = g.kh / 2;
    g.pad_w = g.kw / 2;
  }
  if (g.kh > g.height + 2 * g.pad_h || g.kw > g.width + 2 * g.pad_w) {
    throw ShapeError("conv2d kernel " + shape_str(w) + " larger than padded input " +
                     shape_str(x));
  }
  g.out_h = (g.height + 2 * g.pad_h - g.kh) / stride + 1;
  g.out_w = (g.width + 2 * g.pad_w - g.kw) / stride + 1;
  return g;
}

// cols[(c·kh + i)·kw + j][oy·out_w + ox] = x[c][oy·s + i − p][ox·s + j − p] (zero outside).
std::vector<double> im2col(std::span<const double> x, const ConvGeometry& g) {
  std::vector<double> cols(g.patch() * g.positions(), 0.0);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j, ++row) {
        double* dst = cols.data() + row * g.positions();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                   static_cast<std::ptrdiff_t>(g.pad_h);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) continue;
          const double* src = x.data() + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                      static_cast<std::ptrdiff_t>(g.pad_w);
            if (xx >= 0 && xx < static_cast<std::ptrdiff_t>(g.width)) {
              dst[oy * g.out_w + ox] = src[xx];
            }
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(std::span<const double> cols, const ConvGeometry& g, std::vector<double>& dx) {
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j, ++row) {
        const double* src = cols.data() + row * g.positions();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                                   static_cast<std::ptrdiff_t>(g.pad_h);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) continue;
          double* dst = dx.data() + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                                      static_cast<std::ptrdiff_t>(g.pad_w);
            if (xx >= 0 && xx < static_cast<std::ptrdiff_t>(g.width)) {
              dst[xx] += src[oy * g.out_w + ox];
            }
          }
        }
      }
    }
  }
}

void check_spatial(const Tensor& x, const char* op) {
  if (x.rank() != 3) {
    throw ShapeError(std::string(op) + " expects C×H×W input, got " + shape_str(x.shape()));
  }
}

// Splits a tensor into (outer, length, inner) around `axis` for softmax-style ops.
struct AxisSplit {
  std::size_t outer, length, inner;
};

AxisSplit split_axis(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": invalid axis " + std::to_string(axis) + " for " +
                     shape_str(s));
  }
  AxisSplit a{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
  return a;
}

}  // namespace

std::size_t count_elements(const ParameterList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

void zero_grads(ParameterList& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.mutable_data()) v = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------- layers

Conv2dLayer Conv2dLayer::create(std::size_t in_channels, std::size_t out_channels,
                                std::size_t kernel, Rng& rng, Padding padding,
                                std::size_t stride) {
  if (kernel == 0 || stride == 0) throw ConfigError("conv kernel and stride must be positive");
  if (padding == Padding::kSame && kernel % 2 == 0) {
    throw ConfigError("same padding needs an odd kernel, got " + std::to_string(kernel));
  }
  Conv2dLayer layer;
  layer.weight = Tensor::zeros({out_channels, in_channels, kernel, kernel});
  layer.bias = Tensor::zeros({out_channels});
  layer.stride = stride;
  layer.padding = padding;
  glorot_uniform(layer.weight, in_channels * kernel * kernel, out_channels * kernel * kernel, rng);
  layer.weight.set_requires_grad(true);
  layer.bias.set_requires_grad(true);
  return layer;
}

void Conv2dLayer::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

void Conv2dLayer::zero() {
  std::fill(weight.mutable_data().begin(), weight.mutable_data().end(), 0.0);
  std::fill(bias.mutable_data().begin(), bias.mutable_data().end(), 0.0);
}

LinearLayer LinearLayer::create(std::size_t in_features, std::size_t out_features, Rng& rng,
                                bool with_bias) {
  LinearLayer layer;
  layer.weight = Tensor::zeros({out_features, in_features});
  glorot_uniform(layer.weight, in_features, out_features, rng);
  layer.weight.set_requires_grad(true);
  if (with_bias) {
    layer.bias = Tensor::zeros({out_features});
    layer.bias.set_requires_grad(true);
  }
  return layer;
}

void LinearLayer::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

void LinearLayer::zero() {
  std::fill(weight.mutable_data().begin(), weight.mutable_data().end(), 0.0);
  if (bias.defined()) std::fill(bias.mutable_data().begin(), bias.mutable_data().end(), 0.0);
}

LayerNorm LayerNorm::create(std::size_t length, double epsilon) {
  LayerNorm ln;
  ln.gamma = Tensor::ones({length});
  ln.beta = Tensor::zeros({length});
  ln.gamma.set_requires_grad(true);
  ln.beta.set_requires_grad(true);
  ln.epsilon = epsilon;
  return ln;
}

void LayerNorm::collect(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

// ---------------------------------------------------------------- conv2d

Tensor conv2d(const Tensor& x, const Conv2dLayer& layer) {
  return conv2d(x, layer.weight, layer.bias, layer.stride, layer.padding);
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              Padding padding) {
  const ConvGeometry g = conv_geometry(x.shape(), weight.shape(), stride, padding);
  const std::size_t out_ch = weight.dim(0);
  if (bias.numel() != out_ch || bias.rank() != 1) {
    throw ShapeError("conv2d bias " + shape_str(bias.shape()) + " does not match " +
                     std::to_string(out_ch) + " output channels");
  }
  const std::size_t positions = g.positions();

  // Pointwise convolutions read the input directly; others go through im2col.
  auto cols = std::make_shared<std::vector<double>>();
  if (!g.pointwise()) *cols = im2col(x.data(), g);
  const double* col_ptr = g.pointwise() ? x.data().data() : cols->data();

  Tensor out = Tensor::zeros({out_ch, g.out_h, g.out_w});
  {
    ConstMatMap w(weight.data().data(), out_ch, g.patch());
    ConstMatMap c(col_ptr, g.patch(), positions);
    MatMap o(out.mutable_data().data(), out_ch, positions);
    o.noalias() = w * c;
    auto b = bias.data();
    for (std::size_t k = 0; k < out_ch; ++k) o.row(k).array() += b[k];
  }

  if (Tape* tape = detail::recording_tape({&x, &weight, &bias})) {
    tape->record(out, {x, weight, bias},
                 [x, weight, cols, g, out_ch](std::span<const double> grad, auto grads) {
                   const std::size_t positions = g.positions();
                   ConstMatMap go(grad.data(), out_ch, positions);
                   const double* col_ptr = g.pointwise() ? x.data().data() : cols->data();
                   ConstMatMap c(col_ptr, g.patch(), positions);
                   if (grads[1]) {
                     MatMap gw(grads[1]->data(), out_ch, g.patch());
                     gw.noalias() += go * c.transpose();
                   }
                   if (grads[2]) {
                     auto& gb = *grads[2];
                     for (std::size_t k = 0; k < out_ch; ++k) gb[k] += go.row(k).sum();
                   }
                   if (grads[0]) {
                     ConstMatMap w(weight.data().data(), out_ch, g.patch());
                     if (g.pointwise()) {
                       MatMap gx(grads[0]->data(), g.patch(), positions);
                       gx.noalias() += w.transpose() * go;
                     } else {
                       std::vector<double> dcols(g.patch() * positions);
                       MatMap dc(dcols.data(), g.patch(), positions);
                       dc.noalias() = w.transpose() * go;
                       col2im_add(dcols, g, *grads[0]);
                     }
                   }
                 });
  }
  return out;
}

// ---------------------------------------------------------------- linear / layernorm

Tensor linear(const Tensor& x, const LinearLayer& layer) {
  const bool vector_input = x.rank() == 1;
  Tensor rows = vector_input ? reshape(x, {1, x.dim(0)}) : x;
  if (rows.rank() != 2 || rows.dim(1) != layer.in_features()) {
    throw ShapeError("linear expects [N×" + std::to_string(layer.in_features()) + "] input, got " +
                     shape_str(x.shape()));
  }
  Tensor y = matmul(rows, transpose(layer.weight));
  if (layer.bias.defined()) y = add(y, layer.bias);
  return vector_input ? reshape(y, {layer.out_features()}) : y;
}

Tensor layernorm(const Tensor& x, const LayerNorm& ln) {
  return layernorm(x, ln.gamma, ln.beta, ln.epsilon);
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double epsilon) {
  if (x.rank() == 0) throw ShapeError("layernorm needs rank >= 1");
  const std::size_t len = x.shape().back();
  if (gamma.numel() != len || beta.numel() != len) {
    throw ShapeError("layernorm length " + std::to_string(gamma.numel()) +
                     " does not match trailing extent of " + shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / len;
  Tensor out = Tensor::zeros(x.shape());
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  {
    auto px = x.data();
    auto pg = gamma.data();
    auto pb = beta.data();
    auto po = out.mutable_data();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = px.data() + r * len;
      double mu = 0.0;
      for (std::size_t i = 0; i < len; ++i) mu += row[i];
      mu /= static_cast<double>(len);
      double var = 0.0;
      for (std::size_t i = 0; i < len; ++i) var += (row[i] - mu) * (row[i] - mu);
      var /= static_cast<double>(len);
      const double inv = 1.0 / std::sqrt(var + epsilon);
      (*inv_std)[r] = inv;
      for (std::size_t i = 0; i < len; ++i) {
        const double h = (row[i] - mu) * inv;
        (*xhat)[r * len + i] = h;
        po[r * len + i] = pg[i] * h + pb[i];
      }
    }
  }
  if (Tape* tape = detail::recording_tape({&x, &gamma, &beta})) {
    tape->record(out, {x, gamma, beta},
                 [gamma, xhat, inv_std, rows, len](std::span<const double> g, auto grads) {
                   auto pg = gamma.data();
                   std::vector<double> dh(len);
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* h = xhat->data() + r * len;
                     const double* gr = g.data() + r * len;
                     if (grads[1])
                       for (std::size_t i = 0; i < len; ++i) (*grads[1])[i] += gr[i] * h[i];
                     if (grads[2])
                       for (std::size_t i = 0; i < len; ++i) (*grads[2])[i] += gr[i];
                     if (!grads[0]) continue;
                     double mean_dh = 0.0;
                     double mean_dh_h = 0.0;
                     for (std::size_t i = 0; i < len; ++i) {
                       dh[i] = gr[i] * pg[i];
                       mean_dh += dh[i];
                       mean_dh_h += dh[i] * h[i];
                     }
                     mean_dh /= static_cast<double>(len);
                     mean_dh_h /= static_cast<double>(len);
                     double* gx = grads[0]->data() + r * len;
                     for (std::size_t i = 0; i < len; ++i)
                       gx[i] += (*inv_std)[r] * (dh[i] - mean_dh - h[i] * mean_dh_h);
                   }
                 });
  }
  return out;
}

// ---------------------------------------------------------------- pooling / resampling

Tensor maxpool2d(const Tensor& x) {
  check_spatial(x, "maxpool2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2d needs even spatial extents, got " + shape_str(x.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out = Tensor::zeros({c, oh, ow});
  std::vector<std::size_t> argmax(c * oh * ow);
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const std::size_t o = (k * oh + y) * ow + xx;
        std::size_t best = (k * h + 2 * y) * w + 2 * xx;
        // Row-major window scan; ties keep the first (lowest index) element.
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t i = (k * h + 2 * y + dy) * w + 2 * xx + dx;
            if (px[i] > px[best]) best = i;
          }
        }
        argmax[o] = best;
        po[o] = px[best];
      }
    }
  }
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [argmax = std::move(argmax)](std::span<const double> g, auto grads) {
      auto& gx = *grads[0];
      for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += g[o];
    });
  }
  return out;
}

Tensor avgpool2d(const Tensor& x) {
  check_spatial(x, "avgpool2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("avgpool2d needs even spatial extents, got " + shape_str(x.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out = Tensor::zeros({c, oh, ow});
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const double* r0 = px.data() + (k * h + 2 * y) * w + 2 * xx;
        const double* r1 = r0 + w;
        po[(k * oh + y) * ow + xx] = 0.25 * ((r0[0] + r0[1]) + (r1[0] + r1[1]));
      }
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [c, h, w](std::span<const double> g, auto grads) {
      auto& gx = *grads[0];
      const std::size_t oh = h / 2, ow = w / 2;
      for (std::size_t k = 0; k < c; ++k)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx)
            gx[(k * h + y) * w + xx] += 0.25 * g[(k * oh + y / 2) * ow + xx / 2];
    });
  }
  return out;
}

Tensor upsample2x(const Tensor& x) { return upsample_nearest(x, 2); }

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  check_spatial(x, "upsample");
  if (factor == 0) throw ShapeError("upsample factor must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = factor * h, ow = factor * w;
  Tensor out = Tensor::zeros({c, oh, ow});
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx)
        po[(k * oh + y) * ow + xx] = px[(k * h + y / factor) * w + xx / factor];
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [c, h, w, factor](std::span<const double> g, auto grads) {
      auto& gx = *grads[0];
      const std::size_t oh = factor * h, ow = factor * w;
      for (std::size_t k = 0; k < c; ++k)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t xx = 0; xx < ow; ++xx)
            gx[(k * h + y / factor) * w + xx / factor] += g[(k * oh + y) * ow + xx];
    });
  }
  return out;
}

// ---------------------------------------------------------------- activations

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < px.size(); ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [x](std::span<const double> g, auto grads) {
      auto px = x.data();
      auto& gx = *grads[0];
      for (std::size_t i = 0; i < g.size(); ++i)
        if (px[i] > 0.0) gx[i] += g[i];
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    // Branches avoid overflow of exp for large |x|.
    po[i] = px[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-px[i]))
                         : std::exp(px[i]) / (1.0 + std::exp(px[i]));
  }
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [out](std::span<const double> g, auto grads) {
      auto py = out.data();
      auto& gx = *grads[0];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * py[i] * (1.0 - py[i]);
    });
  }
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "softmax");
  Tensor out = Tensor::zeros(x.shape());
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.length; ++k) m = std::max(m, px[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.length; ++k) {
        const double e = std::exp(px[base + k * s.inner] - m);
        po[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.length; ++k) po[base + k * s.inner] /= total;
    }
  }
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [out, s](std::span<const double> g, auto grads) {
      auto py = out.data();
      auto& gx = *grads[0];
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.length * s.inner + in;
          double dot = 0.0;
          for (std::size_t k = 0; k < s.length; ++k)
            dot += g[base + k * s.inner] * py[base + k * s.inner];
          for (std::size_t k = 0; k < s.length; ++k) {
            const std::size_t i = base + k * s.inner;
            gx[i] += py[i] * (g[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "log_softmax");
  Tensor out = Tensor::zeros(x.shape());
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.length; ++k) m = std::max(m, px[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.length; ++k) total += std::exp(px[base + k * s.inner] - m);
      const double lse = m + std::log(total);
      for (std::size_t k = 0; k < s.length; ++k)
        po[base + k * s.inner] = px[base + k * s.inner] - lse;
    }
  }
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [out, s](std::span<const double> g, auto grads) {
      auto py = out.data();
      auto& gx = *grads[0];
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.length * s.inner + in;
          double total = 0.0;
          for (std::size_t k = 0; k < s.length; ++k) total += g[base + k * s.inner];
          for (std::size_t k = 0; k < s.length; ++k) {
            const std::size_t i = base + k * s.inner;
            gx[i] += g[i] - std::exp(py[i]) * total;
          }
        }
      }
    });
  }
  return out;
}

}  // namespace urveda
