#include "mgnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "mgnet/kernels.hpp"

namespace mgnet::tk {

namespace {

using Impl = std::shared_ptr<TensorImpl>;

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

struct ConvGeom {
  std::int64_t batch, cin, h, w;        // input
  std::int64_t cout, kh, kw;            // kernel
  std::int64_t stride, pad;
  std::int64_t ho, wo;                  // output

  std::int64_t col_rows() const { return cin * kh * kw; }
  std::int64_t col_cols() const { return ho * wo; }
};

ConvGeom conv_geometry(const Shape& xs, const Shape& ws, int stride, int pad,
                       const char* op) {
  require(xs.size() == 4, std::string(op) + ": input must be NCHW, got " +
                              shape_str(xs));
  require(ws.size() == 4, std::string(op) + ": weight must be 4-D, got " +
                              shape_str(ws));
  if (stride < 1) throw ConfigError(std::string(op) + ": stride must be >= 1");
  if (pad < 0) throw ConfigError(std::string(op) + ": padding must be >= 0");
  ConvGeom g;
  g.batch = xs[0];
  g.cin = xs[1];
  g.h = xs[2];
  g.w = xs[3];
  g.cout = ws[0];
  g.kh = ws[2];
  g.kw = ws[3];
  g.stride = stride;
  g.pad = pad;
  require(ws[1] == g.cin, std::string(op) + ": weight expects " +
                              std::to_string(ws[1]) + " input channels, input has " +
                              std::to_string(g.cin));
  g.ho = (g.h + 2 * pad - g.kh) / stride + 1;
  g.wo = (g.w + 2 * pad - g.kw) / stride + 1;
  require(g.h + 2 * pad >= g.kh && g.w + 2 * pad >= g.kw,
          std::string(op) + ": kernel " + std::to_string(g.kh) + "x" +
              std::to_string(g.kw) + " does not fit padded input " +
              shape_str(xs));
  return g;
}

// col[(c*kh+u)*kw+v, y*wo+x] = image[c, y*s+u-p, x*s+v-p], zero outside
void im2col(const double* image, const ConvGeom& g, double* col) {
  const std::int64_t S = g.col_cols();
  for (std::int64_t c = 0; c < g.cin; ++c) {
    const double* plane = image + c * g.h * g.w;
    for (std::int64_t u = 0; u < g.kh; ++u) {
      for (std::int64_t v = 0; v < g.kw; ++v) {
        double* crow = col + ((c * g.kh + u) * g.kw + v) * S;
        for (std::int64_t y = 0; y < g.ho; ++y) {
          const std::int64_t iy = y * g.stride + u - g.pad;
          double* dst = crow + y * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::memset(dst, 0, static_cast<std::size_t>(g.wo) * sizeof(double));
            continue;
          }
          const double* src = plane + iy * g.w;
          for (std::int64_t x = 0; x < g.wo; ++x) {
            const std::int64_t ix = x * g.stride + v - g.pad;
            dst[x] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// adjoint scatter of im2col
void col2im_add(const double* col, const ConvGeom& g, double* image) {
  const std::int64_t S = g.col_cols();
  for (std::int64_t c = 0; c < g.cin; ++c) {
    double* plane = image + c * g.h * g.w;
    for (std::int64_t u = 0; u < g.kh; ++u) {
      for (std::int64_t v = 0; v < g.kw; ++v) {
        const double* crow = col + ((c * g.kh + u) * g.kw + v) * S;
        for (std::int64_t y = 0; y < g.ho; ++y) {
          const std::int64_t iy = y * g.stride + u - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          double* dst = plane + iy * g.w;
          const double* src = crow + y * g.wo;
          for (std::int64_t x = 0; x < g.wo; ++x) {
            const std::int64_t ix = x * g.stride + v - g.pad;
            if (ix >= 0 && ix < g.w) dst[ix] += src[x];
          }
        }
      }
    }
  }
}

std::vector<double> transpose(const double* a, std::int64_t rows,
                              std::int64_t cols) {
  std::vector<double> t(static_cast<std::size_t>(rows * cols));
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
  auto ai = a.impl(), bi = b.impl();
  auto out = alloc_output(a.shape());
  kern::vadd(ai->data.data(), bi->data.data(), out->data.data(),
             out->data.size());
  return finish_op("add", out, {ai, bi}, [ai, bi](const TensorImpl& o) {
    accumulate_grad(*ai, o.grad);
    accumulate_grad(*bi, o.grad);
  });
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  auto ai = a.impl(), bi = b.impl();
  if (a.shape() == b.shape()) {
    auto out = alloc_output(a.shape());
    kern::vmul(ai->data.data(), bi->data.data(), out->data.data(),
               out->data.size());
    return finish_op("elementwise_mul", out, {ai, bi},
                     [ai, bi](const TensorImpl& o) {
                       const std::size_t n = o.data.size();
                       if (ai->needs_grad()) {
                         auto& g = ai->grad_buffer();
                         for (std::size_t i = 0; i < n; ++i)
                           g[i] += o.grad[i] * bi->data[i];
                       }
                       if (bi->needs_grad()) {
                         auto& g = bi->grad_buffer();
                         for (std::size_t i = 0; i < n; ++i)
                           g[i] += o.grad[i] * ai->data[i];
                       }
                     });
  }

  // [N,C,H,W] * [N,C] channel broadcast (either order)
  const bool a_is_map = a.ndim() == 4 && b.ndim() == 2;
  const bool b_is_map = b.ndim() == 4 && a.ndim() == 2;
  require(a_is_map || b_is_map,
          "elementwise_mul: incompatible shapes " + shape_str(a.shape()) +
              " vs " + shape_str(b.shape()));
  auto mi = a_is_map ? ai : bi;  // feature map
  auto vi = a_is_map ? bi : ai;  // channel vector
  const Shape& ms = mi->shape;
  require(vi->shape[0] == ms[0] && vi->shape[1] == ms[1],
          "elementwise_mul: channel vector " + shape_str(vi->shape) +
              " does not match map " + shape_str(ms));
  const std::int64_t N = ms[0], C = ms[1], S = ms[2] * ms[3];
  auto out = alloc_output(ms);
  for (std::int64_t n = 0; n < N; ++n)
    for (std::int64_t c = 0; c < C; ++c) {
      const double scale = vi->data[n * C + c];
      const double* src = mi->data.data() + (n * C + c) * S;
      double* dst = out->data.data() + (n * C + c) * S;
      for (std::int64_t s = 0; s < S; ++s) dst[s] = scale * src[s];
    }
  return finish_op(
      "elementwise_mul", out, {mi, vi}, [mi, vi, N, C, S](const TensorImpl& o) {
        if (mi->needs_grad()) {
          auto& g = mi->grad_buffer();
          for (std::int64_t n = 0; n < N; ++n)
            for (std::int64_t c = 0; c < C; ++c) {
              const double scale = vi->data[n * C + c];
              const double* og = o.grad.data() + (n * C + c) * S;
              double* dst = g.data() + (n * C + c) * S;
              for (std::int64_t s = 0; s < S; ++s) dst[s] += scale * og[s];
            }
        }
        if (vi->needs_grad()) {
          auto& g = vi->grad_buffer();
          for (std::int64_t n = 0; n < N; ++n)
            for (std::int64_t c = 0; c < C; ++c)
              g[n * C + c] += kern::dot(o.grad.data() + (n * C + c) * S,
                                        mi->data.data() + (n * C + c) * S,
                                        static_cast<std::size_t>(S));
        }
      });
}

Tensor relu(const Tensor& x) {
  auto xi = x.impl();
  auto out = alloc_output(x.shape());
  kern::relu_fwd(xi->data.data(), out->data.data(), out->data.size());
  return finish_op("relu", out, {xi}, [xi](const TensorImpl& o) {
    if (!xi->needs_grad()) return;
    auto& g = xi->grad_buffer();
    kern::relu_bwd(xi->data.data(), o.grad.data(), g.data(), g.size());
  });
}

Tensor maxpool2d(const Tensor& x, int window) {
  require(x.ndim() == 4, "maxpool2d: input must be NCHW");
  if (window < 1) throw ConfigError("maxpool2d: window must be >= 1");
  auto xi = x.impl();
  const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::int64_t HO = H / window, WO = W / window;
  require(HO >= 1 && WO >= 1, "maxpool2d: window larger than input");

  auto out = alloc_output({N, C, HO, WO});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(out->data.size());
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    const double* plane = xi->data.data() + nc * H * W;
    double* oplane = out->data.data() + nc * HO * WO;
    std::int64_t* aplane = argmax->data() + nc * HO * WO;
    for (std::int64_t y = 0; y < HO; ++y)
      for (std::int64_t x2 = 0; x2 < WO; ++x2) {
        double best = -std::numeric_limits<double>::infinity();
        std::int64_t best_idx = -1;
        for (std::int64_t u = 0; u < window; ++u)
          for (std::int64_t v = 0; v < window; ++v) {
            const std::int64_t idx = (y * window + u) * W + (x2 * window + v);
            if (plane[idx] > best) {
              best = plane[idx];
              best_idx = idx;
            }
          }
        oplane[y * WO + x2] = best;
        aplane[y * WO + x2] = nc * H * W + best_idx;
      }
  }
  return finish_op("maxpool2d", out, {xi}, [xi, argmax](const TensorImpl& o) {
    if (!xi->needs_grad()) return;
    auto& g = xi->grad_buffer();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      g[static_cast<std::size_t>((*argmax)[i])] += o.grad[i];
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int stride, int padding) {
  const ConvGeom g =
      conv_geometry(x.shape(), weight.shape(), stride, padding, "conv2d");
  require(bias.ndim() == 1 && bias.dim(0) == g.cout,
          "conv2d: bias must have one value per output channel");
  auto xi = x.impl(), wi = weight.impl(), bi = bias.impl();

  const std::int64_t K = g.col_rows(), S = g.col_cols();
  auto out = alloc_output({g.batch, g.cout, g.ho, g.wo});
  std::vector<double> col(static_cast<std::size_t>(K * S));
  for (std::int64_t n = 0; n < g.batch; ++n) {
    im2col(xi->data.data() + n * g.cin * g.h * g.w, g, col.data());
    double* o = out->data.data() + n * g.cout * S;
    kern::gemm(false, static_cast<std::size_t>(g.cout),
               static_cast<std::size_t>(K), static_cast<std::size_t>(S),
               wi->data.data(), static_cast<std::size_t>(K), col.data(),
               static_cast<std::size_t>(S), o, static_cast<std::size_t>(S));
    for (std::int64_t c = 0; c < g.cout; ++c) {
      const double b = bi->data[c];
      double* row = o + c * S;
      for (std::int64_t s = 0; s < S; ++s) row[s] += b;
    }
  }

  return finish_op("conv2d", out, {xi, wi, bi}, [xi, wi, bi, g](const TensorImpl& o) {
    const std::int64_t K = g.col_rows(), S = g.col_cols();
    std::vector<double> col(static_cast<std::size_t>(K * S));
    std::vector<double> wt;  // weight transpose, built once if needed
    for (std::int64_t n = 0; n < g.batch; ++n) {
      const double* og = o.grad.data() + n * g.cout * S;
      const bool need_col = wi->needs_grad() || xi->needs_grad();
      if (need_col)
        im2col(xi->data.data() + n * g.cin * g.h * g.w, g, col.data());
      if (wi->needs_grad()) {
        // gW[o,k] += sum_s og[o,s] * col[k,s]
        auto colT = transpose(col.data(), K, S);
        kern::gemm(true, static_cast<std::size_t>(g.cout),
                   static_cast<std::size_t>(S), static_cast<std::size_t>(K), og,
                   static_cast<std::size_t>(S), colT.data(),
                   static_cast<std::size_t>(K), wi->grad_buffer().data(),
                   static_cast<std::size_t>(K));
      }
      if (bi->needs_grad()) {
        auto& gb = bi->grad_buffer();
        for (std::int64_t c = 0; c < g.cout; ++c)
          gb[c] += kern::sum(og + c * S, static_cast<std::size_t>(S));
      }
      if (xi->needs_grad()) {
        if (wt.empty()) wt = transpose(wi->data.data(), g.cout, K);
        std::vector<double> gcol(static_cast<std::size_t>(K * S));
        kern::gemm(false, static_cast<std::size_t>(K),
                   static_cast<std::size_t>(g.cout), static_cast<std::size_t>(S),
                   wt.data(), static_cast<std::size_t>(g.cout), og,
                   static_cast<std::size_t>(S), gcol.data(),
                   static_cast<std::size_t>(S));
        col2im_add(gcol.data(), g,
                   xi->grad_buffer().data() + n * g.cin * g.h * g.w);
      }
    }
  });
}

Tensor transposed_conv2d(const Tensor& x, const Tensor& weight,
                         const Tensor& bias, int stride, int padding,
                         int output_padding) {
  require(x.ndim() == 4, "transposed_conv2d: input must be NCHW");
  require(weight.ndim() == 4, "transposed_conv2d: weight must be 4-D");
  if (output_padding < 0 || output_padding >= stride)
    throw ConfigError("transposed_conv2d: output_padding must be in [0, stride)");
  const std::int64_t N = x.dim(0), A = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(weight.dim(0) == A, "transposed_conv2d: weight expects " +
                                  std::to_string(weight.dim(0)) +
                                  " input channels, input has " +
                                  std::to_string(A));
  const std::int64_t B = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
  const std::int64_t HO = (H - 1) * stride - 2 * padding + kh + output_padding;
  const std::int64_t WO = (W - 1) * stride - 2 * padding + kw + output_padding;
  require(HO >= 1 && WO >= 1, "transposed_conv2d: output would be empty");
  require(bias.ndim() == 1 && bias.dim(0) == B,
          "transposed_conv2d: bias must have one value per output channel");

  // the op is the adjoint of this convolution (output -> input)
  const ConvGeom g = conv_geometry({N, B, HO, WO}, {A, B, kh, kw}, stride,
                                   padding, "transposed_conv2d");
  require(g.ho == H && g.wo == W,
          "transposed_conv2d: geometry is inconsistent; no convolution of the "
          "requested output maps back to the input size");

  auto xi = x.impl(), wi = weight.impl(), bi = bias.impl();
  const std::int64_t K = g.col_rows(), S = g.col_cols();  // K = B*kh*kw, S = H*W
  auto out = alloc_output({N, B, HO, WO});

  // out[n] = col2im(W^T x[n]) + bias
  auto wt = transpose(wi->data.data(), A, K);  // K x A
  std::vector<double> col(static_cast<std::size_t>(K * S));
  for (std::int64_t n = 0; n < N; ++n) {
    kern::gemm(false, static_cast<std::size_t>(K), static_cast<std::size_t>(A),
               static_cast<std::size_t>(S), wt.data(),
               static_cast<std::size_t>(A), xi->data.data() + n * A * S,
               static_cast<std::size_t>(S), col.data(),
               static_cast<std::size_t>(S));
    double* oplane = out->data.data() + n * B * HO * WO;
    col2im_add(col.data(), g, oplane);
    for (std::int64_t c = 0; c < B; ++c) {
      const double b = bi->data[c];
      double* row = oplane + c * HO * WO;
      for (std::int64_t s = 0; s < HO * WO; ++s) row[s] += b;
    }
  }

  return finish_op(
      "transposed_conv2d", out, {xi, wi, bi}, [xi, wi, bi, g, N, A, B, HO, WO](const TensorImpl& o) {
        const std::int64_t K = g.col_rows(), S = g.col_cols();
        std::vector<double> col(static_cast<std::size_t>(K * S));
        for (std::int64_t n = 0; n < N; ++n) {
          const double* og = o.grad.data() + n * B * HO * WO;
          im2col(og, g, col.data());
          if (xi->needs_grad()) {
            // gx[n] += W * im2col(og)
            kern::gemm(true, static_cast<std::size_t>(A),
                       static_cast<std::size_t>(K), static_cast<std::size_t>(S),
                       wi->data.data(), static_cast<std::size_t>(K), col.data(),
                       static_cast<std::size_t>(S),
                       xi->grad_buffer().data() + n * A * S,
                       static_cast<std::size_t>(S));
          }
          if (wi->needs_grad()) {
            // gW[a,k] += sum_s x[n][a,s] * col[k,s]
            auto colT = transpose(col.data(), K, S);
            kern::gemm(true, static_cast<std::size_t>(A),
                       static_cast<std::size_t>(S), static_cast<std::size_t>(K),
                       xi->data.data() + n * A * S, static_cast<std::size_t>(S),
                       colT.data(), static_cast<std::size_t>(K),
                       wi->grad_buffer().data(), static_cast<std::size_t>(K));
          }
          if (bi->needs_grad()) {
            auto& gb = bi->grad_buffer();
            for (std::int64_t c = 0; c < B; ++c)
              gb[c] += kern::sum(og + c * HO * WO,
                                 static_cast<std::size_t>(HO * WO));
          }
        }
      });
}

Tensor softmax(const Tensor& x, int axis) {
  require(axis >= 0 && axis < static_cast<int>(x.ndim()),
          "softmax: axis " + std::to_string(axis) + " invalid for shape " +
              shape_str(x.shape()));
  auto xi = x.impl();
  const Shape& s = xi->shape;
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
  const std::int64_t extent = s[static_cast<std::size_t>(axis)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i)
    inner *= s[i];

  auto out = alloc_output(s);
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t base = o * extent * inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::int64_t e = 0; e < extent; ++e)
        mx = std::max(mx, xi->data[base + e * inner]);
      double total = 0.0;
      for (std::int64_t e = 0; e < extent; ++e) {
        const double v = std::exp(xi->data[base + e * inner] - mx);
        out->data[base + e * inner] = v;
        total += v;
      }
      for (std::int64_t e = 0; e < extent; ++e)
        out->data[base + e * inner] /= total;
    }

  auto oi = out;  // value needed in backward
  return finish_op(
      "softmax", out, {xi}, [xi, oi, outer, extent, inner](const TensorImpl& o) {
        if (!xi->needs_grad()) return;
        auto& g = xi->grad_buffer();
        for (std::int64_t ot = 0; ot < outer; ++ot)
          for (std::int64_t i = 0; i < inner; ++i) {
            const std::int64_t base = ot * extent * inner + i;
            double dot = 0.0;
            for (std::int64_t e = 0; e < extent; ++e)
              dot += o.grad[base + e * inner] * oi->data[base + e * inner];
            for (std::int64_t e = 0; e < extent; ++e)
              g[base + e * inner] += oi->data[base + e * inner] *
                                     (o.grad[base + e * inner] - dot);
          }
      });
}

Tensor global_avg_pool(const Tensor& x) {
  require(x.ndim() == 4, "global_avg_pool: input must be NCHW");
  auto xi = x.impl();
  const std::int64_t N = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  auto out = alloc_output({N, C});
  for (std::int64_t nc = 0; nc < N * C; ++nc)
    out->data[nc] = kern::sum(xi->data.data() + nc * S,
                              static_cast<std::size_t>(S)) /
                    static_cast<double>(S);
  return finish_op("global_avg_pool", out, {xi}, [xi, N, C, S](const TensorImpl& o) {
    if (!xi->needs_grad()) return;
    auto& g = xi->grad_buffer();
    const double inv = 1.0 / static_cast<double>(S);
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
      const double v = o.grad[nc] * inv;
      double* dst = g.data() + nc * S;
      for (std::int64_t s = 0; s < S; ++s) dst[s] += v;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(x.ndim() == 2, "linear: input must be [N,F]");
  require(weight.ndim() == 2, "linear: weight must be [O,F]");
  const std::int64_t N = x.dim(0), F = x.dim(1), O = weight.dim(0);
  require(weight.dim(1) == F, "linear: weight " + shape_str(weight.shape()) +
                                  " incompatible with input " +
                                  shape_str(x.shape()));
  require(bias.ndim() == 1 && bias.dim(0) == O,
          "linear: bias must have one value per output");
  auto xi = x.impl(), wi = weight.impl(), bi = bias.impl();

  auto out = alloc_output({N, O});
  auto wt = transpose(wi->data.data(), O, F);  // F x O
  kern::gemm(false, static_cast<std::size_t>(N), static_cast<std::size_t>(F),
             static_cast<std::size_t>(O), xi->data.data(),
             static_cast<std::size_t>(F), wt.data(), static_cast<std::size_t>(O),
             out->data.data(), static_cast<std::size_t>(O));
  for (std::int64_t n = 0; n < N; ++n)
    kern::vadd(out->data.data() + n * O, bi->data.data(),
               out->data.data() + n * O, static_cast<std::size_t>(O));

  return finish_op("linear", out, {xi, wi, bi}, [xi, wi, bi, N, F, O](const TensorImpl& o) {
    if (xi->needs_grad()) {
      // gx += og [N,O] * W [O,F]
      kern::gemm(true, static_cast<std::size_t>(N), static_cast<std::size_t>(O),
                 static_cast<std::size_t>(F), o.grad.data(),
                 static_cast<std::size_t>(O), wi->data.data(),
                 static_cast<std::size_t>(F), xi->grad_buffer().data(),
                 static_cast<std::size_t>(F));
    }
    if (wi->needs_grad()) {
      // gW += og^T [O,N] * x [N,F]
      auto ogT = transpose(o.grad.data(), N, O);
      kern::gemm(true, static_cast<std::size_t>(O), static_cast<std::size_t>(N),
                 static_cast<std::size_t>(F), ogT.data(),
                 static_cast<std::size_t>(N), xi->data.data(),
                 static_cast<std::size_t>(F), wi->grad_buffer().data(),
                 static_cast<std::size_t>(F));
    }
    if (bi->needs_grad()) {
      auto& gb = bi->grad_buffer();
      for (std::int64_t n = 0; n < N; ++n)
        kern::vadd(gb.data(), o.grad.data() + n * O, gb.data(),
                   static_cast<std::size_t>(O));
    }
  });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require(pred.shape() == target.shape(),
          "mse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
              shape_str(target.shape()));
  auto pi = pred.impl(), ti = target.impl();
  const std::size_t n = pi->data.size();
  auto out = alloc_output({1});
  out->data[0] =
      kern::sq_diff_sum(pi->data.data(), ti->data.data(), n) /
      static_cast<double>(n);
  return finish_op("mse_loss", out, {pi, ti}, [pi, ti, n](const TensorImpl& o) {
    const double scale = 2.0 * o.grad[0] / static_cast<double>(n);
    if (pi->needs_grad()) {
      auto& g = pi->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        g[i] += scale * (pi->data[i] - ti->data[i]);
    }
    if (ti->needs_grad()) {
      auto& g = ti->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        g[i] -= scale * (pi->data[i] - ti->data[i]);
    }
  });
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<std::int64_t>& labels) {
  require(logits.ndim() == 2, "softmax_cross_entropy: logits must be [N,K]");
  const std::int64_t N = logits.dim(0), K = logits.dim(1);
  require(static_cast<std::int64_t>(labels.size()) == N,
          "softmax_cross_entropy: need one label per row");
  for (std::int64_t lbl : labels)
    if (lbl < 0 || lbl >= K)
      throw ContractError("softmax_cross_entropy: label out of range");

  auto li = logits.impl();
  auto probs = std::make_shared<std::vector<double>>(li->data.size());
  auto out = alloc_output({1});
  double total = 0.0;
  for (std::int64_t n = 0; n < N; ++n) {
    const double* row = li->data.data() + n * K;
    double mx = row[0];
    for (std::int64_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
    double z = 0.0;
    for (std::int64_t k = 0; k < K; ++k) z += std::exp(row[k] - mx);
    const double lse = mx + std::log(z);
    total += lse - row[labels[static_cast<std::size_t>(n)]];
    for (std::int64_t k = 0; k < K; ++k)
      (*probs)[static_cast<std::size_t>(n * K + k)] = std::exp(row[k] - lse);
  }
  out->data[0] = total / static_cast<double>(N);

  return finish_op("softmax_cross_entropy", out, {li},
                   [li, probs, labels, N, K](const TensorImpl& o) {
                     if (!li->needs_grad()) return;
                     auto& g = li->grad_buffer();
                     const double scale = o.grad[0] / static_cast<double>(N);
                     for (std::int64_t n = 0; n < N; ++n)
                       for (std::int64_t k = 0; k < K; ++k) {
                         double p = (*probs)[static_cast<std::size_t>(n * K + k)];
                         if (k == labels[static_cast<std::size_t>(n)]) p -= 1.0;
                         g[n * K + k] += scale * p;
                       }
                   });
}

Tensor sum(const Tensor& x) {
  auto xi = x.impl();
  auto out = alloc_output({1});
  out->data[0] = kern::sum(xi->data.data(), xi->data.size());
  return finish_op("sum", out, {xi}, [xi](const TensorImpl& o) {
    if (!xi->needs_grad()) return;
    auto& g = xi->grad_buffer();
    for (double& v : g) v += o.grad[0];
  });
}

Tensor broadcast_spatial(const Tensor& x, std::int64_t h, std::int64_t w) {
  require(x.ndim() == 2, "broadcast_spatial: input must be [N,C]");
  require(h >= 1 && w >= 1, "broadcast_spatial: target size must be positive");
  auto xi = x.impl();
  const std::int64_t N = x.dim(0), C = x.dim(1), S = h * w;
  auto out = alloc_output({N, C, h, w});
  for (std::int64_t nc = 0; nc < N * C; ++nc) {
    double* dst = out->data.data() + nc * S;
    const double v = xi->data[nc];
    for (std::int64_t s = 0; s < S; ++s) dst[s] = v;
  }
  return finish_op("broadcast_spatial", out, {xi}, [xi, N, C, S](const TensorImpl& o) {
    if (!xi->needs_grad()) return;
    auto& g = xi->grad_buffer();
    for (std::int64_t nc = 0; nc < N * C; ++nc)
      g[nc] += kern::sum(o.grad.data() + nc * S, static_cast<std::size_t>(S));
  });
}

}  // namespace mgnet::tk
