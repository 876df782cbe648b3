#include "rtgr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rtgr::ops {

namespace {

int g_threads = 0;

int resolved_threads() {
  if (g_threads > 0) return g_threads;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

struct ConvDims {
  std::size_t n, cin, h, w;
  std::size_t cout, kh, kw;
  std::size_t oh, ow;
  std::size_t hp, wp;  // padded extents
  std::size_t stride, padding;
};

template <typename T>
ConvDims conv_dims(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                   int padding) {
  if (x.rank() != 4)
    fail("conv2d: input must be rank 4 [N,C,H,W], got shape " + shape_str(x.shape()));
  if (w.rank() != 4)
    fail("conv2d: weight must be rank 4 [Cout,Cin,kh,kw], got shape " + shape_str(w.shape()));
  if (stride < 1) fail("conv2d: stride must be >= 1, got " + std::to_string(stride));
  if (padding < 0) fail("conv2d: padding must be >= 0, got " + std::to_string(padding));

  ConvDims d;
  d.n = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = static_cast<std::size_t>(stride);
  d.padding = static_cast<std::size_t>(padding);

  if (d.kh % 2 == 0 || d.kw % 2 == 0)
    fail("conv2d: kernel extents must be odd, got " + std::to_string(d.kh) + "x" +
         std::to_string(d.kw));
  if (w.dim(1) != d.cin)
    fail("conv2d: input has " + std::to_string(d.cin) + " channels but weight expects " +
         std::to_string(w.dim(1)));
  if (b.rank() != 1 || b.dim(0) != d.cout)
    fail("conv2d: bias shape " + shape_str(b.shape()) + " does not match output channels " +
         std::to_string(d.cout));

  d.hp = d.h + 2 * d.padding;
  d.wp = d.w + 2 * d.padding;
  if (d.hp < d.kh || d.wp < d.kw)
    fail("conv2d: kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
         " exceeds padded input " + std::to_string(d.hp) + "x" + std::to_string(d.wp));
  if ((d.hp - d.kh) % d.stride != 0)
    fail("conv2d: height " + std::to_string(d.h) + " with padding " + std::to_string(d.padding) +
         ", kernel " + std::to_string(d.kh) + ", stride " + std::to_string(d.stride) +
         " does not yield an exact output size");
  if ((d.wp - d.kw) % d.stride != 0)
    fail("conv2d: width " + std::to_string(d.w) + " with padding " + std::to_string(d.padding) +
         ", kernel " + std::to_string(d.kw) + ", stride " + std::to_string(d.stride) +
         " does not yield an exact output size");
  d.oh = (d.hp - d.kh) / d.stride + 1;
  d.ow = (d.wp - d.kw) / d.stride + 1;
  return d;
}

/// Zero-padded copy, [N,Cin,Hp,Wp].
template <typename T>
std::vector<T> make_padded(const std::vector<T>& x, const ConvDims& d) {
  std::vector<T> out(d.n * d.cin * d.hp * d.wp, T{});
  const std::int64_t planes = static_cast<std::int64_t>(d.n * d.cin);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(resolved_threads())
#endif
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* src = x.data() + static_cast<std::size_t>(p) * d.h * d.w;
    T* dst = out.data() + static_cast<std::size_t>(p) * d.hp * d.wp + d.padding * d.wp + d.padding;
    for (std::size_t row = 0; row < d.h; ++row)
      std::memcpy(dst + row * d.wp, src + row * d.w, d.w * sizeof(T));
  }
  return out;
}

template <typename T>
void conv2d_forward_kernel(const T* xp, const T* wt, const T* bias, T* y, const ConvDims& d) {
  const std::int64_t tasks = static_cast<std::int64_t>(d.n * d.cout);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(resolved_threads())
#endif
  for (std::int64_t t = 0; t < tasks; ++t) {
    const std::size_t n = static_cast<std::size_t>(t) / d.cout;
    const std::size_t co = static_cast<std::size_t>(t) % d.cout;
    T* yplane = y + (n * d.cout + co) * d.oh * d.ow;
    std::fill(yplane, yplane + d.oh * d.ow, bias[co]);
    for (std::size_t ci = 0; ci < d.cin; ++ci) {
      const T* xplane = xp + (n * d.cin + ci) * d.hp * d.wp;
      const T* wbase = wt + (co * d.cin + ci) * d.kh * d.kw;
      for (std::size_t ky = 0; ky < d.kh; ++ky) {
        for (std::size_t kx = 0; kx < d.kw; ++kx) {
          const T wv = wbase[ky * d.kw + kx];
          for (std::size_t oy = 0; oy < d.oh; ++oy) {
            const T* xrow = xplane + (oy * d.stride + ky) * d.wp + kx;
            T* yrow = yplane + oy * d.ow;
            if (d.stride == 1) {
              for (std::size_t ox = 0; ox < d.ow; ++ox) yrow[ox] += wv * xrow[ox];
            } else {
              for (std::size_t ox = 0; ox < d.ow; ++ox) yrow[ox] += wv * xrow[ox * d.stride];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(GraphT<T>& g, typename GraphT<T>::Id out, typename GraphT<T>::Id x,
                     typename GraphT<T>::Id weight, typename GraphT<T>::Id bias,
                     const ConvDims& d) {
  const std::vector<T>& go = g.val(out).grad();
  const std::vector<T>& xdata = g.val(x).data();
  const std::vector<T>& wdata = g.val(weight).data();

  std::vector<T> padded_storage;
  const T* xp = xdata.data();
  if (d.padding > 0) {
    padded_storage = make_padded(xdata, d);
    xp = padded_storage.data();
  }

  if (g.needs_grad(bias)) {
    std::vector<T>& db = g.grad(bias);
    for (std::size_t co = 0; co < d.cout; ++co) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.n; ++n) {
        const T* gplane = go.data() + (n * d.cout + co) * d.oh * d.ow;
        for (std::size_t i = 0; i < d.oh * d.ow; ++i) acc += gplane[i];
      }
      db[co] += static_cast<T>(acc);
    }
  }

  if (g.needs_grad(weight)) {
    std::vector<T>& dw = g.grad(weight);
    const std::int64_t couts = static_cast<std::int64_t>(d.cout);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(resolved_threads())
#endif
    for (std::int64_t co = 0; co < couts; ++co) {
      for (std::size_t ci = 0; ci < d.cin; ++ci) {
        for (std::size_t ky = 0; ky < d.kh; ++ky) {
          for (std::size_t kx = 0; kx < d.kw; ++kx) {
            double acc = 0.0;
            for (std::size_t n = 0; n < d.n; ++n) {
              const T* gplane = go.data() + (n * d.cout + static_cast<std::size_t>(co)) * d.oh * d.ow;
              const T* xplane = xp + (n * d.cin + ci) * d.hp * d.wp;
              for (std::size_t oy = 0; oy < d.oh; ++oy) {
                const T* grow = gplane + oy * d.ow;
                const T* xrow = xplane + (oy * d.stride + ky) * d.wp + kx;
                double row = 0.0;
                if (d.stride == 1) {
                  for (std::size_t ox = 0; ox < d.ow; ++ox) row += grow[ox] * xrow[ox];
                } else {
                  for (std::size_t ox = 0; ox < d.ow; ++ox) row += grow[ox] * xrow[ox * d.stride];
                }
                acc += row;
              }
            }
            dw[((static_cast<std::size_t>(co) * d.cin + ci) * d.kh + ky) * d.kw + kx] +=
                static_cast<T>(acc);
          }
        }
      }
    }
  }

  if (g.needs_grad(x)) {
    std::vector<T>& dx = g.grad(x);
    const std::int64_t ns = static_cast<std::int64_t>(d.n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(resolved_threads())
#endif
    for (std::int64_t n = 0; n < ns; ++n) {
      std::vector<T> dxpad(d.cin * d.hp * d.wp, T{});
      for (std::size_t co = 0; co < d.cout; ++co) {
        const T* gplane = go.data() + (static_cast<std::size_t>(n) * d.cout + co) * d.oh * d.ow;
        for (std::size_t ci = 0; ci < d.cin; ++ci) {
          const T* wbase = wdata.data() + (co * d.cin + ci) * d.kh * d.kw;
          T* dxplane = dxpad.data() + ci * d.hp * d.wp;
          for (std::size_t ky = 0; ky < d.kh; ++ky) {
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const T wv = wbase[ky * d.kw + kx];
              for (std::size_t oy = 0; oy < d.oh; ++oy) {
                const T* grow = gplane + oy * d.ow;
                T* dxrow = dxplane + (oy * d.stride + ky) * d.wp + kx;
                if (d.stride == 1) {
                  for (std::size_t ox = 0; ox < d.ow; ++ox) dxrow[ox] += wv * grow[ox];
                } else {
                  for (std::size_t ox = 0; ox < d.ow; ++ox) dxrow[ox * d.stride] += wv * grow[ox];
                }
              }
            }
          }
        }
      }
      // Un-pad: interior rows accumulate into the input gradient.
      for (std::size_t ci = 0; ci < d.cin; ++ci) {
        const T* src = dxpad.data() + ci * d.hp * d.wp + d.padding * d.wp + d.padding;
        T* dst = dx.data() + (static_cast<std::size_t>(n) * d.cin + ci) * d.h * d.w;
        for (std::size_t row = 0; row < d.h; ++row) {
          const T* s = src + row * d.wp;
          T* q = dst + row * d.w;
          for (std::size_t col = 0; col < d.w; ++col) q[col] += s[col];
        }
      }
    }
  }
}

/// Per-output-axis bilinear sampling plan (align-corners=false):
/// src = (dst + 0.5) * in/out - 0.5, floor/ceil clamped to the valid range.
struct ResizeAxis {
  std::vector<std::size_t> lo, hi;
  std::vector<double> frac;
};

ResizeAxis resize_axis(std::size_t in, std::size_t out) {
  ResizeAxis a;
  a.lo.resize(out);
  a.hi.resize(out);
  a.frac.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const double f = std::floor(src);
    const std::int64_t i0 = static_cast<std::int64_t>(f);
    const std::int64_t last = static_cast<std::int64_t>(in) - 1;
    a.lo[o] = static_cast<std::size_t>(std::clamp<std::int64_t>(i0, 0, last));
    a.hi[o] = static_cast<std::size_t>(std::clamp<std::int64_t>(i0 + 1, 0, last));
    a.frac[o] = src - f;
  }
  return a;
}

template <typename T>
void check_same_shape(const char* op, const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() != b.shape())
    fail(std::string(op) + ": shape mismatch, " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
}

}  // namespace

void set_num_threads(int n) { g_threads = n; }
int num_threads() { return resolved_threads(); }

template <typename T>
typename GraphT<T>::Id conv2d(GraphT<T>& g, typename GraphT<T>::Id x, typename GraphT<T>::Id weight,
                              typename GraphT<T>::Id bias, int stride, int padding) {
  using Id = typename GraphT<T>::Id;
  const ConvDims d = conv_dims(g.val(x), g.val(weight), g.val(bias), stride, padding);

  TensorT<T> out(Shape{d.n, d.cout, d.oh, d.ow});
  if (d.padding == 0) {
    conv2d_forward_kernel(g.val(x).data().data(), g.val(weight).data().data(),
                          g.val(bias).data().data(), out.data().data(), d);
  } else {
    const std::vector<T> padded = make_padded(g.val(x).data(), d);
    conv2d_forward_kernel(padded.data(), g.val(weight).data().data(), g.val(bias).data().data(),
                          out.data().data(), d);
  }

  return g.record("conv2d", {x, weight, bias}, std::move(out),
                  [x, weight, bias, d](GraphT<T>& gr, Id out_id) {
                    conv2d_backward(gr, out_id, x, weight, bias, d);
                  });
}

template <typename T>
typename GraphT<T>::Id add(GraphT<T>& g, typename GraphT<T>::Id a, typename GraphT<T>::Id b) {
  using Id = typename GraphT<T>::Id;
  check_same_shape("add", g.val(a), g.val(b));
  const std::vector<T>& av = g.val(a).data();
  const std::vector<T>& bv = g.val(b).data();
  TensorT<T> out(g.val(a).shape());
  std::vector<T>& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];

  return g.record("add", {a, b}, std::move(out), [a, b](GraphT<T>& gr, Id out_id) {
    const std::vector<T>& go = gr.val(out_id).grad();
    for (Id in : {a, b}) {
      if (!gr.needs_grad(in)) continue;
      std::vector<T>& gi = gr.grad(in);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
    }
  });
}

template <typename T>
typename GraphT<T>::Id concat_channels(GraphT<T>& g, std::vector<typename GraphT<T>::Id> xs) {
  using Id = typename GraphT<T>::Id;
  if (xs.empty()) fail("concat: needs at least one input");
  const TensorT<T>& first = g.val(xs[0]);
  if (first.rank() != 4) fail("concat: inputs must be rank 4, got " + shape_str(first.shape()));
  std::size_t channels = first.dim(1);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const TensorT<T>& t = g.val(xs[k]);
    if (t.rank() != 4) fail("concat: inputs must be rank 4, got " + shape_str(t.shape()));
    for (std::size_t dim : {std::size_t{0}, std::size_t{2}, std::size_t{3}}) {
      if (t.dim(dim) != first.dim(dim))
        fail("concat: input " + std::to_string(k) + " dim " + std::to_string(dim) + " is " +
             std::to_string(t.dim(dim)) + " but input 0 has " + std::to_string(first.dim(dim)));
    }
    channels += t.dim(1);
  }

  const std::size_t n = first.dim(0), h = first.dim(2), w = first.dim(3);
  const std::size_t plane = h * w;
  TensorT<T> out(Shape{n, channels, h, w});
  std::size_t offset = 0;
  for (Id id : xs) {
    const TensorT<T>& t = g.val(id);
    const std::size_t ck = t.dim(1);
    for (std::size_t b = 0; b < n; ++b) {
      std::memcpy(out.data().data() + (b * channels + offset) * plane,
                  t.data().data() + b * ck * plane, ck * plane * sizeof(T));
    }
    offset += ck;
  }

  std::vector<Id> inputs = xs;
  return g.record("concat", std::move(inputs), std::move(out),
                  [xs, n, channels, plane](GraphT<T>& gr, Id out_id) {
                    const std::vector<T>& go = gr.val(out_id).grad();
                    std::size_t offset = 0;
                    for (Id id : xs) {
                      const std::size_t ck = gr.val(id).dim(1);
                      if (gr.needs_grad(id)) {
                        std::vector<T>& gi = gr.grad(id);
                        for (std::size_t b = 0; b < n; ++b) {
                          const T* src = go.data() + (b * channels + offset) * plane;
                          T* dst = gi.data() + b * ck * plane;
                          for (std::size_t i = 0; i < ck * plane; ++i) dst[i] += src[i];
                        }
                      }
                      offset += ck;
                    }
                  });
}

template <typename T>
typename GraphT<T>::Id slice_channels(GraphT<T>& g, typename GraphT<T>::Id x, std::size_t c0,
                                      std::size_t c1) {
  using Id = typename GraphT<T>::Id;
  const TensorT<T>& t = g.val(x);
  if (t.rank() != 4) fail("slice_channels: input must be rank 4, got " + shape_str(t.shape()));
  if (c0 >= c1 || c1 > t.dim(1))
    fail("slice_channels: range [" + std::to_string(c0) + "," + std::to_string(c1) +
         ") invalid for " + std::to_string(t.dim(1)) + " channels");

  const std::size_t n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
  const std::size_t plane = h * w, ck = c1 - c0;
  TensorT<T> out(Shape{n, ck, h, w});
  for (std::size_t b = 0; b < n; ++b) {
    std::memcpy(out.data().data() + b * ck * plane, t.data().data() + (b * c + c0) * plane,
                ck * plane * sizeof(T));
  }

  return g.record("slice_channels", {x}, std::move(out),
                  [x, n, c, c0, ck, plane](GraphT<T>& gr, Id out_id) {
                    if (!gr.needs_grad(x)) return;
                    const std::vector<T>& go = gr.val(out_id).grad();
                    std::vector<T>& gi = gr.grad(x);
                    for (std::size_t b = 0; b < n; ++b) {
                      const T* src = go.data() + b * ck * plane;
                      T* dst = gi.data() + (b * c + c0) * plane;
                      for (std::size_t i = 0; i < ck * plane; ++i) dst[i] += src[i];
                    }
                  });
}

template <typename T>
typename GraphT<T>::Id relu(GraphT<T>& g, typename GraphT<T>::Id x) {
  using Id = typename GraphT<T>::Id;
  const std::vector<T>& xv = g.val(x).data();
  TensorT<T> out(g.val(x).shape());
  std::vector<T>& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > T{0} ? xv[i] : T{0};

  return g.record("relu", {x}, std::move(out), [x](GraphT<T>& gr, Id out_id) {
    if (!gr.needs_grad(x)) return;
    const std::vector<T>& go = gr.val(out_id).grad();
    const std::vector<T>& xv = gr.val(x).data();
    std::vector<T>& gi = gr.grad(x);
    // Subgradient 0 at the kink.
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += xv[i] > T{0} ? go[i] : T{0};
  });
}

template <typename T>
typename GraphT<T>::Id sigmoid(GraphT<T>& g, typename GraphT<T>::Id x) {
  using Id = typename GraphT<T>::Id;
  const std::vector<T>& xv = g.val(x).data();
  TensorT<T> out(g.val(x).shape());
  std::vector<T>& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    const T v = xv[i];
    if (v >= T{0}) {
      ov[i] = T{1} / (T{1} + std::exp(-v));
    } else {
      const T e = std::exp(v);
      ov[i] = e / (T{1} + e);
    }
  }

  return g.record("sigmoid", {x}, std::move(out), [x](GraphT<T>& gr, Id out_id) {
    if (!gr.needs_grad(x)) return;
    const std::vector<T>& go = gr.val(out_id).grad();
    const std::vector<T>& s = gr.val(out_id).data();
    std::vector<T>& gi = gr.grad(x);
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i] * s[i] * (T{1} - s[i]);
  });
}

template <typename T>
typename GraphT<T>::Id resize_bilinear(GraphT<T>& g, typename GraphT<T>::Id x, std::size_t out_h,
                                       std::size_t out_w) {
  using Id = typename GraphT<T>::Id;
  const TensorT<T>& t = g.val(x);
  if (t.rank() != 4) fail("resize_bilinear: input must be rank 4, got " + shape_str(t.shape()));
  if (out_h < 1 || out_w < 1) fail("resize_bilinear: output extents must be >= 1");

  const std::size_t n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
  if (out_h == h && out_w == w) {
    // Identity resize copies values bit-exactly.
    TensorT<T> out(t.shape(), t.data());
    return g.record("resize_bilinear", {x}, std::move(out), [x](GraphT<T>& gr, Id out_id) {
      if (!gr.needs_grad(x)) return;
      const std::vector<T>& go = gr.val(out_id).grad();
      std::vector<T>& gi = gr.grad(x);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
    });
  }

  const ResizeAxis ay = resize_axis(h, out_h);
  const ResizeAxis ax = resize_axis(w, out_w);

  TensorT<T> out(Shape{n, c, out_h, out_w});
  const std::int64_t planes = static_cast<std::int64_t>(n * c);
  const T* src = t.data().data();
  T* dst = out.data().data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(resolved_threads())
#endif
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* in_plane = src + static_cast<std::size_t>(p) * h * w;
    T* out_plane = dst + static_cast<std::size_t>(p) * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const T* r0 = in_plane + ay.lo[oy] * w;
      const T* r1 = in_plane + ay.hi[oy] * w;
      const T fy = static_cast<T>(ay.frac[oy]);
      T* orow = out_plane + oy * out_w;
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const T fx = static_cast<T>(ax.frac[ox]);
        const T top = (T{1} - fx) * r0[ax.lo[ox]] + fx * r0[ax.hi[ox]];
        const T bot = (T{1} - fx) * r1[ax.lo[ox]] + fx * r1[ax.hi[ox]];
        orow[ox] = (T{1} - fy) * top + fy * bot;
      }
    }
  }

  return g.record("resize_bilinear", {x}, std::move(out),
                  [x, ay, ax, n, c, h, w, out_h, out_w](GraphT<T>& gr, Id out_id) {
                    if (!gr.needs_grad(x)) return;
                    const std::vector<T>& go = gr.val(out_id).grad();
                    std::vector<T>& gi = gr.grad(x);
                    const std::int64_t planes = static_cast<std::int64_t>(n * c);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(resolved_threads())
#endif
                    for (std::int64_t p = 0; p < planes; ++p) {
                      const T* gop = go.data() + static_cast<std::size_t>(p) * out_h * out_w;
                      T* gip = gi.data() + static_cast<std::size_t>(p) * h * w;
                      for (std::size_t oy = 0; oy < out_h; ++oy) {
                        const T fy = static_cast<T>(ay.frac[oy]);
                        T* g0 = gip + ay.lo[oy] * w;
                        T* g1 = gip + ay.hi[oy] * w;
                        const T* grow = gop + oy * out_w;
                        for (std::size_t ox = 0; ox < out_w; ++ox) {
                          const T fx = static_cast<T>(ax.frac[ox]);
                          const T gv = grow[ox];
                          g0[ax.lo[ox]] += (T{1} - fy) * (T{1} - fx) * gv;
                          g0[ax.hi[ox]] += (T{1} - fy) * fx * gv;
                          g1[ax.lo[ox]] += fy * (T{1} - fx) * gv;
                          g1[ax.hi[ox]] += fy * fx * gv;
                        }
                      }
                    }
                  });
}

template <typename T>
typename GraphT<T>::Id bce_loss(GraphT<T>& g, typename GraphT<T>::Id pred,
                                typename GraphT<T>::Id target, T pos_weight) {
  using Id = typename GraphT<T>::Id;
  check_same_shape("bce_loss", g.val(pred), g.val(target));
  const std::vector<T>& p = g.val(pred).data();
  const std::vector<T>& t = g.val(target).data();
  const T lo = static_cast<T>(kBceEps);
  const T hi = T{1} - static_cast<T>(kBceEps);

  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T pc = std::clamp(p[i], lo, hi);
    acc -= static_cast<double>(pos_weight) * static_cast<double>(t[i]) *
               std::log(static_cast<double>(pc)) +
           (1.0 - static_cast<double>(t[i])) * std::log(1.0 - static_cast<double>(pc));
  }
  const double mean = acc / static_cast<double>(p.size());

  TensorT<T> out(Shape{1});
  out[0] = static_cast<T>(mean);

  return g.record(
      "bce_loss", {pred, target}, std::move(out),
      [pred, target, lo, hi, pos_weight](GraphT<T>& gr, Id out_id) {
        const T go = gr.val(out_id).grad()[0];
        const std::vector<T>& p = gr.val(pred).data();
        const std::vector<T>& t = gr.val(target).data();
        const T inv_count = T{1} / static_cast<T>(p.size());
        if (gr.needs_grad(pred)) {
          std::vector<T>& gp = gr.grad(pred);
          for (std::size_t i = 0; i < gp.size(); ++i) {
            if (p[i] <= lo || p[i] >= hi) continue;  // clamped region: zero slope
            gp[i] += go * inv_count * (-pos_weight * t[i] / p[i] + (T{1} - t[i]) / (T{1} - p[i]));
          }
        }
        if (gr.needs_grad(target)) {
          std::vector<T>& gt = gr.grad(target);
          for (std::size_t i = 0; i < gt.size(); ++i) {
            const T pc = std::clamp(p[i], lo, hi);
            gt[i] += go * inv_count * (-pos_weight * std::log(pc) + std::log(T{1} - pc));
          }
        }
      });
}

template <typename T>
typename GraphT<T>::Id scale(GraphT<T>& g, typename GraphT<T>::Id x, T factor) {
  using Id = typename GraphT<T>::Id;
  const std::vector<T>& xv = g.val(x).data();
  TensorT<T> out(g.val(x).shape());
  std::vector<T>& ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = factor * xv[i];

  return g.record("scale", {x}, std::move(out), [x, factor](GraphT<T>& gr, Id out_id) {
    if (!gr.needs_grad(x)) return;
    const std::vector<T>& go = gr.val(out_id).grad();
    std::vector<T>& gi = gr.grad(x);
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += factor * go[i];
  });
}

template <typename T>
typename GraphT<T>::Id sum(GraphT<T>& g, typename GraphT<T>::Id x) {
  using Id = typename GraphT<T>::Id;
  const std::vector<T>& xv = g.val(x).data();
  double acc = 0.0;
  for (const T v : xv) acc += v;
  TensorT<T> out(Shape{1});
  out[0] = static_cast<T>(acc);

  return g.record("sum", {x}, std::move(out), [x](GraphT<T>& gr, Id out_id) {
    if (!gr.needs_grad(x)) return;
    const T go = gr.val(out_id).grad()[0];
    std::vector<T>& gi = gr.grad(x);
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go;
  });
}

#define RTGR_INSTANTIATE_OPS(T)                                                                  \
  template GraphT<T>::Id conv2d<T>(GraphT<T>&, GraphT<T>::Id, GraphT<T>::Id, GraphT<T>::Id, int, \
                                   int);                                                         \
  template GraphT<T>::Id add<T>(GraphT<T>&, GraphT<T>::Id, GraphT<T>::Id);                       \
  template GraphT<T>::Id concat_channels<T>(GraphT<T>&, std::vector<GraphT<T>::Id>);             \
  template GraphT<T>::Id slice_channels<T>(GraphT<T>&, GraphT<T>::Id, std::size_t, std::size_t); \
  template GraphT<T>::Id relu<T>(GraphT<T>&, GraphT<T>::Id);                                     \
  template GraphT<T>::Id sigmoid<T>(GraphT<T>&, GraphT<T>::Id);                                  \
  template GraphT<T>::Id resize_bilinear<T>(GraphT<T>&, GraphT<T>::Id, std::size_t,             \
                                            std::size_t);                                        \
  template GraphT<T>::Id bce_loss<T>(GraphT<T>&, GraphT<T>::Id, GraphT<T>::Id, T);               \
  template GraphT<T>::Id scale<T>(GraphT<T>&, GraphT<T>::Id, T);                                 \
  template GraphT<T>::Id sum<T>(GraphT<T>&, GraphT<T>::Id);

RTGR_INSTANTIATE_OPS(float)
RTGR_INSTANTIATE_OPS(double)

}  // namespace rtgr::ops
