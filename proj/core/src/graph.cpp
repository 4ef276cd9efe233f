#include "basisgen/graph.hpp"

#include <algorithm>
#include <cmath>

namespace basisgen {

const Tensor& Var::value() const { return graph_->value(*this); }

Var Graph::leaf(Tensor value) {
  return emplace("leaf", {}, std::move(value), nullptr);
}

Var Graph::param(Tensor& param) {
  param.set_requires_grad(true);
  Var v = emplace("param", {}, param, nullptr);
  Node& n = nodes_.back();
  n.requires_grad = true;
  n.external = &param;
  return v;
}

Var Graph::emplace(std::string op, std::vector<int> inputs, Tensor value,
                   std::function<void(Graph&, int)> backward) {
  Node n;
  n.op = std::move(op);
  n.inputs = std::move(inputs);
  n.requires_grad = false;
  for (int i : n.inputs) {
    if (node(i).requires_grad) n.requires_grad = true;
  }
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Graph::accumulate(int id, const std::vector<double>& delta) {
  Node& n = node(id);
  if (!n.requires_grad) return;
  if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(n.value.size()), 0.0);
  for (std::size_t i = 0; i < delta.size(); ++i) n.grad[i] += delta[i];
  n.grad_seeded = true;
}

void Graph::accumulate_at(int id, std::int64_t flat_index, double delta) {
  Node& n = node(id);
  if (!n.requires_grad) return;
  if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(n.value.size()), 0.0);
  n.grad[static_cast<std::size_t>(flat_index)] += delta;
  n.grad_seeded = true;
}

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw TensorError("backward: node from a different graph");
  Node& root = node(loss.id());
  if (root.value.size() != 1) {
    throw TensorError("backward: loss must be scalar, got " + shape_str(root.value.shape()));
  }
  root.grad.assign(1, 1.0);
  root.grad_seeded = true;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = node(id);
    if (!n.requires_grad || !n.grad_seeded) continue;
    if (n.backward) n.backward(*this, id);
  }
  // Publish gradients on registered parameter tensors.
  for (Node& n : nodes_) {
    if (n.external != nullptr) {
      std::vector<double>& g = n.external->grad();
      if (n.grad_seeded) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
      }
    }
  }
}

const Tensor& Graph::value(Var v) const { return node(v.id()).value; }

const std::vector<double>& Graph::grad(Var v) const {
  const Node& n = node(v.id());
  if (!n.grad_seeded) throw TensorError("grad: node has no gradient (run backward first)");
  return n.grad;
}

Tensor Graph::grad_tensor(Var v) const {
  const Node& n = node(v.id());
  Tensor g(n.value.shape());
  if (n.grad_seeded) {
    std::copy(n.grad.begin(), n.grad.end(), g.values().begin());
  }
  return g;
}

namespace {

Graph& same_graph(Var a, Var b, const char* op) {
  if (a.graph() == nullptr || a.graph() != b.graph()) {
    throw TensorError(std::string(op) + ": operands belong to different graphs");
  }
  return *a.graph();
}

}  // namespace

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b, "add");
  check_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ia = a.id(), ib = b.id();
  return g.emplace("add", {ia, ib}, std::move(out), [ia, ib](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    gr.accumulate(ia, go);
    gr.accumulate(ib, go);
  });
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b, "sub");
  check_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  return g.emplace("sub", {ia, ib}, std::move(out), [ia, ib](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    gr.accumulate(ia, go);
    std::vector<double> gb(go.size());
    for (std::size_t i = 0; i < go.size(); ++i) gb[i] = -go[i];
    gr.accumulate(ib, gb);
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b, "mul");
  check_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  return g.emplace("mul", {ia, ib}, std::move(out), [ia, ib](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    const Tensor& av = gr.node(ia).value;
    const Tensor& bv2 = gr.node(ib).value;
    std::vector<double> ga(go.size()), gb(go.size());
    for (std::size_t i = 0; i < go.size(); ++i) {
      ga[i] = bv2[static_cast<std::int64_t>(i)] * go[i];
      gb[i] = av[static_cast<std::int64_t>(i)] * go[i];
    }
    gr.accumulate(ia, ga);
    gr.accumulate(ib, gb);
  });
}

Var scale(Var a, double c) {
  Graph& g = *a.graph();
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= c;
  const int ia = a.id();
  return g.emplace("scale", {ia}, std::move(out), [ia, c](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    std::vector<double> ga(go.size());
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] = c * go[i];
    gr.accumulate(ia, ga);
  });
}

Var add_const(Var a, double c) {
  Graph& g = *a.graph();
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] += c;
  const int ia = a.id();
  return g.emplace("add_const", {ia}, std::move(out), [ia](Graph& gr, int self) {
    gr.accumulate(ia, gr.node(self).grad);
  });
}

Var matvec(Var w, Var x) {
  Graph& g = same_graph(w, x, "matvec");
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  if (wv.rank() != 2 || xv.rank() != 1 || wv.dim(1) != xv.dim(0)) {
    throw TensorError("matvec: shape mismatch " + shape_str(wv.shape()) + " vs " +
                      shape_str(xv.shape()));
  }
  const std::int64_t m = wv.dim(0), n = wv.dim(1);
  Tensor out({m});
  for (std::int64_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < n; ++j) acc += wv[i * n + j] * xv[j];
    out[i] = acc;
  }
  const int iw = w.id(), ix = x.id();
  return g.emplace("matvec", {iw, ix}, std::move(out), [iw, ix, m, n](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    const Tensor& wv2 = gr.node(iw).value;
    const Tensor& xv2 = gr.node(ix).value;
    if (gr.node(iw).requires_grad) {
      std::vector<double> gw(static_cast<std::size_t>(m * n), 0.0);
      for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
          gw[static_cast<std::size_t>(i * n + j)] = go[static_cast<std::size_t>(i)] * xv2[j];
        }
      }
      gr.accumulate(iw, gw);
    }
    if (gr.node(ix).requires_grad) {
      std::vector<double> gx(static_cast<std::size_t>(n), 0.0);
      for (std::int64_t i = 0; i < m; ++i) {
        const double gi = go[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < n; ++j) gx[static_cast<std::size_t>(j)] += gi * wv2[i * n + j];
      }
      gr.accumulate(ix, gx);
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = *a.graph();
  if (shape_size(shape) != a.value().size()) {
    throw TensorError("reshape: size mismatch " + shape_str(a.value().shape()) + " -> " +
                      shape_str(shape));
  }
  Tensor out(std::move(shape), a.value().values());
  const int ia = a.id();
  return g.emplace("reshape", {ia}, std::move(out), [ia](Graph& gr, int self) {
    gr.accumulate(ia, gr.node(self).grad);
  });
}

Var concat_channels(Var a, Var b) {
  Graph& g = same_graph(a, b, "concat_channels");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2)) {
    throw TensorError("concat_channels: incompatible shapes " + shape_str(av.shape()) + " vs " +
                      shape_str(bv.shape()));
  }
  const std::int64_t ca = av.dim(0), cb = bv.dim(0), h = av.dim(1), w = av.dim(2);
  Tensor out({ca + cb, h, w});
  std::copy(av.values().begin(), av.values().end(), out.values().begin());
  std::copy(bv.values().begin(), bv.values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(ca * h * w));
  const int ia = a.id(), ib = b.id();
  const std::int64_t na = ca * h * w, nb = cb * h * w;
  return g.emplace("concat_channels", {ia, ib}, std::move(out),
                   [ia, ib, na, nb](Graph& gr, int self) {
                     const auto& go = gr.node(self).grad;
                     if (gr.node(ia).requires_grad) {
                       std::vector<double> ga(go.begin(), go.begin() + static_cast<std::ptrdiff_t>(na));
                       gr.accumulate(ia, ga);
                     }
                     if (gr.node(ib).requires_grad) {
                       std::vector<double> gb(go.begin() + static_cast<std::ptrdiff_t>(na),
                                              go.begin() + static_cast<std::ptrdiff_t>(na + nb));
                       gr.accumulate(ib, gb);
                     }
                   });
}

Var add_channel_bias(Var x, Var bias) {
  Graph& g = same_graph(x, bias, "add_channel_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 3 || bv.rank() != 1 || bv.dim(0) != xv.dim(0)) {
    throw TensorError("add_channel_bias: " + shape_str(xv.shape()) + " vs " +
                      shape_str(bv.shape()));
  }
  const std::int64_t c = xv.dim(0), hw = xv.dim(1) * xv.dim(2);
  Tensor out = xv;
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t i = 0; i < hw; ++i) out[ci * hw + i] += bv[ci];
  }
  const int ix = x.id(), ib = bias.id();
  return g.emplace("add_channel_bias", {ix, ib}, std::move(out),
                   [ix, ib, c, hw](Graph& gr, int self) {
                     const auto& go = gr.node(self).grad;
                     gr.accumulate(ix, go);
                     if (gr.node(ib).requires_grad) {
                       std::vector<double> gb(static_cast<std::size_t>(c), 0.0);
                       for (std::int64_t ci = 0; ci < c; ++ci) {
                         for (std::int64_t i = 0; i < hw; ++i) {
                           gb[static_cast<std::size_t>(ci)] += go[static_cast<std::size_t>(ci * hw + i)];
                         }
                       }
                       gr.accumulate(ib, gb);
                     }
                   });
}

namespace {

struct ConvDims {
  std::int64_t batch, cin, h, w, cout, l, ho, wo;
  bool batched;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int padding) {
  if (w.rank() != 4) {
    throw TensorError("conv2d: weights must be [Cout,Cin,L,L], got " + shape_str(w.shape()));
  }
  ConvDims d{};
  d.batched = (x.rank() == 4);
  if (x.rank() != 3 && x.rank() != 4) {
    throw TensorError("conv2d: input must be [Cin,H,W] or [N,Cin,H,W], got " +
                      shape_str(x.shape()));
  }
  d.batch = d.batched ? x.dim(0) : 1;
  d.cin = x.dim(d.batched ? 1 : 0);
  d.h = x.dim(d.batched ? 2 : 1);
  d.w = x.dim(d.batched ? 3 : 2);
  d.cout = w.dim(0);
  d.l = w.dim(2);
  if (w.dim(1) != d.cin) {
    throw TensorError("conv2d: input channels " + std::to_string(d.cin) +
                      " != weight Cin " + std::to_string(w.dim(1)));
  }
  if (w.dim(2) != w.dim(3) || d.l % 2 == 0) {
    throw TensorError("conv2d: kernel must be odd and square, got " + shape_str(w.shape()));
  }
  if (padding < 0) throw TensorError("conv2d: padding must be >= 0");
  d.ho = d.h + 2 * padding - d.l + 1;
  d.wo = d.w + 2 * padding - d.l + 1;
  if (d.ho < 1 || d.wo < 1) {
    throw TensorError("conv2d: output size " + std::to_string(d.ho) + "x" + std::to_string(d.wo) +
                      " not positive for input " + shape_str(x.shape()) + ", kernel " +
                      std::to_string(d.l) + ", padding " + std::to_string(padding));
  }
  return d;
}

}  // namespace

namespace {

// Copies one image [Cin,H,W] into a zero-padded buffer [Cin,H+2p,W+2p] so the
// kernels below run without bounds checks.
void pad_image(const double* x, std::int64_t cin, std::int64_t h, std::int64_t w, std::int64_t p,
               std::vector<double>& padded) {
  const std::int64_t hp = h + 2 * p, wp = w + 2 * p;
  std::fill(padded.begin(), padded.end(), 0.0);
  for (std::int64_t ci = 0; ci < cin; ++ci) {
    for (std::int64_t row = 0; row < h; ++row) {
      std::copy(x + (ci * h + row) * w, x + (ci * h + row + 1) * w,
                padded.begin() + static_cast<std::ptrdiff_t>((ci * hp + row + p) * wp + p));
    }
  }
}

}  // namespace

Var conv2d(Var x, Var w, int padding) {
  Graph& g = same_graph(x, w, "conv2d");
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const ConvDims d = conv_dims(xv, wv, padding);

  Shape out_shape = d.batched ? Shape{d.batch, d.cout, d.ho, d.wo} : Shape{d.cout, d.ho, d.wo};
  Tensor out(out_shape);
  const std::int64_t p = padding;
  const std::int64_t hp = d.h + 2 * p, wp = d.w + 2 * p;

  std::vector<double> padded(static_cast<std::size_t>(d.cin * hp * wp));
  for (std::int64_t n = 0; n < d.batch; ++n) {
    pad_image(xv.data() + n * d.cin * d.h * d.w, d.cin, d.h, d.w, p, padded);
    double* on = out.data() + n * d.cout * d.ho * d.wo;
    for (std::int64_t co = 0; co < d.cout; ++co) {
      for (std::int64_t ci = 0; ci < d.cin; ++ci) {
        const double* wc = wv.data() + (co * d.cin + ci) * d.l * d.l;
        const double* xc = padded.data() + ci * hp * wp;
        for (std::int64_t ho = 0; ho < d.ho; ++ho) {
          double* orow = on + co * d.ho * d.wo + ho * d.wo;
          for (std::int64_t u = 0; u < d.l; ++u) {
            const double* xrow = xc + (ho + u) * wp;
            const double* wrow = wc + u * d.l;
            for (std::int64_t v = 0; v < d.l; ++v) {
              const double wv_uv = wrow[v];
              if (wv_uv == 0.0) continue;
              const double* xp = xrow + v;
              for (std::int64_t wo = 0; wo < d.wo; ++wo) orow[wo] += wv_uv * xp[wo];
            }
          }
        }
      }
    }
  }

  const int ix = x.id(), iw = w.id();
  return g.emplace("conv2d", {ix, iw}, std::move(out), [ix, iw, d, p](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    const Tensor& xv2 = gr.node(ix).value;
    const Tensor& wv2 = gr.node(iw).value;
    const bool need_x = gr.node(ix).requires_grad;
    const bool need_w = gr.node(iw).requires_grad;
    const std::int64_t hp = d.h + 2 * p, wp = d.w + 2 * p;

    std::vector<double> gx, gw;
    if (need_x) gx.assign(static_cast<std::size_t>(xv2.size()), 0.0);
    if (need_w) gw.assign(static_cast<std::size_t>(wv2.size()), 0.0);

    std::vector<double> padded(static_cast<std::size_t>(d.cin * hp * wp));
    std::vector<double> gpad(static_cast<std::size_t>(d.cin * hp * wp));

    for (std::int64_t n = 0; n < d.batch; ++n) {
      if (need_w || need_x) {
        pad_image(xv2.data() + n * d.cin * d.h * d.w, d.cin, d.h, d.w, p, padded);
      }
      if (need_x) std::fill(gpad.begin(), gpad.end(), 0.0);
      const double* gn = go.data() + n * d.cout * d.ho * d.wo;

      for (std::int64_t co = 0; co < d.cout; ++co) {
        for (std::int64_t ci = 0; ci < d.cin; ++ci) {
          const double* wc = wv2.data() + (co * d.cin + ci) * d.l * d.l;
          double* gwc = need_w ? gw.data() + (co * d.cin + ci) * d.l * d.l : nullptr;
          const double* xc = padded.data() + ci * hp * wp;
          double* gxc = need_x ? gpad.data() + ci * hp * wp : nullptr;
          for (std::int64_t ho = 0; ho < d.ho; ++ho) {
            const double* grow = gn + co * d.ho * d.wo + ho * d.wo;
            for (std::int64_t u = 0; u < d.l; ++u) {
              const double* xrow = xc + (ho + u) * wp;
              double* gxrow = need_x ? gxc + (ho + u) * wp : nullptr;
              for (std::int64_t v = 0; v < d.l; ++v) {
                if (need_w) {
                  double acc = 0.0;
                  const double* xp = xrow + v;
                  for (std::int64_t wo = 0; wo < d.wo; ++wo) acc += xp[wo] * grow[wo];
                  gwc[u * d.l + v] += acc;
                }
                if (need_x) {
                  const double wv_uv = wc[u * d.l + v];
                  if (wv_uv != 0.0) {
                    double* gxp = gxrow + v;
                    for (std::int64_t wo = 0; wo < d.wo; ++wo) gxp[wo] += wv_uv * grow[wo];
                  }
                }
              }
            }
          }
        }
      }
      if (need_x) {
        // Crop the padded gradient back to the input extent.
        double* gxn = gx.data() + n * d.cin * d.h * d.w;
        for (std::int64_t ci = 0; ci < d.cin; ++ci) {
          for (std::int64_t row = 0; row < d.h; ++row) {
            const double* src = gpad.data() + (ci * hp + row + p) * wp + p;
            double* dst = gxn + (ci * d.h + row) * d.w;
            for (std::int64_t col = 0; col < d.w; ++col) dst[col] += src[col];
          }
        }
      }
    }
    if (need_x) gr.accumulate(ix, gx);
    if (need_w) gr.accumulate(iw, gw);
  });
}

namespace {

Var unary_map(Var a, const char* name, double (*fwd)(double),
              double (*dydx)(double /*x*/, double /*y*/)) {
  Graph& g = *a.graph();
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = fwd(out[i]);
  const int ia = a.id();
  return g.emplace(name, {ia}, std::move(out), [ia, dydx](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    const Tensor& xv = gr.node(ia).value;
    const Tensor& yv = gr.node(self).value;
    std::vector<double> ga(go.size());
    for (std::size_t i = 0; i < go.size(); ++i) {
      const auto k = static_cast<std::int64_t>(i);
      ga[i] = dydx(xv[k], yv[k]) * go[i];
    }
    gr.accumulate(ia, ga);
  });
}

}  // namespace

Var leaky_relu(Var a) {
  return unary_map(
      a, "leaky_relu", +[](double t) { return t > 0.0 ? t : 0.2 * t; },
      +[](double x, double) { return x > 0.0 ? 1.0 : 0.2; });
}

Var tanh_op(Var a) {
  return unary_map(
      a, "tanh", +[](double t) { return std::tanh(t); },
      +[](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary_map(
      a, "sigmoid", +[](double t) { return 1.0 / (1.0 + std::exp(-t)); },
      +[](double, double y) { return y * (1.0 - y); });
}

Var abs_op(Var a) {
  return unary_map(
      a, "abs", +[](double t) { return std::fabs(t); },
      +[](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var log_guarded(Var a, double floor) {
  Graph& g = *a.graph();
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(out[i], floor));
  const int ia = a.id();
  return g.emplace("log", {ia}, std::move(out), [ia, floor](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    const Tensor& xv = gr.node(ia).value;
    std::vector<double> ga(go.size());
    for (std::size_t i = 0; i < go.size(); ++i) {
      const double x = xv[static_cast<std::int64_t>(i)];
      ga[i] = x > floor ? go[i] / x : 0.0;
    }
    gr.accumulate(ia, ga);
  });
}

Var sum(Var a) {
  Graph& g = *a.graph();
  double s = 0.0;
  for (std::int64_t i = 0; i < a.value().size(); ++i) s += a.value()[i];
  const int ia = a.id();
  const std::int64_t n = a.value().size();
  return g.emplace("sum", {ia}, Tensor::scalar(s), [ia, n](Graph& gr, int self) {
    const double go = gr.node(self).grad[0];
    std::vector<double> ga(static_cast<std::size_t>(n), go);
    gr.accumulate(ia, ga);
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var spatial_mean(Var a) {
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rank() != 3) {
    throw TensorError("spatial_mean: expected [C,H,W], got " + shape_str(av.shape()));
  }
  const std::int64_t c = av.dim(0), h = av.dim(1), w = av.dim(2);
  const double inv = 1.0 / static_cast<double>(h * w);
  Tensor out({c});
  for (std::int64_t ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < h * w; ++i) acc += av[ci * h * w + i];
    out[ci] = acc * inv;
  }
  const int ia = a.id();
  return g.emplace("spatial_mean", {ia}, std::move(out), [ia, c, h, w, inv](Graph& gr, int self) {
    const auto& go = gr.node(self).grad;
    std::vector<double> ga(static_cast<std::size_t>(c * h * w));
    for (std::int64_t ci = 0; ci < c; ++ci) {
      const double gc = go[static_cast<std::size_t>(ci)] * inv;
      for (std::int64_t i = 0; i < h * w; ++i) ga[static_cast<std::size_t>(ci * h * w + i)] = gc;
    }
    gr.accumulate(ia, ga);
  });
}

Var detach(Var a) { return a.graph()->leaf(a.value()); }

Var basis_combine(Var psi, Var a) {
  Graph& g = same_graph(psi, a, "basis_combine");
  const Tensor& pv = psi.value();
  const Tensor& av = a.value();
  if (pv.rank() != 3 || av.rank() != 3 || pv.dim(2) != av.dim(0)) {
    throw TensorError("basis_combine: psi " + shape_str(pv.shape()) + " vs coefficients " +
                      shape_str(av.shape()) + " (K mismatch)");
  }
  const std::int64_t l = pv.dim(0), k = pv.dim(2), cin = av.dim(1), cout = av.dim(2);
  if (pv.dim(1) != l) {
    throw TensorError("basis_combine: psi spatial dims must be square, got " + shape_str(pv.shape()));
  }
  Tensor out({cout, cin, l, l});
  for (std::int64_t co = 0; co < cout; ++co) {
    for (std::int64_t ci = 0; ci < cin; ++ci) {
      for (std::int64_t u = 0; u < l; ++u) {
        for (std::int64_t v = 0; v < l; ++v) {
          double acc = 0.0;
          for (std::int64_t kk = 0; kk < k; ++kk) {
            acc += pv[(u * l + v) * k + kk] * av[(kk * cin + ci) * cout + co];
          }
          out[((co * cin + ci) * l + u) * l + v] = acc;
        }
      }
    }
  }
  const int ip = psi.id(), ia = a.id();
  return g.emplace("basis_combine", {ip, ia}, std::move(out),
                   [ip, ia, l, k, cin, cout](Graph& gr, int self) {
                     const auto& go = gr.node(self).grad;
                     const Tensor& pv2 = gr.node(ip).value;
                     const Tensor& av2 = gr.node(ia).value;
                     const bool need_p = gr.node(ip).requires_grad;
                     const bool need_a = gr.node(ia).requires_grad;
                     std::vector<double> gp, ga;
                     if (need_p) gp.assign(static_cast<std::size_t>(pv2.size()), 0.0);
                     if (need_a) ga.assign(static_cast<std::size_t>(av2.size()), 0.0);
                     for (std::int64_t co = 0; co < cout; ++co) {
                       for (std::int64_t ci = 0; ci < cin; ++ci) {
                         for (std::int64_t u = 0; u < l; ++u) {
                           for (std::int64_t v = 0; v < l; ++v) {
                             const double gw = go[static_cast<std::size_t>(((co * cin + ci) * l + u) * l + v)];
                             if (gw == 0.0) continue;
                             for (std::int64_t kk = 0; kk < k; ++kk) {
                               if (need_p)
                                 gp[static_cast<std::size_t>((u * l + v) * k + kk)] +=
                                     gw * av2[(kk * cin + ci) * cout + co];
                               if (need_a)
                                 ga[static_cast<std::size_t>((kk * cin + ci) * cout + co)] +=
                                     gw * pv2[(u * l + v) * k + kk];
                             }
                           }
                         }
                       }
                     }
                     if (need_p) gr.accumulate(ip, gp);
                     if (need_a) gr.accumulate(ia, ga);
                   });
}

Var mean_of(const std::vector<Var>& xs) {
  if (xs.empty()) throw TensorError("mean_of: empty list");
  Var acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return scale(acc, 1.0 / static_cast<double>(xs.size()));
}

}  // namespace basisgen
