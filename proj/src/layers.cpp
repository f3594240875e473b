#include "en2/layers.hpp"

#include "en2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace en2 {

namespace {

struct ConvGeometry
{
  Index in, out, kh, kw, dil;
  Index pad_y, pad_x;
  Index H, W, OH, OW;
};

ConvGeometry geometry(ComplexConvParams const &p, Shape const &input)
{
  if (input.channels != p.in_channels) {
    throw ContractViolation("complex_conv2d: input has " + std::to_string(input.channels) + " channels, expected " +
                            std::to_string(p.in_channels));
  }
  ConvGeometry g{};
  g.in = p.in_channels;
  g.out = p.out_channels;
  g.kh = p.kernel_height;
  g.kw = p.kernel_width;
  g.dil = p.dilation;
  g.H = input.height;
  g.W = input.width;
  if (p.padding == Padding::SameZero) {
    g.pad_y = g.dil * (g.kh - 1) / 2;
    g.pad_x = g.dil * (g.kw - 1) / 2;
  }
  g.OH = p.output_height(g.H);
  g.OW = p.output_width(g.W);
  return g;
}

// Offsets are signed; the loops below clip to the valid input range.
using Offset = std::ptrdiff_t;

template <typename Fn>
void for_each_tap(ConvGeometry const &g, Fn &&fn)
{
  for (Index ky = 0; ky < g.kh; ky++) {
    for (Index kx = 0; kx < g.kw; kx++) {
      Offset const dy = static_cast<Offset>(ky * g.dil) - static_cast<Offset>(g.pad_y);
      Offset const dx = static_cast<Offset>(kx * g.dil) - static_cast<Offset>(g.pad_x);
      Offset const y0 = std::max<Offset>(0, -dy);
      Offset const y1 = std::min<Offset>(static_cast<Offset>(g.OH), static_cast<Offset>(g.H) - dy);
      Offset const x0 = std::max<Offset>(0, -dx);
      Offset const x1 = std::min<Offset>(static_cast<Offset>(g.OW), static_cast<Offset>(g.W) - dx);
      if (y0 >= y1 || x0 >= x1) { continue; }
      fn(ky, kx, dy, dx, y0, y1, x0, x1);
    }
  }
}

ComplexGrid conv_forward(ComplexGrid const &in, ComplexGrid const &w, ComplexGrid const &b, ConvGeometry const &g)
{
  ComplexGrid out(g.out, g.OH, g.OW);
  auto const ip = g.H * g.W;
  auto const op = g.OH * g.OW;
  auto const kp = g.kh * g.kw;
  double const *xr = in.re().data();
  double const *xi = in.im().data();
  double *yr = out.re().data();
  double *yi = out.im().data();
  for (Index o = 0; o < g.out; o++) {
    std::fill_n(yr + o * op, op, b.re()[o]);
    std::fill_n(yi + o * op, op, b.im()[o]);
    for (Index c = 0; c < g.in; c++) {
      double const *ar = w.re().data() + (o * g.in + c) * kp;
      double const *br = w.im().data() + (o * g.in + c) * kp;
      for_each_tap(g, [&](Index ky, Index kx, Offset dy, Offset dx, Offset y0, Offset y1, Offset x0, Offset x1) {
        double const a = ar[ky * g.kw + kx];
        double const bb = br[ky * g.kw + kx];
        for (Offset y = y0; y < y1; y++) {
          double const *sr = xr + c * ip + (y + dy) * static_cast<Offset>(g.W) + dx;
          double const *si = xi + c * ip + (y + dy) * static_cast<Offset>(g.W) + dx;
          double *dr = yr + o * op + y * static_cast<Offset>(g.OW);
          double *di = yi + o * op + y * static_cast<Offset>(g.OW);
          for (Offset x = x0; x < x1; x++) {
            dr[x] += sr[x] * a - si[x] * bb;
            di[x] += sr[x] * bb + si[x] * a;
          }
        }
      });
    }
  }
  return out;
}

void conv_backward(ComplexGrid const &gout, ComplexGrid const &in, ComplexGrid const &w, ConvGeometry const &g,
                   ComplexGrid *gin, ComplexGrid *gw, ComplexGrid *gb)
{
  auto const ip = g.H * g.W;
  auto const op = g.OH * g.OW;
  auto const kp = g.kh * g.kw;
  double const *tr = gout.re().data();
  double const *ti = gout.im().data();
  if (gb) {
    for (Index o = 0; o < g.out; o++) {
      double sr = 0.0;
      double si = 0.0;
      for (Index i = 0; i < op; i++) {
        sr += tr[o * op + i];
        si += ti[o * op + i];
      }
      gb->re()[o] = sr;
      gb->im()[o] = si;
    }
  }
  for (Index o = 0; o < g.out; o++) {
    for (Index c = 0; c < g.in; c++) {
      Index const kbase = (o * g.in + c) * kp;
      for_each_tap(g, [&](Index ky, Index kx, Offset dy, Offset dx, Offset y0, Offset y1, Offset x0, Offset x1) {
        Index const k = kbase + ky * g.kw + kx;
        double const a = w.re()[k];
        double const b = w.im()[k];
        double wr = 0.0;
        double wi = 0.0;
        for (Offset y = y0; y < y1; y++) {
          Offset const src = static_cast<Offset>(c * ip) + (y + dy) * static_cast<Offset>(g.W) + dx;
          double const *gr = tr + o * op + y * static_cast<Offset>(g.OW);
          double const *gi = ti + o * op + y * static_cast<Offset>(g.OW);
          if (gin) {
            double *dr = gin->re().data() + src;
            double *di = gin->im().data() + src;
            // g * conj(w)
            for (Offset x = x0; x < x1; x++) {
              dr[x] += gr[x] * a + gi[x] * b;
              di[x] += gi[x] * a - gr[x] * b;
            }
          }
          if (gw) {
            double const *sr = in.re().data() + src;
            double const *si = in.im().data() + src;
            // g * conj(x)
            for (Offset x = x0; x < x1; x++) {
              wr += gr[x] * sr[x] + gi[x] * si[x];
              wi += gi[x] * sr[x] - gr[x] * si[x];
            }
          }
        }
        if (gw) {
          gw->re()[k] += wr;
          gw->im()[k] += wi;
        }
      });
    }
  }
}

void check_conv_params(ComplexConvParams const &p)
{
  Shape const ws{p.out_channels * p.in_channels, p.kernel_height, p.kernel_width};
  if (p.weights.shape() != ws) { throw ContractViolation("complex_conv2d: weight array has the wrong shape"); }
  if (p.bias.shape() != Shape{p.out_channels, 1, 1}) {
    throw ContractViolation("complex_conv2d: bias length must equal out_channels");
  }
  if (p.dilation == 0) { throw ContractViolation("complex_conv2d: dilation must be >= 1"); }
}

void fill_uniform(ComplexGrid &g, double limit, Rng &rng)
{
  for (auto &v : g.re()) {
    v = rng.uniform(-limit, limit);
  }
  for (auto &v : g.im()) {
    v = rng.uniform(-limit, limit);
  }
}

} // namespace

Index ComplexConvParams::output_height(Index h) const
{
  auto const span = dilation * (kernel_height - 1);
  if (padding == Padding::SameZero) { return h + 2 * (span / 2) - span; }
  if (h < span + 1) { throw ContractViolation("complex_conv2d: input smaller than kernel"); }
  return h - span;
}

Index ComplexConvParams::output_width(Index w) const
{
  auto const span = dilation * (kernel_width - 1);
  if (padding == Padding::SameZero) { return w + 2 * (span / 2) - span; }
  if (w < span + 1) { throw ContractViolation("complex_conv2d: input smaller than kernel"); }
  return w - span;
}

ComplexConvParams make_conv(std::string const &name, Index in, Index out, Index kh, Index kw, Init init, Rng &rng,
                            Index dilation, Padding padding)
{
  if (in == 0 || out == 0 || kh == 0 || kw == 0) { throw ConfigError("make_conv: zero dimension in " + name); }
  ComplexConvParams p;
  p.in_channels = in;
  p.out_channels = out;
  p.kernel_height = kh;
  p.kernel_width = kw;
  p.dilation = dilation;
  p.padding = padding;
  ComplexGrid w(out * in, kh, kw);
  if (init == Init::Glorot) {
    double const limit = std::sqrt(6.0 / static_cast<double>(2 * (in + out) * kh * kw));
    fill_uniform(w, limit, rng);
  }
  p.weights = Var::parameter(std::move(w), name + ".weights");
  p.bias = Var::parameter(ComplexGrid(out, 1, 1), name + ".bias");
  return p;
}

ComplexGrid complex_conv2d(ComplexGrid const &input, ComplexConvParams const &params)
{
  check_conv_params(params);
  auto const g = geometry(params, input.shape());
  return conv_forward(input, params.weights.value(), params.bias.value(), g);
}

Var complex_conv2d(Var const &input, ComplexConvParams const &params)
{
  check_conv_params(params);
  auto const g = geometry(params, input.shape());
  auto out = conv_forward(input.value(), params.weights.value(), params.bias.value(), g);
  Var w = params.weights;
  Var b = params.bias;
  return Node::record(std::move(out), "complex_conv2d", {input, w, b}, [input, w, b, g](ComplexGrid const &up) {
    ComplexGrid gin;
    ComplexGrid gw;
    ComplexGrid gb;
    if (needs_grad(input)) { gin = ComplexGrid(input.shape()); }
    if (needs_grad(w)) { gw = ComplexGrid(w.shape()); }
    if (needs_grad(b)) { gb = ComplexGrid(b.shape()); }
    conv_backward(up, input.value(), w.value(), g, needs_grad(input) ? &gin : nullptr, needs_grad(w) ? &gw : nullptr,
                  needs_grad(b) ? &gb : nullptr);
    accumulate(input, gin);
    accumulate(w, gw);
    accumulate(b, gb);
  });
}

En2LayerParams make_en2(std::string const &name, En2Mode mode, Index num_kernels, Index kernel_length, Init init,
                        Rng &rng)
{
  if (num_kernels == 0 || kernel_length == 0) { throw ConfigError("make_en2: zero dimension in " + name); }
  En2LayerParams p;
  p.mode = mode;
  p.num_kernels = num_kernels;
  p.kernel_length = kernel_length;
  ComplexGrid k(1, num_kernels, kernel_length);
  if (init == Init::Glorot) {
    double const limit = std::sqrt(6.0 / static_cast<double>(2 * (kernel_length + num_kernels)));
    fill_uniform(k, limit, rng);
  }
  p.kernels = Var::parameter(std::move(k), name + ".kernels");
  p.biases = Var::parameter(ComplexGrid(1, 1, num_kernels), name + ".biases");
  return p;
}

namespace {

void check_en2(Shape const &in, En2LayerParams const &p)
{
  if (p.kernels.shape() != Shape{1, p.num_kernels, p.kernel_length} ||
      p.biases.shape() != Shape{1, 1, p.num_kernels}) {
    throw ContractViolation("en2_forward: parameter arrays have the wrong shape");
  }
  if (in.channels != 1) { throw ContractViolation("en2_forward: expects a single complex channel"); }
  auto const line = p.mode == En2Mode::Frequency ? in.width : in.height;
  if (line != p.kernel_length) {
    throw ContractViolation("en2_forward: line length " + std::to_string(line) + " does not match kernel length " +
                            std::to_string(p.kernel_length));
  }
}

} // namespace

ComplexGrid en2_forward(ComplexGrid const &k, En2LayerParams const &params)
{
  check_en2(k.shape(), params);
  auto const &E = params.kernels.value();
  auto const &b = params.biases.value();
  auto const L = params.kernel_length;
  auto const N = params.num_kernels;
  if (params.mode == En2Mode::Frequency) {
    auto const H = k.height();
    ComplexGrid out(1, H, N);
    for (Index i = 0; i < H; i++) {
      for (Index j = 0; j < N; j++) {
        double sr = 0.0;
        double si = 0.0;
        for (Index t = 0; t < L; t++) {
          double const kr = k.re()[i * L + t];
          double const ki = k.im()[i * L + t];
          double const er = E.re()[j * L + t];
          double const ei = E.im()[j * L + t];
          sr += kr * er - ki * ei;
          si += kr * ei + ki * er;
        }
        out.re()[i * N + j] = sr + b.re()[j];
        out.im()[i * N + j] = si + b.im()[j];
      }
    }
    return out;
  }
  auto const W = k.width();
  ComplexGrid out(1, N, W);
  for (Index i = 0; i < N; i++) {
    for (Index j = 0; j < W; j++) {
      double sr = 0.0;
      double si = 0.0;
      for (Index t = 0; t < L; t++) {
        double const kr = k.re()[t * W + j];
        double const ki = k.im()[t * W + j];
        double const er = E.re()[i * L + t];
        double const ei = E.im()[i * L + t];
        sr += kr * er - ki * ei;
        si += kr * ei + ki * er;
      }
      out.re()[i * W + j] = sr + b.re()[i];
      out.im()[i * W + j] = si + b.im()[i];
    }
  }
  return out;
}

Var en2_forward(Var const &k, En2LayerParams const &params)
{
  auto out = en2_forward(k.value(), params);
  Var E = params.kernels;
  Var b = params.biases;
  auto const mode = params.mode;
  auto const L = params.kernel_length;
  auto const N = params.num_kernels;
  return Node::record(std::move(out), mode == En2Mode::Frequency ? "en2_frequency" : "en2_phase", {k, E, b},
                      [k, E, b, mode, L, N](ComplexGrid const &g) {
                        auto const &kv = k.value();
                        auto const &ev = E.value();
                        ComplexGrid gk(kv.shape());
                        ComplexGrid ge(ev.shape());
                        ComplexGrid gb(b.shape());
                        if (mode == En2Mode::Frequency) {
                          auto const H = kv.height();
                          for (Index i = 0; i < H; i++) {
                            for (Index j = 0; j < N; j++) {
                              Cx const up = g.at(i * N + j);
                              gb.set(j, gb.at(j) + up);
                              for (Index t = 0; t < L; t++) {
                                gk.set(i * L + t, gk.at(i * L + t) + up * std::conj(ev.at(j * L + t)));
                                ge.set(j * L + t, ge.at(j * L + t) + up * std::conj(kv.at(i * L + t)));
                              }
                            }
                          }
                        } else {
                          auto const W = kv.width();
                          for (Index i = 0; i < N; i++) {
                            for (Index j = 0; j < W; j++) {
                              Cx const up = g.at(i * W + j);
                              gb.set(i, gb.at(i) + up);
                              for (Index t = 0; t < L; t++) {
                                gk.set(t * W + j, gk.at(t * W + j) + up * std::conj(ev.at(i * L + t)));
                                ge.set(i * L + t, ge.at(i * L + t) + up * std::conj(kv.at(t * W + j)));
                              }
                            }
                          }
                        }
                        accumulate(k, gk);
                        accumulate(E, ge);
                        accumulate(b, gb);
                      });
}

namespace {

double activate(double v, Activation kind) { return kind == Activation::Tanh ? std::tanh(v) : std::max(v, 0.0); }

double activation_slope(double v, Activation kind)
{
  if (kind == Activation::Tanh) {
    double const t = std::tanh(v);
    return 1.0 - t * t;
  }
  return v > 0.0 ? 1.0 : 0.0;
}

} // namespace

ComplexGrid split_activation(ComplexGrid const &t, Activation kind)
{
  ComplexGrid out(t.shape());
  for (Index i = 0; i < t.size(); i++) {
    out.re()[i] = activate(t.re()[i], kind);
    out.im()[i] = activate(t.im()[i], kind);
  }
  return out;
}

Var split_activation(Var const &t, Activation kind)
{
  return Node::record(split_activation(t.value(), kind), kind == Activation::Tanh ? "split_tanh" : "split_relu", {t},
                      [t, kind](ComplexGrid const &g) {
                        auto const &v = t.value();
                        ComplexGrid gt(v.shape());
                        for (Index i = 0; i < v.size(); i++) {
                          gt.re()[i] = g.re()[i] * activation_slope(v.re()[i], kind);
                          gt.im()[i] = g.im()[i] * activation_slope(v.im()[i], kind);
                        }
                        accumulate(t, gt);
                      });
}

FmuParams make_fmu(std::string const &name, Index channels, Index growth, Init init, Rng &rng)
{
  FmuParams p;
  p.residual_conv = make_conv(name + ".residual", channels, channels, 1, 1, init, rng);
  p.dense_conv = make_conv(name + ".dense", channels, growth, 3, 3, init, rng);
  return p;
}

Var fmu_forward(Var const &s_in, FmuParams const &params)
{
  if (s_in.value().channels() != params.residual_conv.in_channels ||
      params.residual_conv.out_channels != params.residual_conv.in_channels ||
      params.dense_conv.in_channels != params.residual_conv.in_channels) {
    throw ContractViolation("fmu_forward: channel mismatch");
  }
  auto residual = add(split_activation(complex_conv2d(s_in, params.residual_conv), Activation::Relu), s_in);
  auto dense = split_activation(complex_conv2d(s_in, params.dense_conv), Activation::Relu);
  return concat_channels({residual, dense});
}

Var kspace_layer_forward(Var const &k, KspaceLayer const &layer)
{
  if (auto const *e = std::get_if<En2LayerParams>(&layer)) { return en2_forward(k, *e); }
  return complex_conv2d(k, std::get<ComplexConvParams>(layer));
}

Index tanh_position(Index layers) { return (layers + 1) / 2; }

Var e_block_forward(Var const &k_in, Var const &y_u, SamplingMask const &mask, std::span<KspaceLayer const> layers)
{
  if (layers.empty()) { throw ContractViolation("e_block_forward: no layers"); }
  auto const act = tanh_position(layers.size());
  Var h = k_in;
  for (Index l = 0; l < layers.size(); l++) {
    h = kspace_layer_forward(h, layers[l]);
    if (l + 1 == act) { h = split_activation(h, Activation::Tanh); }
  }
  if (h.shape() != y_u.shape()) { throw ContractViolation("e_block_forward: block does not preserve the k-space shape"); }
  return kdc(h, y_u, mask);
}

Var f_block_forward(Var const &img, Var const &y_u, SamplingMask const &mask, FBlockParams const &params)
{
  if (img.value().channels() != 1) { throw ContractViolation("f_block_forward: expects a single-channel image"); }
  Var h = img;
  for (auto const &fmu : params.fmus) {
    h = fmu_forward(h, fmu);
  }
  auto refined = complex_conv2d(h, params.final_conv);
  if (refined.shape() != img.shape()) { throw ContractViolation("f_block_forward: final conv must emit one channel"); }
  return idc(add(refined, img), y_u, mask);
}

} // namespace en2
