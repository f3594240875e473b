#include "en2/kspace.hpp"

#include "en2/errors.hpp"
#include "en2/fourier.hpp"
#include "en2/random.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace en2 {

Index SamplingMask::sampled_columns() const
{
  Index n = 0;
  for (auto f : column_flags) {
    n += f != 0;
  }
  return n;
}

BinaryGrid SamplingMask::expand() const
{
  BinaryGrid g(height, width);
  for (Index y = 0; y < height; y++) {
    for (Index x = 0; x < width; x++) {
      g(y, x) = column_flags[x] ? 1 : 0;
    }
  }
  return g;
}

double SamplingMask::af_actual() const
{
  auto const n = sampled_columns();
  return n == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(width) / static_cast<double>(n);
}

SamplingMask SamplingMask::from_grid(BinaryGrid const &g)
{
  SamplingMask m;
  m.height = g.height;
  m.width = g.width;
  m.column_flags.assign(g.width, 0);
  for (Index x = 0; x < g.width; x++) {
    auto const v = g.height > 0 ? (g(0, x) != 0) : false;
    for (Index y = 1; y < g.height; y++) {
      if ((g(y, x) != 0) != v) { throw FormatError("mask varies along column " + std::to_string(x)); }
    }
    m.column_flags[x] = v;
  }
  m.af_nominal = m.af_actual();
  return m;
}

SamplingMask SamplingMask::full(Index height, Index width)
{
  SamplingMask m;
  m.height = height;
  m.width = width;
  m.column_flags.assign(width, 1);
  m.af_nominal = 1.0;
  m.center_columns = width;
  return m;
}

SamplingMask SamplingMask::empty(Index height, Index width)
{
  SamplingMask m;
  m.height = height;
  m.width = width;
  m.column_flags.assign(width, 0);
  m.af_nominal = std::numeric_limits<double>::infinity();
  return m;
}

SamplingMask make_mask(Index height, Index width, double af, double center_fraction, std::uint64_t seed)
{
  if (height == 0 || width == 0) { throw ConfigError("make_mask: empty grid"); }
  if (!(af >= 1.0)) { throw ConfigError("make_mask: acceleration factor must be >= 1"); }
  auto const center = static_cast<Index>(std::floor(center_fraction * static_cast<double>(width)));
  if (!(center_fraction * static_cast<double>(width) >= 1.0)) {
    throw ConfigError("make_mask: center_fraction * width must be >= 1");
  }
  auto const budget = static_cast<Index>(std::lround(static_cast<double>(width) / af));
  if (budget < center || center > width) {
    throw ConfigError("make_mask: " + std::to_string(center) + " center columns exceed the budget of " +
                      std::to_string(budget));
  }

  SamplingMask m;
  m.height = height;
  m.width = width;
  m.af_nominal = af;
  m.center_columns = center;
  m.seed = seed;
  m.column_flags.assign(width, 0);
  Index const first = width / 2 - center / 2;
  for (Index j = first; j < first + center; j++) {
    m.column_flags[j] = 1;
  }

  double const c = static_cast<double>(width) / 2.0;
  std::vector<double> weight(width, 0.0);
  for (Index j = 0; j < width; j++) {
    double const d = std::abs(static_cast<double>(j) - c) / c;
    weight[j] = d < 1.0 ? std::pow(1.0 - d, 6) : 0.0;
  }

  Rng rng(seed, Stream::Mask);
  for (Index taken = center; taken < budget; taken++) {
    double total = 0.0;
    for (Index j = 0; j < width; j++) {
      if (!m.column_flags[j]) { total += weight[j]; }
    }
    Index pick = width;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (Index j = 0; j < width; j++) {
        if (m.column_flags[j] || weight[j] <= 0.0) { continue; }
        pick = j;
        r -= weight[j];
        if (r < 0.0) { break; }
      }
    } else {
      std::vector<Index> free;
      for (Index j = 0; j < width; j++) {
        if (!m.column_flags[j]) { free.push_back(j); }
      }
      pick = free[rng.below(free.size())];
    }
    m.column_flags[pick] = 1;
  }
  return m;
}

namespace {

void require_mask_shape(ComplexGrid const &g, SamplingMask const &mask, char const *op)
{
  if (g.height() != mask.height || g.width() != mask.width) {
    throw ContractViolation(std::string(op) + ": mask shape does not match grid");
  }
}

} // namespace

ComplexGrid undersample(ComplexGrid const &image, SamplingMask const &mask)
{
  require_mask_shape(image, mask, "undersample");
  auto k = fft2_centered(image);
  for (Index c = 0; c < k.channels(); c++) {
    for (Index y = 0; y < k.height(); y++) {
      for (Index x = 0; x < k.width(); x++) {
        if (!mask.sampled(y, x)) { k.set(c, y, x, Cx{}); }
      }
    }
  }
  return k;
}

ComplexGrid kdc(ComplexGrid const &k_pred, ComplexGrid const &y_u, SamplingMask const &mask)
{
  if (k_pred.shape() != y_u.shape()) { throw ContractViolation("kdc: shape mismatch"); }
  require_mask_shape(k_pred, mask, "kdc");
  ComplexGrid out = k_pred;
  for (Index c = 0; c < out.channels(); c++) {
    for (Index y = 0; y < out.height(); y++) {
      for (Index x = 0; x < out.width(); x++) {
        if (mask.sampled(y, x)) { out.set(c, y, x, y_u.at(c, y, x)); }
      }
    }
  }
  return out;
}

ComplexGrid idc(ComplexGrid const &img, ComplexGrid const &y_u, SamplingMask const &mask)
{
  return ifft2_centered(kdc(fft2_centered(img), y_u, mask));
}

Var kdc(Var const &k_pred, Var const &y_u, SamplingMask const &mask)
{
  return Node::record(kdc(k_pred.value(), y_u.value(), mask), "kdc", {k_pred, y_u},
                      [k_pred, y_u, mask](ComplexGrid const &g) {
                        // Split the upstream gradient by the mask.
                        ComplexGrid keep = g;
                        ComplexGrid measured(g.shape());
                        for (Index c = 0; c < g.channels(); c++) {
                          for (Index y = 0; y < g.height(); y++) {
                            for (Index x = 0; x < g.width(); x++) {
                              if (mask.sampled(y, x)) {
                                measured.set(c, y, x, g.at(c, y, x));
                                keep.set(c, y, x, Cx{});
                              }
                            }
                          }
                        }
                        accumulate(k_pred, keep);
                        accumulate(y_u, measured);
                      });
}

Var idc(Var const &img, Var const &y_u, SamplingMask const &mask) { return ifft2(kdc(fft2(img), y_u, mask)); }

ComplexGrid add_noise(ComplexGrid const &k, double sigma, std::uint64_t seed)
{
  if (!(sigma >= 0.0)) { throw ContractViolation("add_noise: sigma must be >= 0"); }
  ComplexGrid out = k;
  if (sigma == 0.0) { return out; }
  Rng rng(seed, Stream::Noise);
  for (Index i = 0; i < out.size(); i++) {
    out.re()[i] += sigma * rng.normal();
    out.im()[i] += sigma * rng.normal();
  }
  return out;
}

} // namespace en2
