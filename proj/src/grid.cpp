#include "en2/grid.hpp"

#include "en2/errors.hpp"

#include <algorithm>
#include <cmath>

namespace en2 {

ComplexGrid::ComplexGrid(Index channels, Index height, Index width)
  : ComplexGrid(Shape{channels, height, width})
{
}

ComplexGrid::ComplexGrid(Shape shape)
  : shape_{shape}
  , re_(shape.size(), 0.0)
  , im_(shape.size(), 0.0)
{
}

ComplexGrid ComplexGrid::scalar(double re, double im)
{
  ComplexGrid g(1, 1, 1);
  g.re_[0] = re;
  g.im_[0] = im;
  return g;
}

ComplexGrid ComplexGrid::channel(Index c) const
{
  if (c >= channels()) { throw ContractViolation("channel index out of range"); }
  ComplexGrid out(1, height(), width());
  auto const n = plane_size();
  for (Index i = 0; i < n; i++) {
    out.re_[i] = re_[c * n + i];
    out.im_[i] = im_[c * n + i];
  }
  return out;
}

void ComplexGrid::fill(Cx v)
{
  std::fill(re_.begin(), re_.end(), v.real());
  std::fill(im_.begin(), im_.end(), v.imag());
}

bool ComplexGrid::all_finite() const
{
  for (Index i = 0; i < re_.size(); i++) {
    if (!std::isfinite(re_[i]) || !std::isfinite(im_[i])) { return false; }
  }
  return true;
}

Index count_nonzero(BinaryGrid const &m)
{
  Index n = 0;
  for (auto v : m.data) {
    n += v != 0;
  }
  return n;
}

RealGrid magnitude(ComplexGrid const &g, Index channel)
{
  if (channel >= g.channels()) { throw ContractViolation("magnitude: channel index out of range"); }
  RealGrid out(g.height(), g.width());
  auto const base = channel * g.plane_size();
  for (Index i = 0; i < g.plane_size(); i++) {
    out.data[i] = std::hypot(g.re()[base + i], g.im()[base + i]);
  }
  return out;
}

double max_abs_diff(ComplexGrid const &a, ComplexGrid const &b)
{
  if (a.shape() != b.shape()) { throw ContractViolation("max_abs_diff: shape mismatch"); }
  double m = 0.0;
  for (Index i = 0; i < a.size(); i++) {
    m = std::max(m, std::abs(a.at(i) - b.at(i)));
  }
  return m;
}

double norm2(ComplexGrid const &g)
{
  double s = 0.0;
  for (Index i = 0; i < g.size(); i++) {
    s += g.re()[i] * g.re()[i] + g.im()[i] * g.im()[i];
  }
  return std::sqrt(s);
}

Cx inner(ComplexGrid const &a, ComplexGrid const &b)
{
  if (a.shape() != b.shape()) { throw ContractViolation("inner: shape mismatch"); }
  Cx s{0.0, 0.0};
  for (Index i = 0; i < a.size(); i++) {
    s += std::conj(a.at(i)) * b.at(i);
  }
  return s;
}

} // namespace en2
