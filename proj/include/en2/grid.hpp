#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace en2 {

using Index = std::size_t;
using Cx = std::complex<double>;

struct Shape
{
  Index channels = 0;
  Index height = 0;
  Index width = 0;

  Index size() const { return channels * height * width; }
  bool operator==(Shape const &) const = default;
};

/// Complex-valued (channels, height, width) array stored as separate real and
/// imaginary planes, row-major within a channel, channels outermost.
class ComplexGrid
{
public:
  ComplexGrid() = default;
  ComplexGrid(Index channels, Index height, Index width);
  explicit ComplexGrid(Shape shape);

  static ComplexGrid scalar(double re, double im = 0.0);

  Shape shape() const { return shape_; }
  Index channels() const { return shape_.channels; }
  Index height() const { return shape_.height; }
  Index width() const { return shape_.width; }
  Index size() const { return re_.size(); }
  Index plane_size() const { return shape_.height * shape_.width; }

  Index offset(Index c, Index y, Index x) const { return (c * shape_.height + y) * shape_.width + x; }

  std::span<double> re() { return re_; }
  std::span<double> im() { return im_; }
  std::span<double const> re() const { return re_; }
  std::span<double const> im() const { return im_; }

  double &re(Index c, Index y, Index x) { return re_[offset(c, y, x)]; }
  double &im(Index c, Index y, Index x) { return im_[offset(c, y, x)]; }
  double re(Index c, Index y, Index x) const { return re_[offset(c, y, x)]; }
  double im(Index c, Index y, Index x) const { return im_[offset(c, y, x)]; }

  Cx at(Index i) const { return {re_[i], im_[i]}; }
  Cx at(Index c, Index y, Index x) const { return at(offset(c, y, x)); }
  void set(Index i, Cx v)
  {
    re_[i] = v.real();
    im_[i] = v.imag();
  }
  void set(Index c, Index y, Index x, Cx v) { set(offset(c, y, x), v); }

  ComplexGrid channel(Index c) const;
  void fill(Cx v);
  bool all_finite() const;

  bool operator==(ComplexGrid const &) const = default;

private:
  Shape shape_;
  std::vector<double> re_;
  std::vector<double> im_;
};

/// Single-plane 2D array. Used for magnitudes (double) and binary masks (u8).
template <typename T>
struct Grid2
{
  Index height = 0;
  Index width = 0;
  std::vector<T> data;

  Grid2() = default;
  Grid2(Index h, Index w, T v = T{})
    : height{h}
    , width{w}
    , data(h * w, v)
  {
  }

  Index size() const { return data.size(); }
  T &operator()(Index y, Index x) { return data[y * width + x]; }
  T operator()(Index y, Index x) const { return data[y * width + x]; }
  bool same_shape(Grid2 const &o) const { return height == o.height && width == o.width; }
  bool operator==(Grid2 const &) const = default;
};

using RealGrid = Grid2<double>;
using BinaryGrid = Grid2<std::uint8_t>;

Index count_nonzero(BinaryGrid const &m);

/// |z| of one channel.
RealGrid magnitude(ComplexGrid const &g, Index channel = 0);

double max_abs_diff(ComplexGrid const &a, ComplexGrid const &b);
double norm2(ComplexGrid const &g);
Cx inner(ComplexGrid const &a, ComplexGrid const &b); // sum conj(a)*b

} // namespace en2
