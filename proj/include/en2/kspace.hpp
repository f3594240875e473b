#pragma once

#include "autodiff.hpp"

#include <cstdint>
#include <vector>

namespace en2 {

/// Cartesian mask that samples whole phase-encoding columns.
struct SamplingMask
{
  Index height = 0;
  Index width = 0;
  std::vector<std::uint8_t> column_flags; // length width, 1 = sampled
  double af_nominal = 1.0;
  Index center_columns = 0;
  std::uint64_t seed = 0;

  Index sampled_columns() const;
  bool sampled(Index /*y*/, Index x) const { return column_flags[x] != 0; }
  BinaryGrid expand() const;
  // Achieved acceleration width / sampled_columns.
  double af_actual() const;

  /// Rebuilds a column mask from a full grid; rejects grids that vary down a column.
  static SamplingMask from_grid(BinaryGrid const &g);
  static SamplingMask full(Index height, Index width);
  static SamplingMask empty(Index height, Index width);
};

/*
 * Variable-density column mask. The floor(center_fraction * width) columns
 * around floor(width / 2) are always taken; the rest of the round(width / af)
 * budget is drawn without replacement with weight (1 - |j - c| / c)^6,
 * c = width / 2. Columns with zero weight are only used once all weighted
 * columns are exhausted (uniformly among them).
 */
SamplingMask make_mask(Index height, Index width, double af, double center_fraction, std::uint64_t seed);

// y_u = u o fft2(x); unsampled entries are exactly zero.
ComplexGrid undersample(ComplexGrid const &image, SamplingMask const &mask);

// Hard data consistency: measured values replace predictions at sampled entries.
ComplexGrid kdc(ComplexGrid const &k_pred, ComplexGrid const &y_u, SamplingMask const &mask);
ComplexGrid idc(ComplexGrid const &img, ComplexGrid const &y_u, SamplingMask const &mask);

Var kdc(Var const &k_pred, Var const &y_u, SamplingMask const &mask);
Var idc(Var const &img, Var const &y_u, SamplingMask const &mask);

// Adds independent N(0, sigma^2) to real and imaginary planes.
ComplexGrid add_noise(ComplexGrid const &k, double sigma, std::uint64_t seed);

} // namespace en2
