#pragma once

#include "autodiff.hpp"

#include <memory>
#include <span>
#include <vector>

namespace en2 {

/// Unnormalised 1D DFT of fixed length. Powers of two use iterative radix-2;
/// other lengths go through Bluestein's chirp-z with a radix-2 convolution.
class Fft1d
{
public:
  explicit Fft1d(Index n);

  Index size() const { return n_; }
  void forward(std::span<Cx> data) const;
  void inverse(std::span<Cx> data) const; // unnormalised, conjugate sign

private:
  void radix2(std::span<Cx> data, bool inverse) const;
  void bluestein(std::span<Cx> data) const;

  Index n_;
  bool pow2_;
  std::vector<Cx> twiddles_;          // radix-2, length n/2
  std::vector<Index> bitrev_;
  std::unique_ptr<Fft1d> inner_;      // Bluestein convolution length
  std::vector<Cx> chirp_;             // exp(-i pi k^2 / n)
  std::vector<Cx> chirp_filter_;      // FFT of the conjugate chirp
};

/// Shared per-length plan; safe to call from several threads.
Fft1d const &fft_plan(Index n);

/*
 * Centered unitary 2D DFT applied per channel: ifftshift on input, DFT,
 * fftshift on output, scaled by 1/sqrt(H*W). Zero frequency lands at
 * (floor(H/2), floor(W/2)).
 */
ComplexGrid fft2_centered(ComplexGrid const &img);
ComplexGrid ifft2_centered(ComplexGrid const &k);

// Differentiable versions. The adjoint of a unitary transform is its inverse.
Var fft2(Var const &img);
Var ifft2(Var const &k);

} // namespace en2
