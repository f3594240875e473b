#pragma once

#include "autodiff.hpp"
#include "kspace.hpp"
#include "random.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace en2 {

enum class Padding
{
  SameZero,
  None,
};

enum class Init
{
  Zero,
  Glorot,
};

/*
 * Complex convolution W = A + iB. weights holds (out * in) kernels of
 * kernel_height x kernel_width, kernel (o, c) at channel o * in + c, with A in
 * the real plane and B in the imaginary plane. Like most deep-learning
 * frameworks this is cross-correlation.
 */
struct ComplexConvParams
{
  Index in_channels = 0;
  Index out_channels = 0;
  Index kernel_height = 0;
  Index kernel_width = 0;
  Index dilation = 1;
  Padding padding = Padding::SameZero;
  Var weights;
  Var bias; // out x 1 x 1

  Index output_height(Index h) const;
  Index output_width(Index w) const;
};

/// Glorot-style init on the real-equivalent fan: re and im each
/// U(-l, l), l = sqrt(6 / (2 (in + out) kh kw)). Biases start at zero.
ComplexConvParams make_conv(std::string const &name, Index in, Index out, Index kh, Index kw, Init init, Rng &rng,
                            Index dilation = 1, Padding padding = Padding::SameZero);

ComplexGrid complex_conv2d(ComplexGrid const &input, ComplexConvParams const &params);
Var complex_conv2d(Var const &input, ComplexConvParams const &params);

enum class En2Mode
{
  Frequency, // F-EN2: 1 x N_x kernels along rows
  Phase,     // P-EN2: N_y x 1 kernels along columns
};

/*
 * EN2 layer. Each of num_kernels complex kernels spans a full k-space row
 * (Frequency) or column (Phase) and maps it to one value; the kernel outputs
 * are laid side by side, so with num_kernels = N_x (N_y) the layer keeps the
 * input shape. kernels is 1 x num_kernels x kernel_length, biases 1 x 1 x num_kernels.
 *   Frequency: out(i, j) = sum_k K(i, k) E_j(k) + b_j
 *   Phase:     out(i, j) = sum_k E_i(k) K(k, j) + b_i
 * No padding.
 */
struct En2LayerParams
{
  En2Mode mode = En2Mode::Frequency;
  Index num_kernels = 0;
  Index kernel_length = 0;
  Var kernels;
  Var biases;
};

En2LayerParams make_en2(std::string const &name, En2Mode mode, Index num_kernels, Index kernel_length, Init init,
                        Rng &rng);

ComplexGrid en2_forward(ComplexGrid const &k, En2LayerParams const &params);
Var en2_forward(Var const &k, En2LayerParams const &params);

enum class Activation
{
  Tanh,
  Relu,
};

// Applies the scalar activation to real and imaginary planes independently.
ComplexGrid split_activation(ComplexGrid const &t, Activation kind);
Var split_activation(Var const &t, Activation kind);

struct FmuParams
{
  ComplexConvParams residual_conv; // 1x1, Y -> Y
  ComplexConvParams dense_conv;    // 3x3, Y -> V, same-zero padding
};

FmuParams make_fmu(std::string const &name, Index channels, Index growth, Init init, Rng &rng);

// (relu(conv1x1(s)) + s) || relu(conv3x3(s)); Y + V channels out.
Var fmu_forward(Var const &s_in, FmuParams const &params);

// k-space stage layers are interchangeable: EN2 or an ordinary complex conv.
using KspaceLayer = std::variant<En2LayerParams, ComplexConvParams>;

Var kspace_layer_forward(Var const &k, KspaceLayer const &layer);

// Position (1-based) after which the E-block applies Tanh: ceil(Q / 2).
Index tanh_position(Index layers);

/// Q layers with one split Tanh after layer ceil(Q/2), then KDC against y_u.
Var e_block_forward(Var const &k_in, Var const &y_u, SamplingMask const &mask, std::span<KspaceLayer const> layers);

struct FBlockParams
{
  std::vector<FmuParams> fmus;
  ComplexConvParams final_conv; // 3x3, 1 + R V -> 1
};

/// idc(final_conv(FMU_R(... FMU_1(img))) + img)
Var f_block_forward(Var const &img, Var const &y_u, SamplingMask const &mask, FBlockParams const &params);

} // namespace en2
