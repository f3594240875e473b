#pragma once

#include "grid.hpp"
#include "kspace.hpp"

#include <cstdint>
#include <vector>

namespace en2 {

struct PhantomOptions
{
  Index min_defects = 0;
  Index max_defects = 4;
  // Defect magnitude as a fraction of the surrounding lung texture.
  double defect_intensity = 0.1;
};

struct PhantomSample
{
  ComplexGrid image; // 1 x H x W, max magnitude 1
  BinaryGrid lung_mask;
  BinaryGrid thoracic_mask;
  BinaryGrid defect_mask;
  std::uint64_t seed = 0;
};

/*
 * Lung-like complex phantom: two elliptical lungs filled with band-limited
 * texture in [0.6, 0.9], up to max_defects disc-shaped low-signal defects,
 * and a smooth phase (quadratic polynomial plus low-frequency ripple). The
 * thoracic mask is the lung cavity, so defect <= lung <= thoracic. The
 * magnitude is normalised to a maximum of 1.
 */
PhantomSample gen_phantom(std::uint64_t seed, Index height, Index width, PhantomOptions const &opts = {});

// Zero padding centred in the target; an odd surplus goes to the bottom/right.
ComplexGrid pad_to(ComplexGrid const &img, Index height, Index width);
BinaryGrid pad_to(BinaryGrid const &mask, Index height, Index width);
ComplexGrid crop_center(ComplexGrid const &img, Index height, Index width);

struct DatasetConfig
{
  Index height = 96;
  Index width = 96;
  double af = 4.0;
  double center_fraction = 0.08;
  double noise_sigma = 0.0;
  PhantomOptions phantom;
};

struct DatasetSample
{
  Index id = 0;
  std::uint64_t phantom_seed = 0;
  std::uint64_t mask_seed = 0;
  PhantomSample phantom;
  SamplingMask mask;
  ComplexGrid y_u;
};

/// Sample i uses phantom and mask seeds derived from (seed, i); with
/// noise_sigma > 0 complex Gaussian noise is added to the full k-space
/// before masking.
std::vector<DatasetSample> make_dataset(Index n, std::uint64_t seed, DatasetConfig const &cfg);

} // namespace en2
