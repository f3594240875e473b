#pragma once

#include "grid.hpp"

#include <limits>
#include <span>
#include <vector>

namespace en2 {

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over mask pixels, peak fixed at 1. Returns
/// kPsnrIdentical (+inf) when the masked MSE is zero.
double psnr(RealGrid const &ref, RealGrid const &rec, BinaryGrid const &mask);

/*
 * Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03, range 1). Near
 * the border the window is truncated and renormalised. The per-pixel map is
 * averaged over mask pixels.
 */
double ssim(RealGrid const &ref, RealGrid const &rec, BinaryGrid const &mask);
RealGrid ssim_map(RealGrid const &ref, RealGrid const &rec);

// (mean_signal - mean_noise) / std_noise * sqrt(2 - pi / 2), population std.
double snr_rician(RealGrid const &mag, BinaryGrid const &signal_mask, BinaryGrid const &noise_mask);

/*
 * 1D Lloyd K-means on the magnitudes inside thoracic_mask. Centroids start at
 * the (2k - 1) / 2K quantiles (linear interpolation on sorted values); ties
 * go to the lower centroid; at most 100 iterations. Pixels of the
 * lowest-centroid cluster form the defect mask. An intensity range below
 * 1e-6 gives an empty mask.
 */
BinaryGrid kmeans_defect(RealGrid const &mag, BinaryGrid const &thoracic_mask, Index clusters);

double vdp(BinaryGrid const &defect, BinaryGrid const &thoracic);

// 2|a n b| / (|a| + |b|), 1 when both are empty.
double dice(BinaryGrid const &a, BinaryGrid const &b);

struct SnrSample
{
  RealGrid magnitude;
  BinaryGrid signal_mask;
  BinaryGrid noise_mask;
};

inline constexpr double kDefaultSnrThreshold = 6.6;

// Keeps samples with snr_rician >= threshold, in order.
std::vector<SnrSample> snr_filter(std::span<SnrSample const> samples, double threshold = kDefaultSnrThreshold);

double pearson(std::span<double const> a, std::span<double const> b);

BinaryGrid complement(BinaryGrid const &m);

} // namespace en2
