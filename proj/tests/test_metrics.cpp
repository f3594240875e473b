#include "en2/errors.hpp"
#include "en2/metrics.hpp"
#include "en2/phantom.hpp"
#include "en2/random.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace en2;

namespace {

RealGrid constant(Index h, Index w, double v) { return RealGrid(h, w, v); }

BinaryGrid ones(Index h, Index w) { return BinaryGrid(h, w, 1); }

RealGrid random_real(Rng &rng, Index h, Index w)
{
  RealGrid g(h, w);
  for (auto &v : g.data) {
    v = rng.uniform();
  }
  return g;
}

// Direct 2D truncated Gaussian window per pixel, renormalised over in-bounds taps.
RealGrid ssim_map_oracle(RealGrid const &a, RealGrid const &b)
{
  double const c1 = 1e-4;
  double const c2 = 9e-4;
  auto const H = static_cast<long>(a.height);
  auto const W = static_cast<long>(a.width);
  RealGrid out(a.height, a.width);
  for (long y = 0; y < H; y++) {
    for (long x = 0; x < W; x++) {
      double wsum = 0, ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
      for (long dy = -5; dy <= 5; dy++) {
        for (long dx = -5; dx <= 5; dx++) {
          long const yy = y + dy;
          long const xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= H || xx >= W) { continue; }
          double const w = std::exp(-static_cast<double>(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
          double const va = a(static_cast<Index>(yy), static_cast<Index>(xx));
          double const vb = b(static_cast<Index>(yy), static_cast<Index>(xx));
          wsum += w;
          ma += w * va;
          mb += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      ma /= wsum;
      mb /= wsum;
      double const va = aa / wsum - ma * ma;
      double const vb = bb / wsum - mb * mb;
      double const cov = ab / wsum - ma * mb;
      out(static_cast<Index>(y), static_cast<Index>(x)) =
        ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return out;
}

} // namespace

TEST(Psnr, IdenticalGivesSentinel)
{
  Rng rng(1);
  auto const a = random_real(rng, 8, 8);
  EXPECT_EQ(psnr(a, a, ones(8, 8)), kPsnrIdentical);
  EXPECT_TRUE(std::isinf(kPsnrIdentical));
}

TEST(Psnr, ClosedForms)
{
  EXPECT_DOUBLE_EQ(psnr(constant(4, 4, 1.0), constant(4, 4, 0.0), ones(4, 4)), 0.0);
  EXPECT_NEAR(psnr(constant(4, 4, 0.5), constant(4, 4, 0.6), ones(4, 4)), 20.0, 1e-12);
}

TEST(Psnr, OnlyMaskPixelsCount)
{
  auto ref = constant(4, 4, 0.5);
  auto rec = constant(4, 4, 0.6);
  BinaryGrid mask(4, 4);
  mask(1, 1) = 1;
  rec(0, 0) = 100.0;
  EXPECT_NEAR(psnr(ref, rec, mask), 20.0, 1e-12);
  EXPECT_THROW(psnr(ref, rec, BinaryGrid(4, 4)), ContractViolation);
  EXPECT_THROW(psnr(ref, constant(4, 5, 0.0), ones(4, 4)), ContractViolation);
}

TEST(Psnr, MonotoneInError)
{
  auto const ref = constant(6, 6, 0.5);
  double prev = kPsnrIdentical;
  for (double e : {0.01, 0.02, 0.05, 0.1, 0.3}) {
    double const p = psnr(ref, constant(6, 6, 0.5 + e), ones(6, 6));
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Ssim, IdenticalIsOne)
{
  Rng rng(2);
  auto const a = random_real(rng, 16, 16);
  EXPECT_NEAR(ssim(a, a, ones(16, 16)), 1.0, 1e-12);
}

TEST(Ssim, ConstantGridsClosedForm)
{
  double const c1 = 1e-4;
  EXPECT_NEAR(ssim(constant(12, 12, 1.0), constant(12, 12, 0.0), ones(12, 12)), c1 / (1.0 + c1), 1e-15);
  EXPECT_NEAR(c1 / (1.0 + c1), 9.999e-5, 1e-8);
}

TEST(Ssim, SymmetricAndBounded)
{
  Rng rng(3);
  for (int t = 0; t < 5; t++) {
    auto const a = random_real(rng, 14, 13);
    auto const b = random_real(rng, 14, 13);
    double const s = ssim(a, b, ones(14, 13));
    EXPECT_NEAR(s, ssim(b, a, ones(14, 13)), 1e-12);
    EXPECT_LE(std::abs(s), 1.0);
  }
}

TEST(Ssim, MapMatchesDirectWindowOracle)
{
  Rng rng(4);
  auto const a = random_real(rng, 20, 17);
  auto b = a;
  for (auto &v : b.data) {
    v = std::clamp(v + 0.2 * (rng.uniform() - 0.5), 0.0, 1.0);
  }
  auto const got = ssim_map(a, b);
  auto const want = ssim_map_oracle(a, b);
  for (Index i = 0; i < got.size(); i++) {
    EXPECT_NEAR(got.data[i], want.data[i], 1e-12);
  }
  BinaryGrid mask(20, 17);
  double s = 0.0;
  Index n = 0;
  for (Index y = 4; y < 15; y++) {
    for (Index x = 3; x < 9; x++) {
      mask(y, x) = 1;
      s += want(y, x);
      n++;
    }
  }
  EXPECT_NEAR(ssim(a, b, mask), s / static_cast<double>(n), 1e-12);
}

TEST(Snr, HandValue)
{
  RealGrid mag(2, 4);
  BinaryGrid signal(2, 4);
  BinaryGrid noise(2, 4);
  for (Index x = 0; x < 4; x++) {
    mag(0, x) = x % 2 ? 9.0 : 11.0;
    signal(0, x) = 1;
    mag(1, x) = x % 2 ? 1.0 : 3.0;
    noise(1, x) = 1;
  }
  double const expected = 8.0 * std::sqrt(2.0 - std::numbers::pi / 2.0);
  EXPECT_NEAR(snr_rician(mag, signal, noise), expected, 1e-12);
  EXPECT_NEAR(snr_rician(mag, signal, noise), 5.2412, 1e-3);
}

TEST(Snr, EqualMeansGiveZeroAndScaleInvariance)
{
  Rng rng(5);
  RealGrid mag(8, 8);
  BinaryGrid signal(8, 8);
  BinaryGrid noise(8, 8);
  for (Index i = 0; i < 64; i++) {
    mag.data[i] = rng.uniform(1.0, 2.0);
    (i % 2 ? signal : noise).data[i] = 1;
  }
  double const s = snr_rician(mag, signal, noise);
  auto scaled = mag;
  for (auto &v : scaled.data) {
    v *= 3.7;
  }
  EXPECT_NEAR(snr_rician(scaled, signal, noise), s, 1e-12);
  EXPECT_NEAR(snr_rician(mag, signal, signal), 0.0, 1e-12);
}

TEST(Snr, DegenerateNoise)
{
  auto const mag = constant(4, 4, 1.0);
  BinaryGrid signal(4, 4);
  signal(0, 0) = 1;
  EXPECT_THROW(snr_rician(mag, signal, complement(signal)), DegenerateInput);
  EXPECT_THROW(snr_rician(mag, signal, BinaryGrid(4, 4)), ContractViolation);
}

TEST(Snr, FilterKeepsSamplesAtOrAboveThreshold)
{
  std::vector<SnrSample> samples;
  std::vector<double> snrs;
  for (double signal_mean : {4.0, 8.0, 13.0, 16.0, 20.0}) {
    SnrSample s{RealGrid(2, 4), BinaryGrid(2, 4), BinaryGrid(2, 4)};
    for (Index x = 0; x < 4; x++) {
      s.magnitude(0, x) = signal_mean;
      s.signal_mask(0, x) = 1;
      s.magnitude(1, x) = x % 2 ? 1.0 : 3.0;
      s.noise_mask(1, x) = 1;
    }
    snrs.push_back((signal_mean - 2.0) * std::sqrt(2.0 - std::numbers::pi / 2.0));
    samples.push_back(s);
  }
  auto const kept = snr_filter(samples);
  Index expected = 0;
  for (double v : snrs) {
    expected += v >= kDefaultSnrThreshold;
  }
  ASSERT_EQ(kept.size(), expected);
  EXPECT_EQ(expected, 3u);
  EXPECT_EQ(kept.front().magnitude(0, 0), 13.0);
  EXPECT_EQ(snr_filter(samples, 0.0).size(), samples.size());
  EXPECT_TRUE(snr_filter(samples, std::numeric_limits<double>::infinity()).empty());
}

TEST(Kmeans, SplitsTwoWellSeparatedGroups)
{
  Rng rng(6);
  RealGrid mag(10, 10);
  BinaryGrid truth(10, 10);
  for (Index i = 0; i < 100; i++) {
    bool const low = rng.uniform() < 0.3;
    mag.data[i] = (low ? 0.1 : 0.9) + 0.02 * (rng.uniform() - 0.5);
    truth.data[i] = low;
  }
  EXPECT_EQ(kmeans_defect(mag, ones(10, 10), 2), truth);
}

TEST(Kmeans, ConstantIntensitiesGiveEmptyMask)
{
  EXPECT_EQ(count_nonzero(kmeans_defect(constant(6, 6, 0.4), ones(6, 6), 4)), 0u);
}

TEST(Kmeans, IgnoresPixelsOutsideMaskAndOrder)
{
  Rng rng(7);
  auto mag = random_real(rng, 12, 12);
  BinaryGrid mask(12, 12);
  for (Index y = 2; y < 10; y++) {
    for (Index x = 2; x < 10; x++) {
      mask(y, x) = 1;
    }
  }
  auto const a = kmeans_defect(mag, mask, 3);
  for (Index i = 0; i < a.size(); i++) {
    if (!mask.data[i]) { EXPECT_EQ(a.data[i], 0); }
  }
  // Transposing the image permutes pixels; the segmentation permutes with it.
  RealGrid t(12, 12);
  BinaryGrid tm(12, 12);
  for (Index y = 0; y < 12; y++) {
    for (Index x = 0; x < 12; x++) {
      t(x, y) = mag(y, x);
      tm(x, y) = mask(y, x);
    }
  }
  auto const b = kmeans_defect(t, tm, 3);
  for (Index y = 0; y < 12; y++) {
    for (Index x = 0; x < 12; x++) {
      EXPECT_EQ(b(x, y), a(y, x));
    }
  }
  EXPECT_EQ(kmeans_defect(mag, mask, 3), a);
  EXPECT_THROW(kmeans_defect(mag, mask, 1), ContractViolation);
  EXPECT_THROW(kmeans_defect(mag, BinaryGrid(12, 12), 3), ContractViolation);
}

TEST(Kmeans, RecoversPlantedPhantomDefects)
{
  PhantomOptions opts;
  opts.min_defects = 1;
  opts.max_defects = 4;
  opts.defect_intensity = 0.1;
  for (std::uint64_t seed = 0; seed < 10; seed++) {
    auto const p = gen_phantom(seed, 96, 96, opts);
    ASSERT_GT(count_nonzero(p.defect_mask), 0u);
    auto const est = kmeans_defect(magnitude(p.image), p.thoracic_mask, 4);
    EXPECT_GE(dice(est, p.defect_mask), 0.9) << "seed " << seed;
  }
}

TEST(Vdp, Arithmetic)
{
  BinaryGrid thoracic(10, 10, 1);
  BinaryGrid defect(10, 10);
  EXPECT_EQ(vdp(defect, thoracic), 0.0);
  EXPECT_EQ(vdp(thoracic, thoracic), 100.0);
  for (Index i = 0; i < 25; i++) {
    defect.data[i] = 1;
  }
  EXPECT_DOUBLE_EQ(vdp(defect, thoracic), 25.0);
  EXPECT_THROW(vdp(defect, BinaryGrid(10, 10)), ContractViolation);
  BinaryGrid partial(10, 10);
  partial.data[50] = 1;
  EXPECT_THROW(vdp(defect, partial), ContractViolation);
}

TEST(Dice, Arithmetic)
{
  BinaryGrid a(4, 4);
  BinaryGrid b(4, 4);
  EXPECT_EQ(dice(a, b), 1.0);
  a.data = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(dice(a, a), 1.0);
  b.data = {0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(dice(a, b), 0.0);
  b.data = {0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(dice(a, b), 0.5);
  EXPECT_EQ(dice(a, b), dice(b, a));
  EXPECT_THROW(dice(a, BinaryGrid(4, 5)), ContractViolation);
}

TEST(Pearson, KnownSeries)
{
  std::vector<double> const a = {1, 2, 3, 4, 5};
  std::vector<double> const b = {2, 4, 6, 8, 10};
  std::vector<double> const c = {5, 4, 3, 2, 1};
  EXPECT_NEAR(pearson(a, b), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, c), -1.0, 1e-15);
  std::vector<double> const d = {1, 0, 1, 0, 1};
  // cov = 0 for this symmetric pattern
  EXPECT_NEAR(pearson(a, d), 0.0, 1e-15);
  EXPECT_THROW(pearson(std::vector<double>{1.0}, std::vector<double>{1.0}), ContractViolation);
}
