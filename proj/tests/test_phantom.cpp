#include "en2/errors.hpp"
#include "en2/fourier.hpp"
#include "en2/phantom.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace en2;

TEST(Phantom, DeterministicPerSeed)
{
  auto const a = gen_phantom(11, 48, 40);
  auto const b = gen_phantom(11, 48, 40);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.lung_mask, b.lung_mask);
  EXPECT_EQ(a.defect_mask, b.defect_mask);
  EXPECT_NE(gen_phantom(12, 48, 40).image, a.image);
}

TEST(Phantom, PeakMagnitudeIsOne)
{
  for (std::uint64_t seed = 0; seed < 20; seed++) {
    auto const mag = magnitude(gen_phantom(seed, 32, 32).image);
    double peak = 0.0;
    for (double v : mag.data) {
      peak = std::max(peak, v);
    }
    EXPECT_NEAR(peak, 1.0, 1e-12) << seed;
  }
}

TEST(Phantom, MasksAreNested)
{
  for (std::uint64_t seed = 0; seed < 20; seed++) {
    auto const p = gen_phantom(seed, 64, 64);
    EXPECT_GT(count_nonzero(p.lung_mask), 0u);
    for (Index i = 0; i < p.lung_mask.size(); i++) {
      if (p.defect_mask.data[i]) { EXPECT_TRUE(p.lung_mask.data[i]); }
      if (p.lung_mask.data[i]) { EXPECT_TRUE(p.thoracic_mask.data[i]); }
      if (!p.lung_mask.data[i]) { EXPECT_EQ(p.image.at(i), Cx{}); }
    }
  }
}

TEST(Phantom, DefectsAreDarkerThanLung)
{
  PhantomOptions opts;
  opts.min_defects = 1;
  for (std::uint64_t seed = 0; seed < 20; seed++) {
    auto const p = gen_phantom(seed, 64, 64, opts);
    auto const mag = magnitude(p.image);
    double in = 0.0;
    double out = 0.0;
    Index ni = 0;
    Index no = 0;
    for (Index i = 0; i < mag.size(); i++) {
      if (!p.lung_mask.data[i]) { continue; }
      if (p.defect_mask.data[i]) {
        in += mag.data[i];
        ni++;
      } else {
        out += mag.data[i];
        no++;
      }
    }
    ASSERT_GT(ni, 0u);
    EXPECT_LT(in / static_cast<double>(ni), out / static_cast<double>(no));
  }
}

TEST(Phantom, LungHistogramHasSeparatedModes)
{
  PhantomOptions opts;
  opts.min_defects = 2;
  for (std::uint64_t seed = 0; seed < 10; seed++) {
    auto const p = gen_phantom(seed, 64, 64, opts);
    auto const mag = magnitude(p.image);
    Index low = 0;
    Index high = 0;
    Index between = 0;
    for (Index i = 0; i < mag.size(); i++) {
      if (!p.lung_mask.data[i]) { continue; }
      auto const v = mag.data[i];
      low += v < 0.2;
      high += v > 0.5;
      between += v >= 0.2 && v <= 0.5;
    }
    EXPECT_GT(low, 0u);
    EXPECT_GT(high, 0u);
    EXPECT_EQ(between, 0u);
  }
}

TEST(Phantom, NoDefectsRequested)
{
  PhantomOptions opts;
  opts.min_defects = 0;
  opts.max_defects = 0;
  for (std::uint64_t seed = 0; seed < 5; seed++) {
    EXPECT_EQ(count_nonzero(gen_phantom(seed, 32, 32, opts).defect_mask), 0u);
  }
}

TEST(Phantom, PhaseIsSmooth)
{
  auto const p = gen_phantom(3, 64, 64);
  for (Index y = 0; y < 64; y++) {
    for (Index x = 0; x + 1 < 64; x++) {
      if (!p.lung_mask(y, x) || !p.lung_mask(y, x + 1)) { continue; }
      double d = std::arg(p.image.at(0, y, x + 1)) - std::arg(p.image.at(0, y, x));
      d = std::remainder(d, 2.0 * 3.141592653589793);
      EXPECT_LT(std::abs(d), 0.3);
    }
  }
}

TEST(Phantom, RejectsSmallOrInvalid)
{
  EXPECT_THROW(gen_phantom(0, 15, 32), ConfigError);
  EXPECT_THROW(gen_phantom(0, 32, 8), ConfigError);
  PhantomOptions bad;
  bad.min_defects = 3;
  bad.max_defects = 2;
  EXPECT_THROW(gen_phantom(0, 32, 32, bad), ConfigError);
}

TEST(Pad, RectangularToSquare)
{
  auto const img = gen_phantom(1, 96, 84).image;
  auto const padded = pad_to(img, 96, 96);
  ASSERT_EQ(padded.shape(), (Shape{1, 96, 96}));
  for (Index y = 0; y < 96; y++) {
    for (Index x = 0; x < 6; x++) {
      EXPECT_EQ(padded.at(0, y, x), Cx{});
      EXPECT_EQ(padded.at(0, y, 90 + x), Cx{});
    }
    for (Index x = 0; x < 84; x++) {
      EXPECT_EQ(padded.at(0, y, x + 6), img.at(0, y, x));
    }
  }
  EXPECT_EQ(crop_center(padded, 96, 84), img);
  EXPECT_EQ(pad_to(img, 96, 84), img);
}

TEST(Pad, OddSurplusGoesBottomRight)
{
  BinaryGrid m(2, 2, 1);
  auto const p = pad_to(m, 5, 3);
  EXPECT_EQ(count_nonzero(p), 4u);
  EXPECT_EQ(p(1, 0), 1);
  EXPECT_EQ(p(2, 1), 1);
  EXPECT_EQ(p(4, 2), 0);
  EXPECT_EQ(p(0, 0), 0);
  EXPECT_THROW(pad_to(m, 1, 3), ContractViolation);
  EXPECT_THROW(pad_to(ComplexGrid(1, 4, 4), 3, 4), ContractViolation);
}

TEST(Dataset, FullSamplingReproducesImage)
{
  DatasetConfig cfg;
  cfg.height = 32;
  cfg.width = 32;
  cfg.af = 1.0;
  auto const d = make_dataset(1, 5, cfg);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_LE(max_abs_diff(ifft2_centered(d[0].y_u), d[0].phantom.image), 1e-10);
}

TEST(Dataset, ExactColumnCountAtAf4)
{
  DatasetConfig cfg;
  cfg.height = 32;
  cfg.width = 40;
  auto const d = make_dataset(50, 9, cfg);
  for (auto const &s : d) {
    Index nonzero = 0;
    for (Index x = 0; x < 40; x++) {
      bool any = false;
      for (Index y = 0; y < 32; y++) {
        any = any || s.y_u.at(0, y, x) != Cx{};
      }
      nonzero += any;
    }
    EXPECT_EQ(nonzero, 10u);
  }
}

TEST(Dataset, DisjointSeedsShareNoSamples)
{
  DatasetConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  auto const a = make_dataset(20, 1, cfg);
  auto const b = make_dataset(20, 2, cfg);
  std::set<std::uint64_t> seeds;
  for (auto const &s : a) {
    seeds.insert(s.phantom_seed);
  }
  for (auto const &s : b) {
    EXPECT_EQ(seeds.count(s.phantom_seed), 0u);
    for (auto const &t : a) {
      EXPECT_NE(s.phantom.image, t.phantom.image);
    }
  }
}

TEST(Dataset, PureFunctionOfSeedAndConfig)
{
  DatasetConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.noise_sigma = 0.01;
  auto const a = make_dataset(4, 3, cfg);
  auto const b = make_dataset(4, 3, cfg);
  for (Index i = 0; i < 4; i++) {
    EXPECT_EQ(a[i].y_u, b[i].y_u);
    EXPECT_EQ(a[i].mask.column_flags, b[i].mask.column_flags);
    EXPECT_EQ(a[i].id, i);
  }
  EXPECT_THROW(make_dataset(0, 3, cfg), ConfigError);
}

TEST(Dataset, NoiseOnlyTouchesSampledColumns)
{
  DatasetConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  auto const clean = make_dataset(2, 4, cfg);
  cfg.noise_sigma = 0.05;
  auto const noisy = make_dataset(2, 4, cfg);
  for (Index i = 0; i < 2; i++) {
    EXPECT_EQ(noisy[i].phantom.image, clean[i].phantom.image);
    for (Index y = 0; y < 16; y++) {
      for (Index x = 0; x < 16; x++) {
        if (clean[i].mask.column_flags[x]) {
          EXPECT_NE(noisy[i].y_u.at(0, y, x), clean[i].y_u.at(0, y, x));
        } else {
          EXPECT_EQ(noisy[i].y_u.at(0, y, x), Cx{});
        }
      }
    }
  }
}
