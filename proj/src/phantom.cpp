#include "en2/phantom.hpp"

#include "en2/errors.hpp"
#include "en2/fourier.hpp"
#include "en2/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace en2 {

namespace {

struct Ripple
{
  double fy, fx, phase, amp;
};

std::vector<Ripple> random_ripples(Rng &rng, Index count, double max_freq)
{
  std::vector<Ripple> r(count);
  for (auto &w : r) {
    w.fy = rng.uniform(-max_freq, max_freq);
    w.fx = rng.uniform(-max_freq, max_freq);
    w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.amp = rng.uniform(0.2, 1.0);
  }
  return r;
}

// Sum of ripples scaled into [-1, 1].
double ripple_field(std::vector<Ripple> const &r, double u, double v)
{
  double s = 0.0;
  double norm = 0.0;
  for (auto const &w : r) {
    s += w.amp * std::cos(2.0 * std::numbers::pi * (w.fy * u + w.fx * v) + w.phase);
    norm += w.amp;
  }
  return norm > 0.0 ? s / norm : 0.0;
}

} // namespace

PhantomSample gen_phantom(std::uint64_t seed, Index height, Index width, PhantomOptions const &opts)
{
  if (height < 16 || width < 16) { throw ConfigError("gen_phantom: height and width must be >= 16"); }
  if (opts.min_defects > opts.max_defects) { throw ConfigError("gen_phantom: empty defect count range"); }
  if (!(opts.defect_intensity >= 0.0 && opts.defect_intensity < 1.0)) {
    throw ConfigError("gen_phantom: defect_intensity must be in [0, 1)");
  }

  Rng rng(seed, Stream::Phantom);
  auto const H = static_cast<double>(height);
  auto const W = static_cast<double>(width);

  PhantomSample s;
  s.seed = seed;
  s.lung_mask = BinaryGrid(height, width);
  s.defect_mask = BinaryGrid(height, width);

  // Lungs: two ellipses either side of the midline, normalised coordinates.
  double const cy = 0.5 + rng.uniform(-0.03, 0.03);
  double const gap = rng.uniform(0.20, 0.24);
  struct Ellipse
  {
    double cy, cx, ry, rx;
  };
  Ellipse const lungs[2] = {
    {cy + rng.uniform(-0.02, 0.02), 0.5 - gap, rng.uniform(0.30, 0.36), rng.uniform(0.15, 0.18)},
    {cy + rng.uniform(-0.02, 0.02), 0.5 + gap, rng.uniform(0.28, 0.34), rng.uniform(0.14, 0.17)},
  };
  for (Index y = 0; y < height; y++) {
    for (Index x = 0; x < width; x++) {
      double const v = (static_cast<double>(y) + 0.5) / H;
      double const u = (static_cast<double>(x) + 0.5) / W;
      for (auto const &e : lungs) {
        double const dy = (v - e.cy) / e.ry;
        double const dx = (u - e.cx) / e.rx;
        if (dy * dy + dx * dx <= 1.0) { s.lung_mask(y, x) = 1; }
      }
    }
  }
  s.thoracic_mask = s.lung_mask;

  std::vector<Index> lung_pixels;
  for (Index i = 0; i < s.lung_mask.size(); i++) {
    if (s.lung_mask.data[i]) { lung_pixels.push_back(i); }
  }
  auto const defects = opts.min_defects + rng.below(opts.max_defects - opts.min_defects + 1);
  double const short_side = static_cast<double>(std::min(height, width));
  for (Index d = 0; d < defects && !lung_pixels.empty(); d++) {
    auto const centre = lung_pixels[rng.below(lung_pixels.size())];
    double const py = static_cast<double>(centre / width);
    double const px = static_cast<double>(centre % width);
    double const radius = std::max(1.5, rng.uniform(0.05, 0.10) * short_side);
    for (Index y = 0; y < height; y++) {
      for (Index x = 0; x < width; x++) {
        double const dy = static_cast<double>(y) - py;
        double const dx = static_cast<double>(x) - px;
        if (dy * dy + dx * dx <= radius * radius && s.lung_mask(y, x)) { s.defect_mask(y, x) = 1; }
      }
    }
  }

  auto const texture = random_ripples(rng, 6, 4.0);
  auto const ripple = random_ripples(rng, 4, 2.0);
  double poly[6];
  for (auto &c : poly) {
    c = rng.uniform(-0.5, 0.5);
  }
  double const ripple_amp = rng.uniform(0.1, 0.3);

  std::vector<double> mag(height * width, 0.0);
  std::vector<double> phase(height * width, 0.0);
  double peak = 0.0;
  for (Index y = 0; y < height; y++) {
    for (Index x = 0; x < width; x++) {
      auto const i = y * width + x;
      double const v = 2.0 * (static_cast<double>(y) + 0.5) / H - 1.0;
      double const u = 2.0 * (static_cast<double>(x) + 0.5) / W - 1.0;
      phase[i] = poly[0] + poly[1] * u + poly[2] * v + poly[3] * u * u + poly[4] * u * v + poly[5] * v * v +
                 ripple_amp * ripple_field(ripple, u, v);
      if (!s.lung_mask.data[i]) { continue; }
      double m = 0.75 + 0.15 * ripple_field(texture, u, v);
      if (s.defect_mask.data[i]) { m *= opts.defect_intensity; }
      mag[i] = m;
      peak = std::max(peak, m);
    }
  }

  s.image = ComplexGrid(1, height, width);
  for (Index i = 0; i < mag.size(); i++) {
    double const m = mag[i] / peak;
    s.image.set(i, std::polar(m, phase[i]));
  }
  return s;
}

namespace {

void check_pad(Index h, Index w, Index th, Index tw)
{
  if (th < h || tw < w) { throw ContractViolation("pad_to: target is smaller than the source"); }
}

} // namespace

ComplexGrid pad_to(ComplexGrid const &img, Index height, Index width)
{
  check_pad(img.height(), img.width(), height, width);
  auto const top = (height - img.height()) / 2;
  auto const left = (width - img.width()) / 2;
  ComplexGrid out(img.channels(), height, width);
  for (Index c = 0; c < img.channels(); c++) {
    for (Index y = 0; y < img.height(); y++) {
      for (Index x = 0; x < img.width(); x++) {
        out.set(c, y + top, x + left, img.at(c, y, x));
      }
    }
  }
  return out;
}

BinaryGrid pad_to(BinaryGrid const &mask, Index height, Index width)
{
  check_pad(mask.height, mask.width, height, width);
  auto const top = (height - mask.height) / 2;
  auto const left = (width - mask.width) / 2;
  BinaryGrid out(height, width);
  for (Index y = 0; y < mask.height; y++) {
    for (Index x = 0; x < mask.width; x++) {
      out(y + top, x + left) = mask(y, x);
    }
  }
  return out;
}

ComplexGrid crop_center(ComplexGrid const &img, Index height, Index width)
{
  if (height > img.height() || width > img.width()) { throw ContractViolation("crop_center: target is larger"); }
  auto const top = (img.height() - height) / 2;
  auto const left = (img.width() - width) / 2;
  ComplexGrid out(img.channels(), height, width);
  for (Index c = 0; c < img.channels(); c++) {
    for (Index y = 0; y < height; y++) {
      for (Index x = 0; x < width; x++) {
        out.set(c, y, x, img.at(c, y + top, x + left));
      }
    }
  }
  return out;
}

std::vector<DatasetSample> make_dataset(Index n, std::uint64_t seed, DatasetConfig const &cfg)
{
  if (n < 1) { throw ConfigError("make_dataset: n must be >= 1"); }
  if (!(cfg.noise_sigma >= 0.0)) { throw ConfigError("make_dataset: noise_sigma must be >= 0"); }
  std::vector<DatasetSample> out;
  out.reserve(n);
  for (Index i = 0; i < n; i++) {
    DatasetSample s;
    s.id = i;
    s.phantom_seed = derive_seed(seed, Stream::Phantom, i);
    s.mask_seed = derive_seed(seed, Stream::Mask, i);
    s.phantom = gen_phantom(s.phantom_seed, cfg.height, cfg.width, cfg.phantom);
    s.mask = make_mask(cfg.height, cfg.width, cfg.af, cfg.center_fraction, s.mask_seed);
    if (cfg.noise_sigma > 0.0) {
      auto k = add_noise(fft2_centered(s.phantom.image), cfg.noise_sigma, derive_seed(seed, Stream::Noise, i));
      for (Index y = 0; y < k.height(); y++) {
        for (Index x = 0; x < k.width(); x++) {
          if (!s.mask.sampled(y, x)) { k.set(0, y, x, Cx{}); }
        }
      }
      s.y_u = std::move(k);
    } else {
      s.y_u = undersample(s.phantom.image, s.mask);
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace en2
