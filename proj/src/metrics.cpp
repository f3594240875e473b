#include "en2/metrics.hpp"

#include "en2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace en2 {

namespace {

void require_same(RealGrid const &a, RealGrid const &b, BinaryGrid const &m, char const *op)
{
  if (!a.same_shape(b) || a.height != m.height || a.width != m.width) {
    throw ContractViolation(std::string(op) + ": shape mismatch");
  }
  if (count_nonzero(m) == 0) { throw ContractViolation(std::string(op) + ": empty mask"); }
}

} // namespace

double psnr(RealGrid const &ref, RealGrid const &rec, BinaryGrid const &mask)
{
  require_same(ref, rec, mask, "psnr");
  double se = 0.0;
  Index n = 0;
  for (Index i = 0; i < ref.size(); i++) {
    if (!mask.data[i]) { continue; }
    double const d = ref.data[i] - rec.data[i];
    se += d * d;
    n++;
  }
  double const mse = se / static_cast<double>(n);
  if (mse == 0.0) { return kPsnrIdentical; }
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;

// Separable truncated Gaussian filter, renormalised over in-bounds taps.
RealGrid gaussian_filter(RealGrid const &in)
{
  double taps[2 * kRadius + 1];
  for (int k = -kRadius; k <= kRadius; k++) {
    taps[k + kRadius] = std::exp(-(k * k) / (2.0 * kSigma * kSigma));
  }
  auto const H = static_cast<int>(in.height);
  auto const W = static_cast<int>(in.width);
  RealGrid tmp(in.height, in.width);
  for (int y = 0; y < H; y++) {
    for (int x = 0; x < W; x++) {
      double s = 0.0;
      double w = 0.0;
      for (int k = -kRadius; k <= kRadius; k++) {
        int const xx = x + k;
        if (xx < 0 || xx >= W) { continue; }
        s += taps[k + kRadius] * in(y, xx);
        w += taps[k + kRadius];
      }
      tmp(y, x) = s / w;
    }
  }
  RealGrid out(in.height, in.width);
  for (int y = 0; y < H; y++) {
    for (int x = 0; x < W; x++) {
      double s = 0.0;
      double w = 0.0;
      for (int k = -kRadius; k <= kRadius; k++) {
        int const yy = y + k;
        if (yy < 0 || yy >= H) { continue; }
        s += taps[k + kRadius] * tmp(yy, x);
        w += taps[k + kRadius];
      }
      out(y, x) = s / w;
    }
  }
  return out;
}

RealGrid product(RealGrid const &a, RealGrid const &b)
{
  RealGrid out(a.height, a.width);
  for (Index i = 0; i < a.size(); i++) {
    out.data[i] = a.data[i] * b.data[i];
  }
  return out;
}

} // namespace

RealGrid ssim_map(RealGrid const &ref, RealGrid const &rec)
{
  if (!ref.same_shape(rec)) { throw ContractViolation("ssim: shape mismatch"); }
  constexpr double C1 = 0.01 * 0.01;
  constexpr double C2 = 0.03 * 0.03;
  auto const mu1 = gaussian_filter(ref);
  auto const mu2 = gaussian_filter(rec);
  auto const e11 = gaussian_filter(product(ref, ref));
  auto const e22 = gaussian_filter(product(rec, rec));
  auto const e12 = gaussian_filter(product(ref, rec));
  RealGrid map(ref.height, ref.width);
  for (Index i = 0; i < ref.size(); i++) {
    double const m1 = mu1.data[i];
    double const m2 = mu2.data[i];
    double const s11 = e11.data[i] - m1 * m1;
    double const s22 = e22.data[i] - m2 * m2;
    double const s12 = e12.data[i] - m1 * m2;
    map.data[i] = ((2.0 * m1 * m2 + C1) * (2.0 * s12 + C2)) / ((m1 * m1 + m2 * m2 + C1) * (s11 + s22 + C2));
  }
  return map;
}

double ssim(RealGrid const &ref, RealGrid const &rec, BinaryGrid const &mask)
{
  require_same(ref, rec, mask, "ssim");
  auto const map = ssim_map(ref, rec);
  double s = 0.0;
  Index n = 0;
  for (Index i = 0; i < map.size(); i++) {
    if (mask.data[i]) {
      s += map.data[i];
      n++;
    }
  }
  return s / static_cast<double>(n);
}

double snr_rician(RealGrid const &mag, BinaryGrid const &signal_mask, BinaryGrid const &noise_mask)
{
  if (mag.height != signal_mask.height || mag.width != signal_mask.width || !signal_mask.same_shape(noise_mask)) {
    throw ContractViolation("snr_rician: shape mismatch");
  }
  double sig = 0.0;
  double noise = 0.0;
  Index ns = 0;
  Index nn = 0;
  for (Index i = 0; i < mag.size(); i++) {
    if (signal_mask.data[i]) {
      sig += mag.data[i];
      ns++;
    }
    if (noise_mask.data[i]) {
      noise += mag.data[i];
      nn++;
    }
  }
  if (ns == 0 || nn == 0) { throw ContractViolation("snr_rician: empty signal or noise mask"); }
  double const mean_sig = sig / static_cast<double>(ns);
  double const mean_noise = noise / static_cast<double>(nn);
  double var = 0.0;
  for (Index i = 0; i < mag.size(); i++) {
    if (noise_mask.data[i]) {
      double const d = mag.data[i] - mean_noise;
      var += d * d;
    }
  }
  double const std_noise = std::sqrt(var / static_cast<double>(nn));
  if (!(std_noise > 0.0)) { throw DegenerateInput("snr_rician: noise standard deviation is zero"); }
  return (mean_sig - mean_noise) / std_noise * std::sqrt(2.0 - std::numbers::pi / 2.0);
}

BinaryGrid kmeans_defect(RealGrid const &mag, BinaryGrid const &thoracic_mask, Index clusters)
{
  if (clusters < 2) { throw ContractViolation("kmeans_defect: need K >= 2"); }
  if (mag.height != thoracic_mask.height || mag.width != thoracic_mask.width) {
    throw ContractViolation("kmeans_defect: shape mismatch");
  }
  std::vector<double> values;
  for (Index i = 0; i < mag.size(); i++) {
    if (thoracic_mask.data[i]) { values.push_back(mag.data[i]); }
  }
  if (values.empty()) { throw ContractViolation("kmeans_defect: empty thoracic mask"); }

  BinaryGrid defect(mag.height, mag.width);
  std::sort(values.begin(), values.end());
  if (values.back() - values.front() < 1e-6) { return defect; }

  auto const n = values.size();
  auto const K = clusters;
  std::vector<double> centroid(K);
  for (Index k = 0; k < K; k++) {
    double const q = static_cast<double>(2 * k + 1) / static_cast<double>(2 * K);
    double const pos = q * static_cast<double>(n - 1);
    auto const lo = static_cast<Index>(std::floor(pos));
    auto const hi = std::min(lo + 1, n - 1);
    double const t = pos - static_cast<double>(lo);
    centroid[k] = values[lo] + t * (values[hi] - values[lo]);
  }

  auto nearest = [&](double v) {
    Index best = 0;
    double bd = std::abs(v - centroid[0]);
    for (Index k = 1; k < K; k++) {
      double const d = std::abs(v - centroid[k]);
      if (d < bd) {
        best = k;
        bd = d;
      }
    }
    return best;
  };

  // Assignments are computed over sorted values so the result does not
  // depend on pixel order.
  std::vector<Index> assign(n, K);
  for (int iter = 0; iter < 100; iter++) {
    bool changed = false;
    for (Index i = 0; i < n; i++) {
      auto const a = nearest(values[i]);
      changed = changed || a != assign[i];
      assign[i] = a;
    }
    if (!changed) { break; }
    std::vector<double> sum(K, 0.0);
    std::vector<Index> count(K, 0);
    for (Index i = 0; i < n; i++) {
      sum[assign[i]] += values[i];
      count[assign[i]]++;
    }
    for (Index k = 0; k < K; k++) {
      if (count[k] > 0) { centroid[k] = sum[k] / static_cast<double>(count[k]); }
    }
  }

  Index const lowest = static_cast<Index>(std::min_element(centroid.begin(), centroid.end()) - centroid.begin());
  for (Index i = 0; i < mag.size(); i++) {
    if (thoracic_mask.data[i] && nearest(mag.data[i]) == lowest) { defect.data[i] = 1; }
  }
  return defect;
}

double vdp(BinaryGrid const &defect, BinaryGrid const &thoracic)
{
  if (!defect.same_shape(thoracic)) { throw ContractViolation("vdp: shape mismatch"); }
  auto const t = count_nonzero(thoracic);
  if (t == 0) { throw ContractViolation("vdp: empty thoracic mask"); }
  for (Index i = 0; i < defect.size(); i++) {
    if (defect.data[i] && !thoracic.data[i]) { throw ContractViolation("vdp: defect extends outside the thoracic mask"); }
  }
  return 100.0 * static_cast<double>(count_nonzero(defect)) / static_cast<double>(t);
}

double dice(BinaryGrid const &a, BinaryGrid const &b)
{
  if (!a.same_shape(b)) { throw ContractViolation("dice: shape mismatch"); }
  Index na = 0;
  Index nb = 0;
  Index both = 0;
  for (Index i = 0; i < a.size(); i++) {
    bool const x = a.data[i] != 0;
    bool const y = b.data[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) { return 1.0; }
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<SnrSample> snr_filter(std::span<SnrSample const> samples, double threshold)
{
  std::vector<SnrSample> kept;
  for (auto const &s : samples) {
    if (snr_rician(s.magnitude, s.signal_mask, s.noise_mask) >= threshold) { kept.push_back(s); }
  }
  return kept;
}

double pearson(std::span<double const> a, std::span<double const> b)
{
  if (a.size() != b.size() || a.size() < 2) { throw ContractViolation("pearson: need two equal-length series"); }
  auto const n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (Index i = 0; i < a.size(); i++) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Index i = 0; i < a.size(); i++) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) { return std::numeric_limits<double>::quiet_NaN(); }
  return sab / std::sqrt(saa * sbb);
}

BinaryGrid complement(BinaryGrid const &m)
{
  BinaryGrid out(m.height, m.width);
  for (Index i = 0; i < m.size(); i++) {
    out.data[i] = m.data[i] ? 0 : 1;
  }
  return out;
}

} // namespace en2
