#include "en2/fourier.hpp"

#include "en2/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace en2 {

namespace {

bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

Cx unit_phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

} // namespace

Fft1d::Fft1d(Index n)
  : n_{n}
  , pow2_{is_pow2(n)}
{
  if (n == 0) { throw ContractViolation("Fft1d: zero length"); }
  if (pow2_) {
    twiddles_.resize(n / 2);
    for (Index k = 0; k < n / 2; k++) {
      twiddles_[k] = unit_phase(-2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }
    Index bits = 0;
    while ((Index{1} << bits) < n) {
      bits++;
    }
    bitrev_.resize(n);
    for (Index i = 0; i < n; i++) {
      Index r = 0;
      for (Index b = 0; b < bits; b++) {
        r |= ((i >> b) & 1) << (bits - 1 - b);
      }
      bitrev_[i] = r;
    }
    return;
  }

  Index m = 1;
  while (m < 2 * n - 1) {
    m <<= 1;
  }
  inner_ = std::make_unique<Fft1d>(m);
  chirp_.resize(n);
  for (Index k = 0; k < n; k++) {
    // k^2 mod 2n keeps the angle small for large k.
    auto const k2 = (k * k) % (2 * n);
    chirp_[k] = unit_phase(-std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n));
  }
  chirp_filter_.assign(m, Cx{});
  chirp_filter_[0] = std::conj(chirp_[0]);
  for (Index k = 1; k < n; k++) {
    chirp_filter_[k] = std::conj(chirp_[k]);
    chirp_filter_[m - k] = std::conj(chirp_[k]);
  }
  inner_->forward(chirp_filter_);
}

void Fft1d::radix2(std::span<Cx> a, bool inverse) const
{
  auto const n = n_;
  for (Index i = 0; i < n; i++) {
    if (i < bitrev_[i]) { std::swap(a[i], a[bitrev_[i]]); }
  }
  for (Index len = 2; len <= n; len <<= 1) {
    Index const half = len / 2;
    Index const stride = n / len;
    for (Index start = 0; start < n; start += len) {
      for (Index j = 0; j < half; j++) {
        Cx w = twiddles_[j * stride];
        if (inverse) { w = std::conj(w); }
        Cx const u = a[start + j];
        Cx const v = a[start + j + half] * w;
        a[start + j] = u + v;
        a[start + j + half] = u - v;
      }
    }
  }
}

void Fft1d::bluestein(std::span<Cx> data) const
{
  auto const m = inner_->size();
  std::vector<Cx> work(m, Cx{});
  for (Index k = 0; k < n_; k++) {
    work[k] = data[k] * chirp_[k];
  }
  inner_->forward(work);
  for (Index k = 0; k < m; k++) {
    work[k] *= chirp_filter_[k];
  }
  inner_->inverse(work);
  double const inv_m = 1.0 / static_cast<double>(m);
  for (Index k = 0; k < n_; k++) {
    data[k] = work[k] * inv_m * chirp_[k];
  }
}

void Fft1d::forward(std::span<Cx> data) const
{
  if (data.size() != n_) { throw ContractViolation("Fft1d: length mismatch"); }
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data);
  }
}

void Fft1d::inverse(std::span<Cx> data) const
{
  if (data.size() != n_) { throw ContractViolation("Fft1d: length mismatch"); }
  if (pow2_) {
    radix2(data, true);
    return;
  }
  // conj(F(conj(x))) is the unnormalised inverse.
  for (auto &v : data) {
    v = std::conj(v);
  }
  bluestein(data);
  for (auto &v : data) {
    v = std::conj(v);
  }
}

Fft1d const &fft_plan(Index n)
{
  static std::mutex mutex;
  static std::map<Index, std::unique_ptr<Fft1d>> plans;
  std::lock_guard lock(mutex);
  auto &p = plans[n];
  if (!p) { p = std::make_unique<Fft1d>(n); }
  return *p;
}

namespace {

ComplexGrid centered_transform(ComplexGrid const &in, bool inverse)
{
  auto const H = in.height();
  auto const W = in.width();
  if (H == 0 || W == 0) { throw ContractViolation("fft2: empty grid"); }
  auto const &row_plan = fft_plan(W);
  auto const &col_plan = fft_plan(H);
  auto const hy = H / 2;
  auto const hx = W / 2;
  double const scale = 1.0 / std::sqrt(static_cast<double>(H * W));

  ComplexGrid out(in.shape());
  std::vector<Cx> plane(H * W);
  std::vector<Cx> line(std::max(H, W));
  for (Index c = 0; c < in.channels(); c++) {
    // ifftshift on the way in
    for (Index y = 0; y < H; y++) {
      for (Index x = 0; x < W; x++) {
        plane[y * W + x] = in.at(c, (y + hy) % H, (x + hx) % W);
      }
    }
    std::span<Cx> row_span(line.data(), W);
    for (Index y = 0; y < H; y++) {
      std::copy_n(plane.begin() + y * W, W, row_span.begin());
      inverse ? row_plan.inverse(row_span) : row_plan.forward(row_span);
      std::copy_n(row_span.begin(), W, plane.begin() + y * W);
    }
    std::span<Cx> col_span(line.data(), H);
    for (Index x = 0; x < W; x++) {
      for (Index y = 0; y < H; y++) {
        col_span[y] = plane[y * W + x];
      }
      inverse ? col_plan.inverse(col_span) : col_plan.forward(col_span);
      for (Index y = 0; y < H; y++) {
        plane[y * W + x] = col_span[y];
      }
    }
    // fftshift on the way out
    for (Index y = 0; y < H; y++) {
      for (Index x = 0; x < W; x++) {
        out.set(c, (y + hy) % H, (x + hx) % W, plane[y * W + x] * scale);
      }
    }
  }
  return out;
}

} // namespace

ComplexGrid fft2_centered(ComplexGrid const &img) { return centered_transform(img, false); }

ComplexGrid ifft2_centered(ComplexGrid const &k) { return centered_transform(k, true); }

Var fft2(Var const &img)
{
  return Node::record(fft2_centered(img.value()), "fft2", {img},
                      [img](ComplexGrid const &g) { accumulate(img, ifft2_centered(g)); });
}

Var ifft2(Var const &k)
{
  return Node::record(ifft2_centered(k.value()), "ifft2", {k},
                      [k](ComplexGrid const &g) { accumulate(k, fft2_centered(g)); });
}

} // namespace en2
