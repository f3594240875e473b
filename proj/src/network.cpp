#include "en2/network.hpp"

#include "en2/errors.hpp"
#include "en2/fourier.hpp"
#include "en2/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace en2 {

void NetworkConfig::validate() const
{
  if (height < 1 || width < 1) { throw ConfigError("network: height and width must be >= 1"); }
  if (e_blocks < 1 || en2_layers < 1 || f_blocks < 1 || fmus_per_block < 1 || growth < 1) {
    throw ConfigError("network: P, Q, M, R and V must all be >= 1");
  }
  if (!(alpha >= 0.0)) { throw ConfigError("network: alpha must be >= 0"); }
  if (precision != 32 && precision != 64) { throw ConfigError("network: precision must be 32 or 64"); }
  if (kspace_kernel == KspaceKernel::Square && (square_size < 1 || square_size % 2 == 0)) {
    throw ConfigError("network: square k-space kernels must have odd size");
  }
}

void TrainConfig::validate() const
{
  if (batch_size < 1) { throw ConfigError("train: batch_size must be >= 1"); }
  if (!(lr_start >= lr_end) || !(lr_end >= 0.0)) { throw ConfigError("train: need lr_start >= lr_end >= 0"); }
  if (lr_start != lr_end && !(lr_end > 0.0)) { throw ConfigError("train: a decaying schedule needs lr_end > 0"); }
  if (!(noise_sigma >= 0.0)) { throw ConfigError("train: noise_sigma must be >= 0"); }
}

std::string to_string(KspaceKernel k, Index square_size)
{
  switch (k) {
  case KspaceKernel::En2: return "en2";
  case KspaceKernel::Square: return "square_" + std::to_string(square_size);
  case KspaceKernel::Rect3x5: return "rect_3x5";
  case KspaceKernel::Dilated3x3: return "dilated_3x3_r2";
  }
  return "en2";
}

KspaceKernel parse_kspace_kernel(std::string const &s, Index &square_size)
{
  if (s == "en2") { return KspaceKernel::En2; }
  if (s == "rect_3x5") { return KspaceKernel::Rect3x5; }
  if (s == "dilated_3x3_r2") { return KspaceKernel::Dilated3x3; }
  if (s.rfind("square_", 0) == 0) {
    try {
      std::size_t used = 0;
      auto const n = std::stoul(s.substr(7), &used);
      if (used == s.size() - 7 && n > 0) {
        square_size = n;
        return KspaceKernel::Square;
      }
    } catch (std::exception const &) {
    }
  }
  throw ConfigError("unknown k-space kernel '" + s + "'");
}

std::string to_string(En2Mode m) { return m == En2Mode::Frequency ? "F" : "P"; }

En2Mode parse_en2_mode(std::string const &s)
{
  if (s == "F" || s == "F-EN2" || s == "frequency") { return En2Mode::Frequency; }
  if (s == "P" || s == "P-EN2" || s == "phase") { return En2Mode::Phase; }
  throw ConfigError("unknown EN2 mode '" + s + "'");
}

namespace {

struct ConvShape
{
  Index kh, kw, dil;
};

ConvShape kspace_conv_shape(NetworkConfig const &cfg)
{
  switch (cfg.kspace_kernel) {
  case KspaceKernel::Square: return {cfg.square_size, cfg.square_size, 1};
  case KspaceKernel::Rect3x5: return {3, 5, 1};
  case KspaceKernel::Dilated3x3: return {3, 3, 2};
  case KspaceKernel::En2: break;
  }
  return {0, 0, 0};
}

Index conv_stage_count(Index layers, Index hidden, ConvShape s)
{
  auto const taps = s.kh * s.kw;
  if (layers == 1) { return taps + 1; }
  Index n = taps * hidden + hidden;              // 1 -> C
  n += (layers - 2) * (hidden * hidden * taps + hidden); // C -> C
  n += hidden * taps + 1;                        // C -> 1
  return n;
}

Index en2_stage_count(NetworkConfig const &cfg)
{
  auto const n = cfg.en2_mode == En2Mode::Frequency ? cfg.width : cfg.height;
  return cfg.en2_layers * (n * n + n);
}

} // namespace

Index kspace_hidden_channels(NetworkConfig const &cfg)
{
  if (cfg.kspace_kernel == KspaceKernel::En2) { return 1; }
  if (cfg.kspace_channels > 0) { return cfg.kspace_channels; }
  auto const target = static_cast<double>(en2_stage_count(cfg));
  auto const shape = kspace_conv_shape(cfg);
  Index best = 1;
  double best_gap = std::abs(static_cast<double>(conv_stage_count(cfg.en2_layers, 1, shape)) - target);
  for (Index c = 2; c <= 4096; c++) {
    double const gap = std::abs(static_cast<double>(conv_stage_count(cfg.en2_layers, c, shape)) - target);
    if (gap < best_gap) {
      best = c;
      best_gap = gap;
    }
    if (static_cast<double>(conv_stage_count(cfg.en2_layers, c, shape)) > target) { break; }
  }
  return best;
}

Index e_block_parameter_count(NetworkConfig const &cfg)
{
  if (cfg.kspace_kernel == KspaceKernel::En2) { return en2_stage_count(cfg); }
  return conv_stage_count(cfg.en2_layers, kspace_hidden_channels(cfg), kspace_conv_shape(cfg));
}

NetworkParams build_network(NetworkConfig const &cfg, std::uint64_t seed)
{
  cfg.validate();
  NetworkParams net;
  net.config = cfg;
  Rng rng(seed, Stream::Init);
  auto const Q = cfg.en2_layers;

  for (Index p = 0; p < cfg.e_blocks; p++) {
    EBlockParams block;
    for (Index q = 0; q < Q; q++) {
      auto const name = "e" + std::to_string(p) + ".l" + std::to_string(q);
      if (cfg.kspace_kernel == KspaceKernel::En2) {
        auto const n = cfg.en2_mode == En2Mode::Frequency ? cfg.width : cfg.height;
        block.layers.emplace_back(make_en2(name, cfg.en2_mode, n, n, cfg.init, rng));
      } else {
        auto const s = kspace_conv_shape(cfg);
        auto const c = kspace_hidden_channels(cfg);
        Index const in = q == 0 ? 1 : c;
        Index const out = q + 1 == Q ? 1 : c;
        block.layers.emplace_back(make_conv(name, in, out, s.kh, s.kw, cfg.init, rng, s.dil, Padding::SameZero));
      }
    }
    net.e_blocks.push_back(std::move(block));
  }

  for (Index m = 0; m < cfg.f_blocks; m++) {
    FBlockParams block;
    Index channels = 1;
    for (Index r = 0; r < cfg.fmus_per_block; r++) {
      auto const name = "f" + std::to_string(m) + ".fmu" + std::to_string(r);
      block.fmus.push_back(make_fmu(name, channels, cfg.growth, cfg.init, rng));
      channels += cfg.growth;
    }
    block.final_conv = make_conv("f" + std::to_string(m) + ".final", channels, 1, 3, 3, cfg.init, rng);
    net.f_blocks.push_back(std::move(block));
  }
  return net;
}

std::vector<NamedParam> NetworkParams::parameters() const
{
  std::vector<NamedParam> out;
  auto push = [&](Var const &v) { out.push_back({v.name(), v}); };
  auto push_conv = [&](ComplexConvParams const &c) {
    push(c.weights);
    push(c.bias);
  };
  for (auto const &block : e_blocks) {
    for (auto const &layer : block.layers) {
      if (auto const *e = std::get_if<En2LayerParams>(&layer)) {
        push(e->kernels);
        push(e->biases);
      } else {
        push_conv(std::get<ComplexConvParams>(layer));
      }
    }
  }
  for (auto const &block : f_blocks) {
    for (auto const &fmu : block.fmus) {
      push_conv(fmu.residual_conv);
      push_conv(fmu.dense_conv);
    }
    push_conv(block.final_conv);
  }
  return out;
}

Index NetworkParams::complex_parameter_count() const
{
  Index n = 0;
  for (auto const &p : parameters()) {
    n += p.var.value().size();
  }
  return n;
}

Index NetworkParams::kspace_complex_parameter_count() const
{
  Index n = 0;
  for (auto const &p : parameters()) {
    if (p.name.front() == 'e') { n += p.var.value().size(); }
  }
  return n;
}

std::vector<Cx> NetworkParams::flatten() const
{
  std::vector<Cx> out;
  for (auto const &p : parameters()) {
    auto const &v = p.var.value();
    for (Index i = 0; i < v.size(); i++) {
      out.push_back(v.at(i));
    }
  }
  return out;
}

void NetworkParams::assign(std::span<Cx const> values)
{
  auto params = parameters();
  Index total = 0;
  for (auto const &p : params) {
    total += p.var.value().size();
  }
  if (values.size() != total) {
    throw ContractViolation("assign: expected " + std::to_string(total) + " values, got " +
                            std::to_string(values.size()));
  }
  Index k = 0;
  for (auto &p : params) {
    auto &v = p.var.mutable_value();
    for (Index i = 0; i < v.size(); i++) {
      v.set(i, values[k++]);
    }
  }
}

NetworkParams NetworkParams::clone() const
{
  auto copy = build_network(config, 0);
  copy.assign(flatten());
  return copy;
}

ForwardResult forward(NetworkParams const &params, ComplexGrid const &y_u, SamplingMask const &mask)
{
  auto const &cfg = params.config;
  if (y_u.shape() != Shape{1, cfg.height, cfg.width}) {
    throw ContractViolation("forward: k-space shape does not match the network configuration");
  }
  auto const measured = Var::constant(y_u);
  Var k = measured;
  for (auto const &block : params.e_blocks) {
    k = e_block_forward(k, measured, mask, block.layers);
  }
  Var img = ifft2(k);
  for (auto const &block : params.f_blocks) {
    img = f_block_forward(img, measured, mask, block);
  }
  return {k, img};
}

Var loss_lw(Var const &a, Var const &b, double alpha)
{
  if (a.shape() != b.shape()) { throw ContractViolation("loss_lw: shape mismatch"); }
  auto const diff = sub(a, b);
  return add(scale(mean_modulus(diff), alpha), mean_squared_modulus(diff));
}

double loss_lw(ComplexGrid const &a, ComplexGrid const &b, double alpha)
{
  NoGradGuard guard;
  return loss_lw(Var::constant(a), Var::constant(b), alpha).value().re()[0];
}

Var loss_total(Var const &y, Var const &k_rec, Var const &x, Var const &image, double alpha)
{
  return add(loss_lw(y, k_rec, alpha), loss_lw(x, image, alpha));
}

double loss_total(ComplexGrid const &y, ComplexGrid const &k_rec, ComplexGrid const &x, ComplexGrid const &image,
                  double alpha)
{
  return loss_lw(y, k_rec, alpha) + loss_lw(x, image, alpha);
}

ComplexGrid reconstruct(NetworkParams const &params, ComplexGrid const &y_u, SamplingMask const &mask)
{
  NoGradGuard guard;
  return forward(params, y_u, mask).image.value();
}

TrainingSample make_training_sample(ComplexGrid image, SamplingMask mask)
{
  TrainingSample s;
  s.kspace = fft2_centered(image);
  s.y_u = undersample(image, mask);
  s.image = std::move(image);
  s.mask = std::move(mask);
  return s;
}

TrainingSample make_training_sample(ComplexGrid image, ComplexGrid y_u, SamplingMask mask)
{
  TrainingSample s;
  s.kspace = fft2_centered(image);
  s.y_u = std::move(y_u);
  s.image = std::move(image);
  s.mask = std::move(mask);
  return s;
}

TrainingAborted::TrainingAborted(std::string const &what, NetworkParams good, std::vector<EpochRecord> h, Index s)
  : NumericError(what)
  , last_good{std::move(good)}
  , history{std::move(h)}
  , steps{s}
{
}

double mean_loss(NetworkParams const &params, std::span<TrainingSample const> samples)
{
  if (samples.empty()) { return std::numeric_limits<double>::quiet_NaN(); }
  NoGradGuard guard;
  double total = 0.0;
  for (auto const &s : samples) {
    auto const r = forward(params, s.y_u, s.mask);
    total += loss_total(s.kspace, r.k_rec.value(), s.image, r.image.value(), params.config.alpha);
  }
  return total / static_cast<double>(samples.size());
}

double mean_kspace_loss(NetworkParams const &params, std::span<TrainingSample const> samples)
{
  if (samples.empty()) { return std::numeric_limits<double>::quiet_NaN(); }
  NoGradGuard guard;
  double total = 0.0;
  for (auto const &s : samples) {
    auto const r = forward(params, s.y_u, s.mask);
    total += loss_lw(s.kspace, r.k_rec.value(), params.config.alpha);
  }
  return total / static_cast<double>(samples.size());
}

namespace {

// Noise augmentation keeps unsampled entries at zero.
ComplexGrid noisy_measurement(TrainingSample const &s, double sigma, std::uint64_t seed)
{
  auto noisy = add_noise(s.y_u, sigma, seed);
  for (Index y = 0; y < noisy.height(); y++) {
    for (Index x = 0; x < noisy.width(); x++) {
      if (!s.mask.sampled(y, x)) { noisy.set(0, y, x, Cx{}); }
    }
  }
  return noisy;
}

} // namespace

TrainResult train(std::span<TrainingSample const> train_set, std::span<TrainingSample const> val_set,
                  NetworkConfig const &cfg, TrainConfig const &tcfg, NetworkParams const *initial,
                  EpochCallback const &on_epoch)
{
  cfg.validate();
  tcfg.validate();
  if (train_set.empty()) { throw ContractViolation("train: empty dataset"); }

  TrainResult result{initial ? initial->clone() : build_network(cfg, tcfg.seed), {}, 0};
  auto &net = result.params;
  auto const params = net.parameters();
  auto adam = make_adam_state(params, tcfg.lr_start);
  auto const n = train_set.size();
  std::vector<Index> order(n);

  for (Index epoch = 0; epoch < tcfg.epochs; epoch++) {
    adam.learning_rate = lr_schedule(epoch, tcfg.epochs, tcfg.lr_start, tcfg.lr_end);
    std::iota(order.begin(), order.end(), Index{0});
    Rng shuffle(tcfg.seed, Stream::Shuffle, epoch);
    for (Index i = n; i > 1; i--) {
      std::swap(order[i - 1], order[shuffle.below(i)]);
    }

    double epoch_loss = 0.0;
    for (Index start = 0; start < n; start += tcfg.batch_size) {
      auto const stop = std::min(n, start + tcfg.batch_size);
      auto const batch = static_cast<double>(stop - start);
      Gradients total;
      for (Index b = start; b < stop; b++) {
        auto const &s = train_set[order[b]];
        auto const y_u = tcfg.noise_sigma > 0.0
                             ? noisy_measurement(s, tcfg.noise_sigma, derive_seed(tcfg.seed, Stream::Noise, epoch * n + b))
                             : s.y_u;
        auto const r = forward(net, y_u, s.mask);
        auto const loss =
            loss_total(Var::constant(s.kspace), r.k_rec, Var::constant(s.image), r.image, cfg.alpha);
        double const value = loss.value().re()[0];
        if (!std::isfinite(value)) {
          throw TrainingAborted("train: non-finite loss at epoch " + std::to_string(epoch), net.clone(),
                                result.history, result.steps);
        }
        epoch_loss += value;
        Gradients g;
        try {
          g = backward(loss);
        } catch (NumericError const &e) {
          throw TrainingAborted(e.what(), net.clone(), result.history, result.steps);
        }
        for (auto &[name, grid] : g) {
          auto it = total.find(name);
          if (it == total.end()) {
            total.emplace(name, std::move(grid));
            continue;
          }
          auto &acc = it->second;
          for (Index i = 0; i < acc.size(); i++) {
            acc.re()[i] += grid.re()[i];
            acc.im()[i] += grid.im()[i];
          }
        }
      }
      for (auto &[name, grid] : total) {
        for (auto &v : grid.re()) {
          v /= batch;
        }
        for (auto &v : grid.im()) {
          v /= batch;
        }
      }
      adam_step(params, total, adam);
      result.steps++;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = adam.learning_rate;
    rec.train_loss = epoch_loss / static_cast<double>(n);
    rec.val_loss = mean_loss(net, val_set);
    result.history.push_back(rec);
    if (on_epoch) { on_epoch(rec); }
  }
  return result;
}

} // namespace en2
