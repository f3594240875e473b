#pragma once

#include "adam.hpp"
#include "errors.hpp"
#include "layers.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace en2 {

// Layer type used in the k-space stage (kernel ablation axis).
enum class KspaceKernel
{
  En2,
  Square,     // square_size x square_size
  Rect3x5,
  Dilated3x3, // 3x3, dilation 2
};

struct NetworkConfig
{
  Index height = 96;
  Index width = 96;
  Index e_blocks = 1;       // P
  Index en2_layers = 5;     // Q
  Index f_blocks = 15;      // M
  Index fmus_per_block = 5; // R
  Index growth = 8;         // V
  En2Mode en2_mode = En2Mode::Frequency;
  KspaceKernel kspace_kernel = KspaceKernel::En2;
  Index square_size = 3;
  // Hidden width of conv k-space variants; 0 picks the width whose parameter
  // count is closest to the EN2 stage.
  Index kspace_channels = 0;
  double alpha = 1.0;
  int precision = 64; // storage precision of checkpoints and outputs
  Init init = Init::Glorot;

  void validate() const; // throws ConfigError
};

struct TrainConfig
{
  Index epochs = 200;
  Index batch_size = 10;
  double lr_start = 1e-3;
  double lr_end = 1e-5;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0; // optional k-space noise augmentation

  void validate() const;
};

struct EBlockParams
{
  std::vector<KspaceLayer> layers;
};

struct NetworkParams
{
  NetworkConfig config;
  std::vector<EBlockParams> e_blocks;
  std::vector<FBlockParams> f_blocks;

  /// Every learnable array with a unique name, in a fixed order.
  std::vector<NamedParam> parameters() const;
  Index complex_parameter_count() const;
  Index kspace_complex_parameter_count() const;

  std::vector<Cx> flatten() const;
  void assign(std::span<Cx const> values);
  NetworkParams clone() const;
};

Index kspace_hidden_channels(NetworkConfig const &cfg);
// Complex parameter count of one E-block under cfg.
Index e_block_parameter_count(NetworkConfig const &cfg);

NetworkParams build_network(NetworkConfig const &cfg, std::uint64_t seed);

struct ForwardResult
{
  Var k_rec;
  Var image;
};

/// k_rec from the E-block chain, then M F-blocks on ifft2(k_rec).
ForwardResult forward(NetworkParams const &params, ComplexGrid const &y_u, SamplingMask const &mask);

// alpha * mean|a - b| + mean|a - b|^2
Var loss_lw(Var const &a, Var const &b, double alpha);
double loss_lw(ComplexGrid const &a, ComplexGrid const &b, double alpha);

// L_w(y, k_rec) + L_w(x, I_rec)
Var loss_total(Var const &y, Var const &k_rec, Var const &x, Var const &image, double alpha);
double loss_total(ComplexGrid const &y, ComplexGrid const &k_rec, ComplexGrid const &x, ComplexGrid const &image,
                  double alpha);

/// Inference: forward without graph recording, returns I_rec.
ComplexGrid reconstruct(NetworkParams const &params, ComplexGrid const &y_u, SamplingMask const &mask);

struct TrainingSample
{
  ComplexGrid image;  // x
  ComplexGrid kspace; // y = fft2(x)
  ComplexGrid y_u;
  SamplingMask mask;
};

TrainingSample make_training_sample(ComplexGrid image, SamplingMask mask);
TrainingSample make_training_sample(ComplexGrid image, ComplexGrid y_u, SamplingMask mask);

struct EpochRecord
{
  Index epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN(); // NaN without a validation set
};

struct TrainResult
{
  NetworkParams params;
  std::vector<EpochRecord> history;
  Index steps = 0;
};

/// Thrown when a training loss or gradient turns non-finite; carries the
/// parameters from before the failing step.
class TrainingAborted : public NumericError
{
public:
  TrainingAborted(std::string const &what, NetworkParams last_good, std::vector<EpochRecord> history, Index steps);
  NetworkParams last_good;
  std::vector<EpochRecord> history;
  Index steps;
};

using EpochCallback = std::function<void(EpochRecord const &)>;

/*
 * Mini-batch Adam on loss_total. Batches come from a per-epoch shuffle
 * drawn from the Shuffle stream of tcfg.seed; per-sample gradients are
 * summed in batch order and divided by the batch size. train_loss is the
 * mean per-sample loss seen during the epoch; val_loss is evaluated after
 * the epoch's updates.
 */
TrainResult train(std::span<TrainingSample const> train_set, std::span<TrainingSample const> val_set,
                  NetworkConfig const &cfg, TrainConfig const &tcfg, NetworkParams const *initial = nullptr,
                  EpochCallback const &on_epoch = {});

double mean_loss(NetworkParams const &params, std::span<TrainingSample const> samples);
// Mean L_w(y, k_rec) over samples.
double mean_kspace_loss(NetworkParams const &params, std::span<TrainingSample const> samples);

std::string to_string(KspaceKernel k, Index square_size = 3);
KspaceKernel parse_kspace_kernel(std::string const &s, Index &square_size);
std::string to_string(En2Mode m);
En2Mode parse_en2_mode(std::string const &s);

} // namespace en2
