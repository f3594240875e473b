#pragma once

#include "network.hpp"
#include "phantom.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace en2 {

// Plain "key=value" text; '#' starts a comment line. Duplicate keys are an error.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string const &text);
KeyValues read_key_values(std::filesystem::path const &path);
std::string format_key_values(KeyValues const &kv);

/// Applies recognised keys (P, Q, M, R, V, height, width, en2_mode,
/// kspace_kernel, kspace_channels, alpha, precision, init, epochs,
/// batch_size, lr_start, lr_end, seed, noise_sigma); unknown keys throw
/// ConfigError.
void apply_config(KeyValues const &kv, NetworkConfig &net, TrainConfig &train);
KeyValues config_to_key_values(NetworkConfig const &net);
KeyValues config_to_key_values(TrainConfig const &train);

struct Checkpoint
{
  NetworkParams params;
  Index steps = 0;
  std::vector<EpochRecord> history;
};

/*
 * Checkpoint = path (EN2T, 1-D complex vector of every parameter in
 * NetworkParams::parameters() order; f32 or f64 per config.precision) plus
 * path + ".manifest" (config echo, step count, parameter count, per-epoch
 * history as "epoch.N=lr train_loss val_loss").
 */
void save_checkpoint(std::filesystem::path const &path, NetworkParams const &params, Index steps,
                     std::vector<EpochRecord> const &history);
Checkpoint load_checkpoint(std::filesystem::path const &path);

std::string loss_history_csv(std::vector<EpochRecord> const &history);

struct StoredSample
{
  Index id = 0;
  std::uint64_t phantom_seed = 0;
  std::uint64_t mask_seed = 0;
  ComplexGrid image;
  ComplexGrid y_u;
  SamplingMask mask;
  BinaryGrid lung_mask;
  BinaryGrid thoracic_mask;
  BinaryGrid defect_mask;
};

struct StoredDataset
{
  std::uint64_t seed = 0;
  DatasetConfig config;
  std::vector<StoredSample> samples;
};

std::string sample_stem(Index id); // "sample_0003"

/// DIR/manifest.txt plus one EN2T file per array: <stem>_image, _kspace
/// (undersampled), _mask, _lung, _thoracic, _defect.
void write_dataset(std::filesystem::path const &dir, std::uint64_t seed, DatasetConfig const &cfg,
                   std::vector<DatasetSample> const &samples);
StoredDataset read_dataset(std::filesystem::path const &dir);

std::vector<TrainingSample> to_training_samples(std::vector<StoredSample> const &samples);

std::string format_number(double v);

} // namespace en2
