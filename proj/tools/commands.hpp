#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace en2::cli {

enum ExitCode : int
{
  kOk = 0,
  kConfig = 2,
  kIo = 3,
  kNumeric = 4,
};

struct GenDataArgs
{
  std::size_t n = 0;
  std::string size;
  std::uint64_t seed = 0;
  std::string out;
  double af = 4.0;
  double center_fraction = 0.08;
  double noise_sigma = 0.0;
  std::size_t min_defects = 0;
  std::size_t max_defects = 4;
  double defect_intensity = 0.1;
};

struct MaskArgs
{
  std::string size;
  double af = 4.0;
  double center_fraction = 0.08;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs
{
  std::string data;
  std::string config;
  std::string val_data;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  double val_fraction = 0.1;
  std::string out;
};

struct ReconArgs
{
  std::string ckpt;
  bool zero_filled = false;
  std::string input;
  std::string mask;
  std::string data; // batch mode: dataset directory
  std::string out;
  std::string pgm;
};

struct EvalArgs
{
  std::string ref;
  std::string rec;
  std::string masks;
  std::string thoracic;
  std::optional<double> af;
  std::size_t clusters = 4;
  std::string out;
};

// Each returns a process exit code; failures are reported on stderr.
int gen_data(GenDataArgs const &args);
int mask(MaskArgs const &args);
int train(TrainArgs const &args);
int recon(ReconArgs const &args);
int eval(EvalArgs const &args);

} // namespace en2::cli
