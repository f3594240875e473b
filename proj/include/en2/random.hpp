#pragma once

#include <cstdint>
#include <random>

namespace en2 {

/*
 * Random streams. Every stochastic step (masks, phantoms, noise, weight
 * initialisation, batch shuffling) draws from std::mt19937_64 seeded with
 * derive_seed(master, stream, index), where derive_seed is a SplitMix64 mix.
 * Uniforms use the top 53 bits of one draw; normals use Box-Muller on two
 * uniforms. Both engines are fully specified, so streams are reproducible
 * across platforms and implementations.
 */
enum class Stream : std::uint64_t
{
  Mask = 1,
  Phantom = 2,
  Noise = 3,
  Init = 4,
  Shuffle = 5,
  Dataset = 6,
};

std::uint64_t splitmix64(std::uint64_t &state);
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0);

class Rng
{
public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t master, Stream stream, std::uint64_t index = 0);

  std::uint64_t next() { return engine_(); }
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // N(0, 1)
  std::uint64_t below(std::uint64_t n);  // [0, n)

private:
  std::mt19937_64 engine_;
};

} // namespace en2
