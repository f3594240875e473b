#include "en2/random.hpp"

#include <cmath>
#include <numbers>

namespace en2 {

std::uint64_t splitmix64(std::uint64_t &state)
{
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index)
{
  std::uint64_t state = master;
  auto a = splitmix64(state);
  state = a ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL);
  auto b = splitmix64(state);
  state = b ^ (index * 0x8cb92ba72f3d8dd7ULL);
  return splitmix64(state);
}

Rng::Rng(std::uint64_t seed)
  : engine_{seed}
{
}

Rng::Rng(std::uint64_t master, Stream stream, std::uint64_t index)
  : engine_{derive_seed(master, stream, index)}
{
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal()
{
  // 1 - u keeps the log argument in (0, 1].
  double const u1 = 1.0 - uniform();
  double const u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n)
{
  auto const k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

} // namespace en2
