#pragma once

#include "en2/autodiff.hpp"
#include "en2/grid.hpp"
#include "en2/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace en2::test {

inline ComplexGrid random_grid(Rng &rng, Index c, Index h, Index w, double scale = 1.0)
{
  ComplexGrid g(c, h, w);
  for (Index i = 0; i < g.size(); i++) {
    g.re()[i] = scale * rng.uniform(-1.0, 1.0);
    g.im()[i] = scale * rng.uniform(-1.0, 1.0);
  }
  return g;
}

inline Var random_parameter(Rng &rng, std::string name, Index c, Index h, Index w, double scale = 1.0)
{
  return Var::parameter(random_grid(rng, c, h, w, scale), std::move(name));
}

// Re(sum(c * out)) for a fixed random c: a smooth scalar probe of any output.
inline Var projection(Var const &out, Rng &rng)
{
  auto const s = out.shape();
  return sum(mul(Var::constant(random_grid(rng, s.channels, s.height, s.width)), out));
}

struct FdReport
{
  double max_rel = 0.0;
  Index checked = 0;
};

inline double relative_error(double analytic, double numeric)
{
  double const a = std::abs(analytic);
  double const n = std::abs(numeric);
  if (a < 1e-8 && n < 1e-8) { return -1.0; }
  return std::abs(analytic - numeric) / std::max(a, n);
}

/*
 * Central differences on every real scalar of the given parameters (or
 * `per_param` randomly chosen ones when non-zero). loss_fn rebuilds the graph
 * from the current parameter values.
 */
inline FdReport finite_difference(std::vector<Var> const &params, std::function<Var()> const &loss_fn,
                                  Index per_param = 0, std::uint64_t seed = 1, double h = 1e-5)
{
  auto const loss = loss_fn();
  backward(loss);
  std::vector<ComplexGrid> analytic;
  for (auto const &p : params) {
    analytic.push_back(p.grad());
  }
  auto eval = [&] {
    NoGradGuard guard;
    return loss_fn().value().re()[0];
  };

  FdReport report;
  Rng pick(seed);
  for (Index p = 0; p < params.size(); p++) {
    Var v = params[p];
    auto const n = v.value().size();
    std::vector<Index> entries;
    if (per_param == 0 || per_param >= 2 * n) {
      for (Index i = 0; i < 2 * n; i++) {
        entries.push_back(i);
      }
    } else {
      for (Index k = 0; k < per_param; k++) {
        entries.push_back(pick.below(2 * n));
      }
    }
    for (auto const e : entries) {
      bool const imag = e >= n;
      auto const i = imag ? e - n : e;
      auto plane = imag ? v.mutable_value().im() : v.mutable_value().re();
      double const saved = plane[i];
      plane[i] = saved + h;
      double const up = eval();
      plane[i] = saved - h;
      double const down = eval();
      plane[i] = saved;
      double const numeric = (up - down) / (2.0 * h);
      double const a = imag ? analytic[p].im()[i] : analytic[p].re()[i];
      double const rel = relative_error(a, numeric);
      if (rel < 0.0) { continue; }
      report.max_rel = std::max(report.max_rel, rel);
      report.checked++;
    }
  }
  return report;
}

} // namespace en2::test
