#pragma once

#include "autodiff.hpp"

#include <span>
#include <string>
#include <vector>

namespace en2 {

struct NamedParam
{
  std::string name;
  Var var;
};

struct AdamState
{
  Index step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;
};

// Real parameter count (two per complex entry).
Index real_parameter_count(std::span<NamedParam const> params);

AdamState make_adam_state(std::span<NamedParam const> params, double learning_rate);

/// One bias-corrected Adam update over every real parameter, in place.
/// Parameters are flattened in list order, real plane then imaginary plane.
void adam_step(std::span<NamedParam const> params, Gradients const &grads, AdamState &state);

/// Exponential decay from lr_start at epoch 0 to lr_end at the last epoch.
double lr_schedule(Index epoch, Index total_epochs, double lr_start, double lr_end);

} // namespace en2
