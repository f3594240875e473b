#include "en2/adam.hpp"

#include "en2/errors.hpp"

#include <cmath>

namespace en2 {

Index real_parameter_count(std::span<NamedParam const> params)
{
  Index n = 0;
  for (auto const &p : params) {
    n += 2 * p.var.value().size();
  }
  return n;
}

AdamState make_adam_state(std::span<NamedParam const> params, double learning_rate)
{
  AdamState s;
  auto const n = real_parameter_count(params);
  s.first_moment.assign(n, 0.0);
  s.second_moment.assign(n, 0.0);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(std::span<NamedParam const> params, Gradients const &grads, AdamState &state)
{
  auto const n = real_parameter_count(params);
  if (state.first_moment.size() != n || state.second_moment.size() != n) {
    throw ContractViolation("adam_step: state size does not match parameter count");
  }
  for (auto const &p : params) {
    auto it = grads.find(p.name);
    if (it == grads.end()) { throw ContractViolation("adam_step: missing gradient for " + p.name); }
    if (it->second.shape() != p.var.shape()) { throw ContractViolation("adam_step: gradient shape mismatch for " + p.name); }
  }

  state.step_count++;
  auto const t = static_cast<double>(state.step_count);
  double const c1 = 1.0 - std::pow(state.beta1, t);
  double const c2 = 1.0 - std::pow(state.beta2, t);
  Index k = 0;
  auto update = [&](std::span<double> value, std::span<double const> grad) {
    for (Index i = 0; i < value.size(); i++, k++) {
      double const g = grad[i];
      double &m = state.first_moment[k];
      double &v = state.second_moment[k];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      double const mhat = m / c1;
      double const vhat = v / c2;
      value[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  };
  for (auto const &p : params) {
    auto const &g = grads.at(p.name);
    Var handle = p.var;
    auto &value = handle.mutable_value();
    update(value.re(), g.re());
    update(value.im(), g.im());
  }
}

double lr_schedule(Index epoch, Index total_epochs, double lr_start, double lr_end)
{
  if (total_epochs < 1) { throw ContractViolation("lr_schedule: total_epochs must be >= 1"); }
  if (epoch >= total_epochs) { throw ContractViolation("lr_schedule: epoch out of range"); }
  if (lr_start < lr_end || lr_end < 0.0) { throw ContractViolation("lr_schedule: need lr_start >= lr_end >= 0"); }
  if (lr_start == lr_end || total_epochs == 1) { return lr_start; }
  if (lr_end <= 0.0) { throw ContractViolation("lr_schedule: decaying schedule needs lr_end > 0"); }
  double const frac = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_start * std::pow(lr_end / lr_start, frac);
}

} // namespace en2
