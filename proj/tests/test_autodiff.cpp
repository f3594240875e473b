#include "support.hpp"

#include "en2/adam.hpp"
#include "en2/errors.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace en2;
using en2::test::finite_difference;
using en2::test::projection;
using en2::test::random_parameter;

TEST(Backward, SumGivesOnesInRealPlane)
{
  ComplexGrid v(1, 2, 2);
  v.fill({0.3, -1.2});
  auto p = Var::parameter(v, "p");
  auto const grads = backward(sum(p));
  ASSERT_EQ(grads.count("p"), 1u);
  for (Index i = 0; i < 4; i++) {
    EXPECT_EQ(grads.at("p").re()[i], 1.0);
    EXPECT_EQ(grads.at("p").im()[i], 0.0);
  }
}

TEST(Backward, SquaredModulusGivesTwiceValue)
{
  ComplexGrid v(1, 2, 2);
  v.fill({3.0, 4.0});
  v.set(3, {-1.5, 0.5});
  auto p = Var::parameter(v, "p");
  auto const grads = backward(scale(mean_squared_modulus(p), 4.0));
  for (Index i = 0; i < 4; i++) {
    EXPECT_DOUBLE_EQ(grads.at("p").re()[i], 2.0 * v.re()[i]);
    EXPECT_DOUBLE_EQ(grads.at("p").im()[i], 2.0 * v.im()[i]);
  }
}

TEST(Backward, RejectsNonScalarLoss)
{
  auto p = Var::parameter(ComplexGrid(1, 2, 2), "p");
  EXPECT_THROW(backward(p), ContractViolation);
}

TEST(Backward, NonFiniteGradientNamesTheRule)
{
  auto p = Var::parameter(ComplexGrid(1, 1, 3), "p");
  auto bad = Node::record(ComplexGrid(1, 1, 3), "poisoned_rule", {p}, [p](ComplexGrid const &) {
    ComplexGrid g(p.shape());
    g.fill({std::numeric_limits<double>::quiet_NaN(), 0.0});
    accumulate(p, g);
  });
  try {
    backward(sum(bad));
    FAIL() << "expected NumericError";
  } catch (NumericError const &e) {
    EXPECT_NE(std::string(e.what()).find("poisoned_rule"), std::string::npos);
  }
}

TEST(Backward, NonFiniteLossIsNumericError)
{
  ComplexGrid v(1, 1, 1);
  v.fill({std::numeric_limits<double>::infinity(), 0.0});
  EXPECT_THROW(backward(sum(Var::parameter(v, "p"))), NumericError);
}

TEST(Backward, RepeatedCallsDoNotAccumulate)
{
  Rng rng(3);
  auto p = random_parameter(rng, "p", 1, 3, 3);
  auto const loss = mean_squared_modulus(p);
  auto const first = backward(loss).at("p");
  auto const second = backward(loss).at("p");
  EXPECT_EQ(first, second);
}

TEST(Backward, SharedSubgraphAccumulates)
{
  Rng rng(4);
  auto p = random_parameter(rng, "p", 1, 2, 3);
  auto const grads = backward(sum(add(p, p)));
  for (Index i = 0; i < 6; i++) {
    EXPECT_EQ(grads.at("p").re()[i], 2.0);
  }
}

TEST(Backward, ConstantsReceiveNoGradientEntry)
{
  Rng rng(5);
  auto c = Var::constant(en2::test::random_grid(rng, 1, 2, 2));
  auto p = random_parameter(rng, "p", 1, 2, 2);
  auto const grads = backward(sum(mul(c, p)));
  EXPECT_EQ(grads.size(), 1u);
  EXPECT_FALSE(c.requires_grad());
}

TEST(NoGrad, GuardSuppressesGraph)
{
  Rng rng(6);
  auto p = random_parameter(rng, "p", 1, 2, 2);
  EXPECT_TRUE(grad_mode_enabled());
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_mode_enabled());
    auto y = mul(p, p);
    EXPECT_FALSE(y.requires_grad());
    EXPECT_TRUE(y.node()->parents.empty());
    {
      NoGradGuard inner;
    }
    EXPECT_FALSE(grad_mode_enabled());
  }
  EXPECT_TRUE(grad_mode_enabled());
  EXPECT_TRUE(mul(p, p).requires_grad());
}

class ElementwiseGradient : public ::testing::TestWithParam<std::uint64_t>
{
};

TEST_P(ElementwiseGradient, MatchesFiniteDifferences)
{
  Rng rng(GetParam());
  auto a = random_parameter(rng, "a", 2, 3, 4);
  auto b = random_parameter(rng, "b", 2, 3, 4);
  auto c = random_parameter(rng, "c", 1, 3, 4);
  auto probe_rng = [&] { return Rng(GetParam() + 100); };

  struct Case
  {
    char const *name;
    std::vector<Var> params;
    std::function<Var()> fn;
  };
  std::vector<Case> const cases = {
    {"add", {a, b}, [&] { auto r = probe_rng(); return projection(add(a, b), r); }},
    {"sub", {a, b}, [&] { auto r = probe_rng(); return projection(sub(a, b), r); }},
    {"scale", {a}, [&] { auto r = probe_rng(); return projection(scale(a, -1.7), r); }},
    {"mul", {a, b}, [&] { auto r = probe_rng(); return projection(mul(a, b), r); }},
    {"concat", {a, c}, [&] { auto r = probe_rng(); return projection(concat_channels({a, c, a}), r); }},
    {"mean_modulus", {a}, [&] { return mean_modulus(mul(a, b)); }},
    {"mean_squared_modulus", {a, b}, [&] { return mean_squared_modulus(sub(a, b)); }},
  };
  for (auto const &cs : cases) {
    auto const report = finite_difference(cs.params, cs.fn);
    EXPECT_GT(report.checked, 0u) << cs.name;
    EXPECT_LT(report.max_rel, 1e-4) << cs.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, ElementwiseGradient, ::testing::Values(1, 2, 3, 4, 5));

TEST(Backward, IsLinearInTheLoss)
{
  Rng rng(11);
  auto p = random_parameter(rng, "p", 1, 4, 4);
  auto q = Var::constant(en2::test::random_grid(rng, 1, 4, 4));
  auto f = [&] { return mean_squared_modulus(mul(p, q)); };
  auto g = [&] { return mean_modulus(sub(p, q)); };
  double const a = 0.75;
  double const b = -2.5;
  auto const gf = backward(f()).at("p");
  auto const gg = backward(g()).at("p");
  auto const gl = backward(add(scale(f(), a), scale(g(), b))).at("p");
  for (Index i = 0; i < gl.size(); i++) {
    EXPECT_NEAR(gl.re()[i], a * gf.re()[i] + b * gg.re()[i], 1e-12);
    EXPECT_NEAR(gl.im()[i], a * gf.im()[i] + b * gg.im()[i], 1e-12);
  }
}

TEST(Backward, DeterministicAcrossRuns)
{
  auto run = [] {
    Rng rng(21);
    auto p = random_parameter(rng, "p", 2, 5, 5);
    auto q = random_parameter(rng, "q", 2, 5, 5);
    return backward(add(mean_modulus(mul(p, q)), mean_squared_modulus(sub(p, q))));
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, ModulusSubgradientAtZeroIsZero)
{
  auto p = Var::parameter(ComplexGrid(1, 1, 2), "p");
  auto const g = backward(mean_modulus(p)).at("p");
  EXPECT_EQ(g.re()[0], 0.0);
  EXPECT_EQ(g.im()[1], 0.0);
}

namespace {

std::vector<NamedParam> single(double re, double im, std::string name = "w")
{
  ComplexGrid v(1, 1, 1);
  v.set(0, {re, im});
  return {{name, Var::parameter(v, name)}};
}

} // namespace

TEST(Adam, ZeroGradientLeavesParametersUnchanged)
{
  Rng rng(1);
  std::vector<NamedParam> params = {{"a", random_parameter(rng, "a", 1, 3, 3)}};
  auto const before = params[0].var.value();
  auto state = make_adam_state(params, 1e-3);
  adam_step(params, Gradients{{"a", ComplexGrid(1, 3, 3)}}, state);
  EXPECT_EQ(params[0].var.value(), before);
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, FirstStepWithUnitGradient)
{
  auto params = single(0.5, 0.25);
  auto state = make_adam_state(params, 1e-3);
  Gradients g{{"w", ComplexGrid::scalar(1.0, 0.0)}};
  adam_step(params, g, state);
  double const expected = 0.5 - 1e-3 * 1.0 / (1.0 + 1e-8);
  EXPECT_NEAR(params[0].var.value().re()[0], expected, 1e-16);
  EXPECT_LT(params[0].var.value().re()[0] - 0.5, -0.000999999);
  EXPECT_EQ(params[0].var.value().im()[0], 0.25);
}

TEST(Adam, MatchesRecurrenceOverSeveralSteps)
{
  auto params = single(1.0, -1.0);
  auto state = make_adam_state(params, 2e-3);
  double const b1 = 0.9;
  double const b2 = 0.999;
  double m = 0.0;
  double v = 0.0;
  double w = 1.0;
  double const gs[] = {0.3, -1.1, 2.4, 0.05, -0.7};
  for (int t = 1; t <= 5; t++) {
    double const g = gs[t - 1];
    adam_step(params, Gradients{{"w", ComplexGrid::scalar(g, 0.0)}}, state);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double const mh = m / (1 - std::pow(b1, t));
    double const vh = v / (1 - std::pow(b2, t));
    w -= 2e-3 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(params[0].var.value().re()[0], w, 1e-15);
  }
  for (auto const s : state.second_moment) {
    EXPECT_GE(s, 0.0);
  }
}

TEST(Adam, IdenticalParametersStayIdentical)
{
  auto a = single(0.1, 0.2, "a");
  auto b = single(0.1, 0.2, "b");
  std::vector<NamedParam> params = {a[0], b[0]};
  auto state = make_adam_state(params, 1e-2);
  for (int t = 0; t < 4; t++) {
    auto const g = ComplexGrid::scalar(0.3 * t - 0.5, 0.1 * t);
    adam_step(params, Gradients{{"a", g}, {"b", g}}, state);
  }
  EXPECT_EQ(params[0].var.value(), params[1].var.value());
}

TEST(Adam, DimensionMismatchIsContractViolation)
{
  auto params = single(0.0, 0.0);
  auto state = make_adam_state(params, 1e-3);
  EXPECT_THROW(adam_step(params, Gradients{}, state), ContractViolation);
  EXPECT_THROW(adam_step(params, Gradients{{"w", ComplexGrid(1, 1, 2)}}, state), ContractViolation);
  state.first_moment.pop_back();
  EXPECT_THROW(adam_step(params, Gradients{{"w", ComplexGrid::scalar(1.0)}}, state), ContractViolation);
}

TEST(Adam, StateCountsTwoRealsPerComplexEntry)
{
  Rng rng(2);
  std::vector<NamedParam> params = {{"a", random_parameter(rng, "a", 2, 3, 4)}, {"b", random_parameter(rng, "b", 1, 1, 5)}};
  EXPECT_EQ(real_parameter_count(params), 2u * (24 + 5));
  EXPECT_EQ(make_adam_state(params, 1e-3).first_moment.size(), 58u);
}

TEST(LearningRate, EndpointsAndShape)
{
  EXPECT_DOUBLE_EQ(lr_schedule(0, 200, 1e-3, 1e-5), 1e-3);
  EXPECT_NEAR(lr_schedule(199, 200, 1e-3, 1e-5), 1e-5, 1e-18);
  EXPECT_NEAR(lr_schedule(1, 3, 1e-3, 1e-5), 1e-4, 1e-17);
  double prev = 1.0;
  for (Index e = 0; e < 50; e++) {
    double const lr = lr_schedule(e, 50, 1e-3, 1e-5);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(LearningRate, ConstantWhenStartEqualsEnd)
{
  for (Index e = 0; e < 10; e++) {
    EXPECT_EQ(lr_schedule(e, 10, 5e-4, 5e-4), 5e-4);
    EXPECT_EQ(lr_schedule(e, 10, 0.0, 0.0), 0.0);
  }
  EXPECT_EQ(lr_schedule(0, 1, 1e-3, 1e-5), 1e-3);
}

TEST(LearningRate, RejectsBadArguments)
{
  EXPECT_THROW(lr_schedule(0, 0, 1e-3, 1e-5), ContractViolation);
  EXPECT_THROW(lr_schedule(5, 5, 1e-3, 1e-5), ContractViolation);
  EXPECT_THROW(lr_schedule(0, 5, 1e-5, 1e-3), ContractViolation);
}
