#include "en2/autodiff.hpp"

#include "en2/errors.hpp"

#include <cmath>
#include <unordered_set>

namespace en2 {

Node::Node(ComplexGrid v, std::string t, bool rg)
  : value{std::move(v)}
  , tag{std::move(t)}
  , requires_grad{rg}
{
}

ComplexGrid &Node::grad()
{
  if (grad_.shape() != value.shape()) { grad_ = ComplexGrid(value.shape()); }
  return grad_;
}

ComplexGrid const &Node::grad_or_zero() const
{
  if (grad_.shape() != value.shape()) { const_cast<Node *>(this)->grad_ = ComplexGrid(value.shape()); }
  return grad_;
}

namespace {
thread_local bool grad_enabled = true;
}

NoGradGuard::NoGradGuard()
  : previous_{grad_enabled}
{
  grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

bool grad_mode_enabled() { return grad_enabled; }

Var Node::record(ComplexGrid value, std::string tag, std::vector<Var> const &parents, BackwardRule rule)
{
  bool rg = false;
  if (!grad_enabled) { return Var{std::make_shared<Node>(std::move(value), std::move(tag), false)}; }
  for (auto const &p : parents) {
    rg = rg || needs_grad(p);
  }
  auto n = std::make_shared<Node>(std::move(value), std::move(tag), rg);
  if (rg) {
    for (auto const &p : parents) {
      if (needs_grad(p)) { n->parents.push_back(p.node_); }
    }
    n->rule = std::move(rule);
  }
  return Var{std::move(n)};
}

Var Var::constant(ComplexGrid value)
{
  return Var{std::make_shared<Node>(std::move(value), "constant", false)};
}

Var Var::parameter(ComplexGrid value, std::string name)
{
  if (name.empty()) { throw ContractViolation("parameter needs a non-empty name"); }
  auto n = std::make_shared<Node>(std::move(value), "parameter", true);
  n->name = std::move(name);
  return Var{std::move(n)};
}

ComplexGrid const &Var::value() const
{
  if (!node_) { throw ContractViolation("use of undefined Var"); }
  return node_->value;
}

ComplexGrid &Var::mutable_value()
{
  if (!node_) { throw ContractViolation("use of undefined Var"); }
  return node_->value;
}

ComplexGrid const &Var::grad() const { return node_->grad_or_zero(); }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }
std::string const &Var::name() const { return node_->name; }
std::string const &Var::tag() const { return node_->tag; }

bool needs_grad(Var const &v) { return v.requires_grad(); }

void accumulate(Var const &v, ComplexGrid const &g)
{
  if (!needs_grad(v)) { return; }
  auto &dst = v.node()->grad();
  if (dst.shape() != g.shape()) { throw ContractViolation("gradient shape mismatch in " + v.tag()); }
  auto dr = dst.re();
  auto di = dst.im();
  auto gr = g.re();
  auto gi = g.im();
  for (Index i = 0; i < dr.size(); i++) {
    dr[i] += gr[i];
    di[i] += gi[i];
  }
}

namespace {

std::vector<Node *> topological_order(Node *root)
{
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  // Iterative post-order DFS; graphs can be deep.
  std::vector<std::pair<Node *, Index>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto &[n, next] = stack.back();
    if (next < n->parents.size()) {
      Node *p = n->parents[next++].get();
      if (seen.insert(p).second) { stack.emplace_back(p, 0); }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  return order;
}

} // namespace

Gradients backward(Var const &loss)
{
  if (loss.shape() != Shape{1, 1, 1}) { throw ContractViolation("backward: loss must be a 1x1x1 scalar node"); }
  if (!loss.value().all_finite()) { throw NumericError("backward: loss is not finite (" + loss.tag() + ")"); }
  Gradients out;
  if (!loss.requires_grad()) { return out; }

  auto const order = topological_order(loss.node());
  for (auto *n : order) {
    n->reset_grad();
  }
  loss.node()->grad().re()[0] = 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (!n->rule || !n->has_grad()) { continue; }
    n->rule(n->grad());
    for (auto const &p : n->parents) {
      if (p->has_grad() && !p->grad().all_finite()) {
        throw NumericError("backward: non-finite gradient from rule '" + n->tag + "'");
      }
    }
  }

  for (auto *n : order) {
    if (n->name.empty()) { continue; }
    auto [pos, fresh] = out.try_emplace(n->name, n->grad_or_zero());
    if (!fresh) { throw ContractViolation("backward: duplicate parameter name " + n->name); }
  }
  return out;
}

namespace {

void require_same(Var const &a, Var const &b, char const *op)
{
  if (a.shape() != b.shape()) { throw ContractViolation(std::string(op) + ": shape mismatch"); }
}

ComplexGrid scaled(ComplexGrid g, double s)
{
  for (auto &v : g.re()) {
    v *= s;
  }
  for (auto &v : g.im()) {
    v *= s;
  }
  return g;
}

} // namespace

Var add(Var const &a, Var const &b)
{
  require_same(a, b, "add");
  ComplexGrid out = a.value();
  auto br = b.value().re();
  auto bi = b.value().im();
  for (Index i = 0; i < out.size(); i++) {
    out.re()[i] += br[i];
    out.im()[i] += bi[i];
  }
  return Node::record(std::move(out), "add", {a, b}, [a, b](ComplexGrid const &g) {
    accumulate(a, g);
    accumulate(b, g);
  });
}

Var sub(Var const &a, Var const &b)
{
  require_same(a, b, "sub");
  ComplexGrid out = a.value();
  auto br = b.value().re();
  auto bi = b.value().im();
  for (Index i = 0; i < out.size(); i++) {
    out.re()[i] -= br[i];
    out.im()[i] -= bi[i];
  }
  return Node::record(std::move(out), "sub", {a, b}, [a, b](ComplexGrid const &g) {
    accumulate(a, g);
    if (needs_grad(b)) { accumulate(b, scaled(g, -1.0)); }
  });
}

Var scale(Var const &a, double s)
{
  return Node::record(scaled(a.value(), s), "scale", {a}, [a, s](ComplexGrid const &g) { accumulate(a, scaled(g, s)); });
}

Var mul(Var const &a, Var const &b)
{
  require_same(a, b, "mul");
  auto const &av = a.value();
  auto const &bv = b.value();
  ComplexGrid out(av.shape());
  for (Index i = 0; i < out.size(); i++) {
    out.set(i, av.at(i) * bv.at(i));
  }
  return Node::record(std::move(out), "mul", {a, b}, [a, b](ComplexGrid const &g) {
    auto const &av = a.value();
    auto const &bv = b.value();
    if (needs_grad(a)) {
      ComplexGrid ga(g.shape());
      for (Index i = 0; i < g.size(); i++) {
        ga.set(i, g.at(i) * std::conj(bv.at(i)));
      }
      accumulate(a, ga);
    }
    if (needs_grad(b)) {
      ComplexGrid gb(g.shape());
      for (Index i = 0; i < g.size(); i++) {
        gb.set(i, g.at(i) * std::conj(av.at(i)));
      }
      accumulate(b, gb);
    }
  });
}

Var sum(Var const &a)
{
  double sr = 0.0;
  double si = 0.0;
  for (Index i = 0; i < a.value().size(); i++) {
    sr += a.value().re()[i];
    si += a.value().im()[i];
  }
  return Node::record(ComplexGrid::scalar(sr, si), "sum", {a}, [a](ComplexGrid const &g) {
    ComplexGrid ga(a.shape());
    ga.fill(g.at(0));
    accumulate(a, ga);
  });
}

Var concat_channels(std::vector<Var> const &parts)
{
  if (parts.empty()) { throw ContractViolation("concat_channels: no inputs"); }
  auto const h = parts.front().value().height();
  auto const w = parts.front().value().width();
  Index channels = 0;
  for (auto const &p : parts) {
    if (p.value().height() != h || p.value().width() != w) {
      throw ContractViolation("concat_channels: spatial shape mismatch");
    }
    channels += p.value().channels();
  }
  ComplexGrid out(channels, h, w);
  Index at = 0;
  for (auto const &p : parts) {
    auto const &v = p.value();
    std::copy(v.re().begin(), v.re().end(), out.re().begin() + at);
    std::copy(v.im().begin(), v.im().end(), out.im().begin() + at);
    at += v.size();
  }
  return Node::record(std::move(out), "concat", parts, [parts](ComplexGrid const &g) {
    Index at = 0;
    for (auto const &p : parts) {
      auto const n = p.value().size();
      if (needs_grad(p)) {
        ComplexGrid gp(p.shape());
        std::copy_n(g.re().begin() + at, n, gp.re().begin());
        std::copy_n(g.im().begin() + at, n, gp.im().begin());
        accumulate(p, gp);
      }
      at += n;
    }
  });
}

Var mean_modulus(Var const &a)
{
  auto const &v = a.value();
  if (v.size() == 0) { throw ContractViolation("mean_modulus: empty input"); }
  double s = 0.0;
  for (Index i = 0; i < v.size(); i++) {
    s += std::abs(v.at(i));
  }
  auto const n = static_cast<double>(v.size());
  return Node::record(ComplexGrid::scalar(s / n), "mean_modulus", {a}, [a, n](ComplexGrid const &g) {
    auto const &v = a.value();
    ComplexGrid ga(v.shape());
    auto const up = g.re()[0] / n;
    for (Index i = 0; i < v.size(); i++) {
      auto const m = std::abs(v.at(i));
      if (m > 0.0) { ga.set(i, up * v.at(i) / m); }
    }
    accumulate(a, ga);
  });
}

Var mean_squared_modulus(Var const &a)
{
  auto const &v = a.value();
  if (v.size() == 0) { throw ContractViolation("mean_squared_modulus: empty input"); }
  double s = 0.0;
  for (Index i = 0; i < v.size(); i++) {
    s += std::norm(v.at(i));
  }
  auto const n = static_cast<double>(v.size());
  return Node::record(ComplexGrid::scalar(s / n), "mean_squared_modulus", {a}, [a, n](ComplexGrid const &g) {
    auto const &v = a.value();
    ComplexGrid ga(v.shape());
    auto const up = 2.0 * g.re()[0] / n;
    for (Index i = 0; i < v.size(); i++) {
      ga.set(i, up * v.at(i));
    }
    accumulate(a, ga);
  });
}

} // namespace en2
