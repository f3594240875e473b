#pragma once

#include "grid.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace en2 {

class Node;

/*
 * Handle to a value in the reverse-mode graph. Complex entries are
 * differentiated as independent (re, im) pairs: the gradient stored for a
 * node is dL/dre + i dL/dim. For complex-linear maps z = w * a this gives
 * the familiar rule grad_a = conj(w) * grad_z.
 */
class Var
{
public:
  Var() = default;

  static Var constant(ComplexGrid value);
  static Var parameter(ComplexGrid value, std::string name);

  bool defined() const { return static_cast<bool>(node_); }
  ComplexGrid const &value() const;
  ComplexGrid &mutable_value();
  Shape shape() const { return value().shape(); }

  // Zero until a backward pass reaches this node.
  ComplexGrid const &grad() const;
  bool requires_grad() const;
  std::string const &name() const;
  std::string const &tag() const;

  Node *node() const { return node_.get(); }

private:
  friend class Node;
  explicit Var(std::shared_ptr<Node> n)
    : node_{std::move(n)}
  {
  }
  std::shared_ptr<Node> node_;
};

// Receives the node's upstream gradient and accumulates into its parents.
using BackwardRule = std::function<void(ComplexGrid const &upstream)>;

class Node
{
public:
  Node(ComplexGrid value, std::string tag, bool requires_grad);

  ComplexGrid value;
  std::string tag;
  std::string name; // non-empty for parameters
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardRule rule;

  // Gradient buffer, allocated to value's shape on first use.
  ComplexGrid &grad();
  ComplexGrid const &grad_or_zero() const;
  bool has_grad() const { return grad_.size() > 0 || value.size() == 0; }
  void reset_grad() { grad_ = ComplexGrid{}; }

  /// Records a new result node. When no parent needs gradients the rule and
  /// parent links are dropped, so inference builds no graph.
  static Var record(ComplexGrid value, std::string tag, std::vector<Var> const &parents, BackwardRule rule);

private:
  ComplexGrid grad_;
};

/// While alive on a thread, new results on that thread record no graph
/// (inference mode). Nests.
class NoGradGuard
{
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(NoGradGuard const &) = delete;
  NoGradGuard &operator=(NoGradGuard const &) = delete;

private:
  bool previous_;
};

bool grad_mode_enabled();

// Accumulates g into v's gradient buffer if v participates in backward.
void accumulate(Var const &v, ComplexGrid const &g);
bool needs_grad(Var const &v);

using Gradients = std::map<std::string, ComplexGrid>;

/// Runs reverse accumulation from a 1x1x1 loss node. Gradients of every
/// reachable node are reset first, so the returned map (parameter name ->
/// dloss/dparam) and the stored parameter gradients refer to this loss only.
Gradients backward(Var const &loss);

// Element-wise building blocks.
Var add(Var const &a, Var const &b);
Var sub(Var const &a, Var const &b);
Var scale(Var const &a, double s);
Var mul(Var const &a, Var const &b); // complex element-wise product
Var sum(Var const &a);               // scalar 1x1x1
Var concat_channels(std::vector<Var> const &parts);
Var mean_modulus(Var const &a);         // mean |z|, subgradient 0 at z = 0
Var mean_squared_modulus(Var const &a); // mean |z|^2

} // namespace en2
