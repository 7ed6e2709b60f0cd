#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>

namespace dgflow {

/// Small arithmetic expression used for user-supplied energies, friction
/// fields and dissipation potentials in scenario files.
///
/// Grammar: numbers, named variables, `+ - * / ^` (also `**`), unary minus,
/// parentheses and the functions exp, log, sin, cos, tan, tanh, sqrt, abs,
/// sign. The constants `pi` and `e` are predefined. Derivatives are exact
/// (symbolic), so gradients and Hessians of parsed models need no finite
/// differences.
class Expression {
 public:
  using VariableMap = std::map<std::string, int>;

  Expression();  // the constant 0

  /// Throws InputError on syntax errors or unknown identifiers.
  static Expression parse(const std::string& text, const VariableMap& variables);
  static Expression constant(double value);

  double eval(std::span<const double> values) const;
  Expression derivative(int variable) const;
  bool depends_on(int variable) const;
  bool is_constant() const;
  std::string str() const;

  struct Node;

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace dgflow
