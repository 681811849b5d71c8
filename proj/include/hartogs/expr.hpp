#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "hartogs/complexcore.hpp"

namespace hartogs {

enum class ExprKind { Constant, Variable, Add, Sub, Mul, Div, Pow, Exp, Sin, Cos, Conj };

struct ExprNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    ExprKind kind;
    Complex value{};       // Constant
    int var_index = 0;     // Variable, 1-based
    long exponent = 0;     // Pow, nonnegative
    ExprNodePtr lhs, rhs;  // children; unary operators use lhs only
};

ExprNodePtr expr_const(Complex value);
ExprNodePtr expr_var(int index);
ExprNodePtr expr_binary(ExprKind kind, ExprNodePtr lhs, ExprNodePtr rhs);
ExprNodePtr expr_pow(ExprNodePtr base, long exponent);
ExprNodePtr expr_call(ExprKind kind, ExprNodePtr arg);

// An expression in the variables z1..zn. Immutable after construction and
// safe to evaluate concurrently from many threads.
class ExprAst {
  public:
    ExprAst(ExprNodePtr root, int dimension);

    const ExprNode& root() const { return *root_; }
    ExprNodePtr root_ptr() const { return root_; }
    int dimension() const { return dimension_; }
    int max_variable() const { return max_variable_; }
    // True iff the tree contains conj; such functions are admitted only as
    // witnesses for the holomorphy checker and are rejected by extension.
    bool non_holomorphic() const { return non_holomorphic_; }

  private:
    ExprNodePtr root_;
    int dimension_;
    int max_variable_;
    bool non_holomorphic_;
};

// Grammar: variables z1..zn, decimal literals (optional trailing `i`), the
// imaginary unit `i`, operators + - * / ^ with standard precedence (^ binds
// tightest, right-associative, nonnegative integer exponents only),
// parentheses, functions exp/sin/cos/conj, insignificant whitespace.
ExprAst parse(std::string_view text, int dimension);

struct EvalContext {
    int n;
    ComplexPoint point;

    EvalContext(int n_, ComplexPoint point_) : n(n_), point(std::move(point_)) {
        if (point.dim() != n)
            throw Error("evaluation context dimension mismatch");
    }
};

Complex evaluate(const ExprAst& ast, const EvalContext& ctx);
Complex evaluate(const ExprAst& ast, const ComplexPoint& z);

std::string to_string(const ExprAst& ast);
bool structurally_equal(const ExprAst& a, const ExprAst& b);

// |df/dz̄_slot| by central differences with step h in the real and imaginary
// directions of the slot-th coordinate; vanishes where f is holomorphic.
double wirtinger_residual(const std::function<Complex(const ComplexPoint&)>& f,
                          const ComplexPoint& z, int slot, double h);
double wirtinger_residual(const ExprAst& ast, const ComplexPoint& z, int slot,
                          double h = 1e-5);

}  // namespace hartogs
