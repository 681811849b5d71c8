#include "hartogs/expr.hpp"

#include <cctype>
#include <cmath>
#include <utility>

#include "hartogs/format.hpp"

namespace hartogs {

ExprNodePtr expr_const(Complex value) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Constant;
    n->value = value;
    return n;
}

ExprNodePtr expr_var(int index) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Variable;
    n->var_index = index;
    return n;
}

ExprNodePtr expr_binary(ExprKind kind, ExprNodePtr lhs, ExprNodePtr rhs) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

ExprNodePtr expr_pow(ExprNodePtr base, long exponent) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Pow;
    n->lhs = std::move(base);
    n->exponent = exponent;
    return n;
}

ExprNodePtr expr_call(ExprKind kind, ExprNodePtr arg) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->lhs = std::move(arg);
    return n;
}

namespace {

void scan_tree(const ExprNode& node, int& max_var, bool& has_conj) {
    switch (node.kind) {
        case ExprKind::Constant:
            if (!is_finite(node.value)) throw Error("non-finite constant in expression");
            return;
        case ExprKind::Variable:
            if (node.var_index < 1) throw Error("variable index must be >= 1");
            max_var = std::max(max_var, node.var_index);
            return;
        case ExprKind::Pow:
            if (node.exponent < 0) throw Error("negative exponent in expression");
            if (!node.lhs) throw Error("malformed expression node");
            scan_tree(*node.lhs, max_var, has_conj);
            return;
        case ExprKind::Conj:
            has_conj = true;
            [[fallthrough]];
        case ExprKind::Exp:
        case ExprKind::Sin:
        case ExprKind::Cos:
            if (!node.lhs) throw Error("malformed expression node");
            scan_tree(*node.lhs, max_var, has_conj);
            return;
        default:
            if (!node.lhs || !node.rhs) throw Error("malformed expression node");
            scan_tree(*node.lhs, max_var, has_conj);
            scan_tree(*node.rhs, max_var, has_conj);
            return;
    }
}

}  // namespace

ExprAst::ExprAst(ExprNodePtr root, int dimension)
    : root_(std::move(root)), dimension_(dimension), max_variable_(0), non_holomorphic_(false) {
    if (!root_) throw Error("empty expression");
    if (dimension_ < 1) throw Error("expression dimension must be >= 1");
    scan_tree(*root_, max_variable_, non_holomorphic_);
    if (max_variable_ > dimension_)
        throw Error("variable z" + std::to_string(max_variable_) + " exceeds dimension " +
                    std::to_string(dimension_));
}

// ---------------------------------------------------------------------------
// Parser: plain recursive descent over bytes, offsets reported on error.

namespace {

class Parser {
  public:
    Parser(std::string_view text, int dimension) : text_(text), n_(dimension) {}

    ExprNodePtr run() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
        ExprNodePtr e = parse_sum();
        skip_ws();
        if (pos_ < text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return e;
    }

  private:
    std::string_view text_;
    int n_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExprNodePtr parse_sum() {
        ExprNodePtr lhs = parse_product();
        for (;;) {
            if (accept('+'))
                lhs = expr_binary(ExprKind::Add, lhs, parse_product());
            else if (accept('-'))
                lhs = expr_binary(ExprKind::Sub, lhs, parse_product());
            else
                return lhs;
        }
    }

    ExprNodePtr parse_product() {
        ExprNodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = expr_binary(ExprKind::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = expr_binary(ExprKind::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    ExprNodePtr parse_unary() {
        if (accept('+')) return parse_unary();
        if (accept('-')) return expr_binary(ExprKind::Sub, expr_const(0.0), parse_unary());
        return parse_power();
    }

    ExprNodePtr parse_power() {
        ExprNodePtr base = parse_atom();
        skip_ws();
        if (accept('^')) return expr_pow(base, parse_exponent());
        return base;
    }

    // Exponents are nonnegative integer literals; a nested ^ folds
    // right-associatively at parse time (2^3 in an exponent becomes 8).
    long parse_exponent() {
        skip_ws();
        std::size_t start = pos_;
        if (accept('(')) {
            long v = parse_exponent();
            if (!accept(')')) throw ParseError("expected ')' in exponent", pos_);
            return v;
        }
        if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
            if (text_[pos_] == '-') throw ParseError("negative exponent not allowed", pos_);
            ++pos_;
        }
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            throw ParseError("exponent must be a nonnegative integer", pos_);
        long v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            if (v > 1000000) throw ParseError("exponent too large", start);
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'i'))
            throw ParseError("exponent must be a nonnegative integer", start);
        skip_ws();
        if (accept('^')) {
            long e = parse_exponent();
            long r = 1;
            for (long k = 0; k < e; ++k) {
                r *= v;
                if (r > 1000000) throw ParseError("exponent too large", start);
            }
            return r;
        }
        return v;
    }

    ExprNodePtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
        char c = text_[pos_];
        if (accept('(')) {
            ExprNodePtr e = parse_sum();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    ExprNodePtr parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() &&
                       std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = mark;  // the 'e' was not an exponent marker
            }
        }
        std::string num(text_.substr(start, pos_ - start));
        if (num == ".") throw ParseError("malformed number", start);
        double v = 0.0;
        try {
            v = std::stod(num);
        } catch (const std::exception&) {
            throw ParseError("malformed number '" + num + "'", start);
        }
        if (pos_ < text_.size() && text_[pos_] == 'i') {
            ++pos_;
            return expr_const(Complex(0.0, v));
        }
        return expr_const(v);
    }

    ExprNodePtr parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               std::isalnum(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);
        if (name == "i") return expr_const(Complex(0.0, 1.0));
        if (name == "exp" || name == "sin" || name == "cos" || name == "conj") {
            if (!accept('(')) throw ParseError("expected '(' after function name", pos_);
            ExprNodePtr arg = parse_sum();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            ExprKind k = name == "exp"   ? ExprKind::Exp
                         : name == "sin" ? ExprKind::Sin
                         : name == "cos" ? ExprKind::Cos
                                         : ExprKind::Conj;
            return expr_call(k, arg);
        }
        if (name.size() >= 2 && name[0] == 'z') {
            int idx = 0;
            for (std::size_t k = 1; k < name.size(); ++k) {
                if (!std::isdigit(static_cast<unsigned char>(name[k])))
                    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
                idx = idx * 10 + (name[k] - '0');
                if (idx > 1000) throw ParseError("variable index too large", start);
            }
            if (idx < 1) throw ParseError("variable indices start at z1", start);
            if (idx > n_)
                throw ParseError("variable z" + std::to_string(idx) + " exceeds dimension " +
                                     std::to_string(n_),
                                 start);
            return expr_var(idx);
        }
        throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }
};

}  // namespace

ExprAst parse(std::string_view text, int dimension) {
    if (dimension < 1) throw Error("expression dimension must be >= 1");
    Parser p(text, dimension);
    return ExprAst(p.run(), dimension);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

Complex eval_node(const ExprNode& node, const ComplexPoint& z) {
    switch (node.kind) {
        case ExprKind::Constant:
            return node.value;
        case ExprKind::Variable:
            return z[node.var_index - 1];
        case ExprKind::Add:
            return eval_node(*node.lhs, z) + eval_node(*node.rhs, z);
        case ExprKind::Sub:
            return eval_node(*node.lhs, z) - eval_node(*node.rhs, z);
        case ExprKind::Mul:
            return eval_node(*node.lhs, z) * eval_node(*node.rhs, z);
        case ExprKind::Div: {
            Complex num = eval_node(*node.lhs, z);
            Complex den = eval_node(*node.rhs, z);
            if (den.real() == 0.0 && den.imag() == 0.0)
                throw EvaluationError("division by zero at point " + format_point(z));
            return num / den;
        }
        case ExprKind::Pow: {
            Complex base = eval_node(*node.lhs, z);
            Complex acc = 1.0;
            Complex sq = base;
            long e = node.exponent;
            while (e > 0) {
                if (e & 1) acc *= sq;
                sq *= sq;
                e >>= 1;
            }
            return acc;
        }
        case ExprKind::Exp:
            return std::exp(eval_node(*node.lhs, z));
        case ExprKind::Sin:
            return std::sin(eval_node(*node.lhs, z));
        case ExprKind::Cos:
            return std::cos(eval_node(*node.lhs, z));
        case ExprKind::Conj:
            return std::conj(eval_node(*node.lhs, z));
    }
    throw Error("unreachable expression kind");
}

}  // namespace

Complex evaluate(const ExprAst& ast, const ComplexPoint& z) {
    if (z.dim() < ast.max_variable())
        throw Error("evaluation point dimension below the expression's variable range");
    Complex v = eval_node(ast.root(), z);
    if (!is_finite(v))
        throw EvaluationError("expression overflowed to non-finite at point " + format_point(z));
    return v;
}

Complex evaluate(const ExprAst& ast, const EvalContext& ctx) {
    return evaluate(ast, ctx.point);
}

// ---------------------------------------------------------------------------
// Printing and structural comparison

namespace {

int precedence(const ExprNode& n) {
    switch (n.kind) {
        case ExprKind::Add:
        case ExprKind::Sub:
            return 1;
        case ExprKind::Mul:
        case ExprKind::Div:
            return 2;
        case ExprKind::Pow:
            return 3;
        default:
            return 4;
    }
}

void print_node(const ExprNode& n, std::string& out);

void print_child(const ExprNode& child, int parent_prec, bool is_right, std::string& out) {
    int cp = precedence(child);
    bool parens = is_right ? cp <= parent_prec : cp < parent_prec;
    if (parens) out += "(";
    print_node(child, out);
    if (parens) out += ")";
}

void print_node(const ExprNode& n, std::string& out) {
    switch (n.kind) {
        case ExprKind::Constant:
            if (n.value.imag() == 0.0 && n.value.real() >= 0.0) {
                out += format_double(n.value.real());
            } else if (n.value.real() == 0.0 && n.value.imag() >= 0.0) {
                out += format_double(n.value.imag());
                out += "i";
            } else {
                // Not producible by the parser; printed as explicit arithmetic.
                out += "(" + format_double(n.value.real()) + " + " +
                       format_double(n.value.imag()) + "i)";
            }
            return;
        case ExprKind::Variable:
            out += "z" + std::to_string(n.var_index);
            return;
        case ExprKind::Add:
            print_child(*n.lhs, 1, false, out);
            out += " + ";
            print_child(*n.rhs, 1, true, out);
            return;
        case ExprKind::Sub:
            print_child(*n.lhs, 1, false, out);
            out += " - ";
            print_child(*n.rhs, 1, true, out);
            return;
        case ExprKind::Mul:
            print_child(*n.lhs, 2, false, out);
            out += " * ";
            print_child(*n.rhs, 2, true, out);
            return;
        case ExprKind::Div:
            print_child(*n.lhs, 2, false, out);
            out += " / ";
            print_child(*n.rhs, 2, true, out);
            return;
        case ExprKind::Pow:
            print_child(*n.lhs, 3, true, out);
            out += "^" + std::to_string(n.exponent);
            return;
        case ExprKind::Exp:
        case ExprKind::Sin:
        case ExprKind::Cos:
        case ExprKind::Conj:
            out += n.kind == ExprKind::Exp   ? "exp("
                   : n.kind == ExprKind::Sin ? "sin("
                   : n.kind == ExprKind::Cos ? "cos("
                                             : "conj(";
            print_node(*n.lhs, out);
            out += ")";
            return;
    }
}

bool nodes_equal(const ExprNode& a, const ExprNode& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ExprKind::Constant:
            return a.value == b.value;
        case ExprKind::Variable:
            return a.var_index == b.var_index;
        case ExprKind::Pow:
            return a.exponent == b.exponent && nodes_equal(*a.lhs, *b.lhs);
        case ExprKind::Exp:
        case ExprKind::Sin:
        case ExprKind::Cos:
        case ExprKind::Conj:
            return nodes_equal(*a.lhs, *b.lhs);
        default:
            return nodes_equal(*a.lhs, *b.lhs) && nodes_equal(*a.rhs, *b.rhs);
    }
}

}  // namespace

std::string to_string(const ExprAst& ast) {
    std::string out;
    print_node(ast.root(), out);
    return out;
}

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
    return a.dimension() == b.dimension() && nodes_equal(a.root(), b.root());
}

// ---------------------------------------------------------------------------
// Numerical holomorphy check

double wirtinger_residual(const std::function<Complex(const ComplexPoint&)>& f,
                          const ComplexPoint& z, int slot, double h) {
    check_slot(slot, z.dim());
    if (!(h > 0.0)) throw Error("wirtinger step must be positive");
    auto shifted = [&](Complex delta) {
        std::vector<Complex> coords = z.coords();
        coords[static_cast<std::size_t>(slot - 1)] += delta;
        return ComplexPoint(std::move(coords));
    };
    Complex fxp = f(shifted(Complex(h, 0.0)));
    Complex fxm = f(shifted(Complex(-h, 0.0)));
    Complex fyp = f(shifted(Complex(0.0, h)));
    Complex fym = f(shifted(Complex(0.0, -h)));
    if (!is_finite(fxp) || !is_finite(fxm) || !is_finite(fyp) || !is_finite(fym))
        throw EvaluationError("non-finite value in finite-difference stencil at " +
                              format_point(z));
    Complex fx = (fxp - fxm) / (2.0 * h);
    Complex fy = (fyp - fym) / (2.0 * h);
    return std::abs(0.5 * (fx + Complex(0.0, 1.0) * fy));
}

double wirtinger_residual(const ExprAst& ast, const ComplexPoint& z, int slot, double h) {
    return wirtinger_residual(
        [&ast](const ComplexPoint& p) { return evaluate(ast, p); }, z, slot, h);
}

}  // namespace hartogs
