#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ncert/interval.hpp"

namespace ncert {

// Closed-form scalar expressions in one variable `x` with named interval
// parameters. Used to describe map branches so that derivatives are exact
// symbolic objects evaluated in interval arithmetic.
enum class Op { Const, Param, Var, Add, Sub, Mul, Div, Neg, Exp, Log, Cbrt, PowI };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op;
    Interval value{};  // Const
    std::string name;  // Param
    int n = 0;         // PowI exponent
    Expr a, b;
};

using ParamMap = std::map<std::string, Interval>;

Expr constant(const Interval& v);
Expr param(const std::string& name);
Expr var();
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr cbrt(const Expr& a);
Expr powi(const Expr& a, int n);

// Grammar: + - * / ^, unary minus, parentheses, exp/log/cbrt, decimal
// literals, the variable x and parameter identifiers. Exponents are integer
// or rational literals with denominator 3, e.g. x^19, u^(1/3), u^(-2/3).
Expr parse_expr(std::string_view text);
std::string to_string(const Expr& e);

Expr derivative(const Expr& e);
bool is_constant_zero(const Expr& e);

// Flattened expression evaluated on a register tape. Parameters are bound at
// compile time; unknown parameters are an error.
class Tape {
public:
    Tape() = default;
    Tape(const Expr& e, const ParamMap& params);

    Interval eval(const Interval& x) const;
    long double eval_ld(long double x) const;  // oracle evaluation at parameter midpoints
    bool empty() const { return code_.empty(); }

private:
    struct Instr {
        Op op;
        int a = -1, b = -1, n = 0;
        Interval value{};
        long double value_ld = 0;
    };
    std::vector<Instr> code_;
};

}  // namespace ncert
