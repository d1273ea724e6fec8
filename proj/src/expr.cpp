#include "ncert/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ncert {

namespace {

Expr make(Op op, Expr a = nullptr, Expr b = nullptr, int n = 0) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->a = std::move(a);
    node->b = std::move(b);
    node->n = n;
    return node;
}

bool is_const(const Expr& e) { return e->op == Op::Const; }
bool is_const_value(const Expr& e, double v) {
    return e->op == Op::Const && e->value.lo == v && e->value.hi == v;
}

}  // namespace

Expr constant(const Interval& v) {
    auto node = std::make_shared<Node>();
    node->op = Op::Const;
    node->value = v;
    return node;
}

Expr param(const std::string& name) {
    auto node = std::make_shared<Node>();
    node->op = Op::Param;
    node->name = name;
    return node;
}

Expr var() { return make(Op::Var); }

bool is_constant_zero(const Expr& e) { return is_const_value(e, 0.0); }

Expr operator+(const Expr& a, const Expr& b) {
    if (is_const(a) && is_const(b)) return constant(a->value + b->value);
    if (is_constant_zero(a)) return b;
    if (is_constant_zero(b)) return a;
    return make(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (is_const(a) && is_const(b)) return constant(a->value - b->value);
    if (is_constant_zero(b)) return a;
    if (is_constant_zero(a)) return -b;
    return make(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (is_const(a) && is_const(b)) return constant(a->value * b->value);
    if (is_constant_zero(a) || is_constant_zero(b)) return constant(0.0);
    if (is_const_value(a, 1.0)) return b;
    if (is_const_value(b, 1.0)) return a;
    if (is_const_value(a, -1.0)) return -b;
    if (is_const_value(b, -1.0)) return -a;
    return make(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (is_const(a) && is_const(b)) return constant(a->value / b->value);
    if (is_constant_zero(a)) return constant(0.0);
    if (is_const_value(b, 1.0)) return a;
    return make(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
    if (is_const(a)) return constant(-a->value);
    if (a->op == Op::Neg) return a->a;
    return make(Op::Neg, a);
}

Expr exp(const Expr& a) {
    if (is_const(a)) return constant(exp(a->value));
    return make(Op::Exp, a);
}

Expr log(const Expr& a) {
    if (is_const(a)) return constant(log(a->value));
    return make(Op::Log, a);
}

Expr cbrt(const Expr& a) {
    if (is_const(a)) return constant(cbrt(a->value));
    return make(Op::Cbrt, a);
}

Expr powi(const Expr& a, int n) {
    if (n == 0) return constant(1.0);
    if (n == 1) return a;
    if (is_const(a)) return constant(pow_int(a->value, n));
    return make(Op::PowI, a, nullptr, n);
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse() {
        Expr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    std::string_view s_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression parse error at " + std::to_string(pos_) + ": " +
                                    what + " in '" + std::string(s_) + "'");
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Expr expr() {
        Expr e = term();
        for (;;) {
            if (accept('+')) e = e + term();
            else if (accept('-')) e = e - term();
            else return e;
        }
    }
    Expr term() {
        Expr e = unary();
        for (;;) {
            if (accept('*')) e = e * unary();
            else if (accept('/')) e = e / unary();
            else return e;
        }
    }
    Expr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }
    Expr power() {
        Expr base = primary();
        if (!accept('^')) return base;
        auto [p, q] = rational();
        if (q == 1) return powi(base, p);
        if (q == 3) return powi(cbrt(base), p);
        fail("only integer or /3 exponents are supported");
    }
    std::pair<int, int> rational() {
        bool paren = accept('(');
        bool neg = accept('-');
        int p = integer();
        int q = 1;
        if (accept('/')) q = integer();
        if (paren) expect(')');
        if (q == 0) fail("zero denominator");
        return {neg ? -p : p, q};
    }
    int integer() {
        skip();
        size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("expected integer");
        return std::stoi(std::string(s_.substr(start, pos_ - start)));
    }
    Expr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        char c = s_[pos_];
        if (accept('(')) {
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            std::string id(s_.substr(start, pos_ - start));
            if (id == "exp" || id == "log" || id == "cbrt") {
                expect('(');
                Expr arg = expr();
                expect(')');
                if (id == "exp") return exp(arg);
                if (id == "log") return log(arg);
                return cbrt(arg);
            }
            if (id == "x") return var();
            return param(id);
        }
        fail("unexpected character");
    }
    Expr number() {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
            ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            size_t digits = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (digits == pos_) pos_ = save;
        }
        return constant(Interval::parse(s_.substr(start, pos_ - start)));
    }
};

void print(std::ostream& os, const Expr& e) {
    switch (e->op) {
        case Op::Const:
            if (e->value.is_point()) os << format_down(e->value.lo);
            else os << "[" << format_down(e->value.lo) << "," << format_up(e->value.hi) << "]";
            return;
        case Op::Param: os << e->name; return;
        case Op::Var: os << "x"; return;
        case Op::Add: os << "("; print(os, e->a); os << " + "; print(os, e->b); os << ")"; return;
        case Op::Sub: os << "("; print(os, e->a); os << " - "; print(os, e->b); os << ")"; return;
        case Op::Mul: os << "("; print(os, e->a); os << " * "; print(os, e->b); os << ")"; return;
        case Op::Div: os << "("; print(os, e->a); os << " / "; print(os, e->b); os << ")"; return;
        case Op::Neg: os << "(-"; print(os, e->a); os << ")"; return;
        case Op::Exp: os << "exp("; print(os, e->a); os << ")"; return;
        case Op::Log: os << "log("; print(os, e->a); os << ")"; return;
        case Op::Cbrt: os << "cbrt("; print(os, e->a); os << ")"; return;
        case Op::PowI: os << "("; print(os, e->a); os << ")^(" << e->n << ")"; return;
    }
}

}  // namespace

Expr parse_expr(std::string_view text) { return Parser(text).parse(); }

std::string to_string(const Expr& e) {
    std::ostringstream os;
    print(os, e);
    return os.str();
}

// ------------------------------------------------------------ derivative

namespace {

Expr diff(const Expr& e, std::unordered_map<const Node*, Expr>& memo) {
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    Expr d;
    switch (e->op) {
        case Op::Const:
        case Op::Param: d = constant(0.0); break;
        case Op::Var: d = constant(1.0); break;
        case Op::Add: d = diff(e->a, memo) + diff(e->b, memo); break;
        case Op::Sub: d = diff(e->a, memo) - diff(e->b, memo); break;
        case Op::Mul: d = diff(e->a, memo) * e->b + e->a * diff(e->b, memo); break;
        case Op::Div:
            d = (diff(e->a, memo) * e->b - e->a * diff(e->b, memo)) / powi(e->b, 2);
            break;
        case Op::Neg: d = -diff(e->a, memo); break;
        case Op::Exp: d = e * diff(e->a, memo); break;
        case Op::Log: d = diff(e->a, memo) / e->a; break;
        // (u^{1/3})' = u' / (3 u^{2/3}); singular where u = 0.
        case Op::Cbrt: d = diff(e->a, memo) / (constant(3.0) * powi(e, 2)); break;
        case Op::PowI:
            d = constant(Interval(e->n)) * powi(e->a, e->n - 1) * diff(e->a, memo);
            break;
    }
    memo.emplace(e.get(), d);
    return d;
}

}  // namespace

Expr derivative(const Expr& e) {
    std::unordered_map<const Node*, Expr> memo;
    return diff(e, memo);
}

// ------------------------------------------------------------------ tape

Tape::Tape(const Expr& root, const ParamMap& params) {
    std::unordered_map<const Node*, int> slot;
    // Iterative post-order to keep deep trees off the call stack.
    std::vector<std::pair<const Node*, bool>> stack{{root.get(), false}};
    while (!stack.empty()) {
        auto [node, expanded] = stack.back();
        stack.pop_back();
        if (slot.count(node)) continue;
        if (!expanded) {
            stack.push_back({node, true});
            if (node->b) stack.push_back({node->b.get(), false});
            if (node->a) stack.push_back({node->a.get(), false});
            continue;
        }
        Instr ins;
        ins.op = node->op;
        ins.n = node->n;
        if (node->a) ins.a = slot.at(node->a.get());
        if (node->b) ins.b = slot.at(node->b.get());
        if (node->op == Op::Const) {
            ins.value = node->value;
            ins.value_ld = static_cast<long double>(node->value.lo) / 2 +
                           static_cast<long double>(node->value.hi) / 2;
        } else if (node->op == Op::Param) {
            auto p = params.find(node->name);
            if (p == params.end()) throw std::invalid_argument("unbound parameter '" + node->name + "'");
            ins.op = Op::Const;
            ins.value = p->second;
            ins.value_ld = static_cast<long double>(p->second.lo) / 2 +
                           static_cast<long double>(p->second.hi) / 2;
        }
        slot[node] = static_cast<int>(code_.size());
        code_.push_back(ins);
    }
}

Interval Tape::eval(const Interval& x) const {
    thread_local std::vector<Interval> reg;
    reg.resize(code_.size());
    for (size_t i = 0; i < code_.size(); ++i) {
        const Instr& c = code_[i];
        switch (c.op) {
            case Op::Const: reg[i] = c.value; break;
            case Op::Var: reg[i] = x; break;
            case Op::Add: reg[i] = reg[c.a] + reg[c.b]; break;
            case Op::Sub: reg[i] = reg[c.a] - reg[c.b]; break;
            case Op::Mul: reg[i] = reg[c.a] * reg[c.b]; break;
            case Op::Div: reg[i] = reg[c.a] / reg[c.b]; break;
            case Op::Neg: reg[i] = -reg[c.a]; break;
            case Op::Exp: reg[i] = exp(reg[c.a]); break;
            case Op::Log: reg[i] = log(reg[c.a]); break;
            case Op::Cbrt: reg[i] = cbrt(reg[c.a]); break;
            case Op::PowI: reg[i] = pow_int(reg[c.a], c.n); break;
            case Op::Param: break;
        }
    }
    return reg.back();
}

long double Tape::eval_ld(long double x) const {
    std::vector<long double> reg(code_.size());
    for (size_t i = 0; i < code_.size(); ++i) {
        const Instr& c = code_[i];
        switch (c.op) {
            case Op::Const: reg[i] = c.value_ld; break;
            case Op::Var: reg[i] = x; break;
            case Op::Add: reg[i] = reg[c.a] + reg[c.b]; break;
            case Op::Sub: reg[i] = reg[c.a] - reg[c.b]; break;
            case Op::Mul: reg[i] = reg[c.a] * reg[c.b]; break;
            case Op::Div: reg[i] = reg[c.a] / reg[c.b]; break;
            case Op::Neg: reg[i] = -reg[c.a]; break;
            case Op::Exp: reg[i] = std::exp(reg[c.a]); break;
            case Op::Log: reg[i] = std::log(reg[c.a]); break;
            case Op::Cbrt: reg[i] = std::cbrt(reg[c.a]); break;
            case Op::PowI: reg[i] = std::pow(reg[c.a], c.n); break;
            case Op::Param: break;
        }
    }
    return reg.back();
}

}  // namespace ncert
