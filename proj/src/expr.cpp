#include "expr.hpp"

#include <cctype>
#include <cstdlib>

namespace sml {

Dual2 operator+(const Dual2& a, const Dual2& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
Dual2 operator-(const Dual2& a, const Dual2& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
Dual2 operator-(const Dual2& a) { return {-a.v, -a.d1, -a.d2}; }

Dual2 operator*(const Dual2& a, const Dual2& b) {
    return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2 * a.d1 * b.d1 + a.v * b.d2};
}

Dual2 operator/(const Dual2& a, const Dual2& b) {
    if (b.v == 0) fail(ErrorKind::Numeric, "division by zero in expression");
    const double iv = 1.0 / b.v;
    // reciprocal r = 1/b
    Dual2 r{iv, -b.d1 * iv * iv, (2 * b.d1 * b.d1 - b.v * b.d2) * iv * iv * iv};
    return a * r;
}

Dual2 dual_sin(const Dual2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return {s, c * a.d1, -s * a.d1 * a.d1 + c * a.d2};
}

Dual2 dual_cos(const Dual2& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return {c, -s * a.d1, -c * a.d1 * a.d1 - s * a.d2};
}

Dual2 dual_exp(const Dual2& a) {
    const double e = std::exp(a.v);
    return {e, e * a.d1, e * (a.d1 * a.d1 + a.d2)};
}

Dual2 dual_sqrt(const Dual2& a) {
    if (a.v < 0) fail(ErrorKind::Numeric, "sqrt of negative value in expression");
    const double s = std::sqrt(a.v);
    if (s == 0) {
        if (a.d1 == 0 && a.d2 == 0) return {0, 0, 0};
        fail(ErrorKind::Numeric, "sqrt not differentiable at zero");
    }
    const double d1 = a.d1 / (2 * s);
    return {s, d1, (a.d2 - 2 * d1 * d1) / (2 * s)};
}

Dual2 dual_log(const Dual2& a) {
    if (a.v <= 0) fail(ErrorKind::Numeric, "log of non-positive value in expression");
    const double d1 = a.d1 / a.v;
    return {std::log(a.v), d1, a.d2 / a.v - d1 * d1};
}

Dual2 dual_powi(const Dual2& a, long long n) {
    if (n == 0) return Dual2::constant(1.0);
    if (n < 0) return Dual2::constant(1.0) / dual_powi(a, -n);
    // v = a^n, v' = n a^(n-1) a', v'' = n(n-1) a^(n-2) a'^2 + n a^(n-1) a''
    const double p2 = n >= 2 ? std::pow(a.v, double(n - 2)) : 0.0;
    const double p1 = n >= 2 ? p2 * a.v : std::pow(a.v, double(n - 1));
    const double p0 = p1 * a.v;
    return {p0, n * p1 * a.d1, n * (n - 1) * p2 * a.d1 * a.d1 + n * p1 * a.d2};
}

Dual2 dual_pow(const Dual2& a, const Dual2& b) {
    if (b.d1 == 0 && b.d2 == 0) {
        const double bv = b.v;
        if (bv == std::floor(bv) && std::abs(bv) < 1e9)
            return dual_powi(a, static_cast<long long>(bv));
        if (a.v <= 0) fail(ErrorKind::Numeric, "non-integer power of non-positive base");
        return dual_exp(Dual2::constant(bv) * dual_log(a));
    }
    if (a.v <= 0) fail(ErrorKind::Numeric, "variable power of non-positive base");
    return dual_exp(b * dual_log(a));
}

struct Expr::Node {
    enum Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt } kind;
    double value = 0;
    int var = -1;
    std::shared_ptr<const Node> lhs, rhs;

    Dual2 eval(const std::vector<double>& args, int wrt) const {
        switch (kind) {
            case Num: return Dual2::constant(value);
            case Var:
                return var == wrt ? Dual2::variable(args[var]) : Dual2::constant(args[var]);
            case Neg: return -lhs->eval(args, wrt);
            case Add: return lhs->eval(args, wrt) + rhs->eval(args, wrt);
            case Sub: return lhs->eval(args, wrt) - rhs->eval(args, wrt);
            case Mul: return lhs->eval(args, wrt) * rhs->eval(args, wrt);
            case Div: return lhs->eval(args, wrt) / rhs->eval(args, wrt);
            case Pow: return dual_pow(lhs->eval(args, wrt), rhs->eval(args, wrt));
            case Sin: return dual_sin(lhs->eval(args, wrt));
            case Cos: return dual_cos(lhs->eval(args, wrt));
            case Exp: return dual_exp(lhs->eval(args, wrt));
            case Sqrt: return dual_sqrt(lhs->eval(args, wrt));
        }
        fail(ErrorKind::Numeric, "corrupt expression node");
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
    const std::string& s;
    size_t pos = 0;
    const std::vector<std::string>& vars;

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip();
        return pos < s.size() ? s[pos] : '\0';
    }

    [[noreturn]] void err(const std::string& what) {
        fail(ErrorKind::InvalidArgument,
             "expression parse error at position " + std::to_string(pos) + ": " + what +
                 " in \"" + s + "\"");
    }

    static NodePtr make(Expr::Node::Kind k, NodePtr l = nullptr, NodePtr r = nullptr) {
        auto n = std::make_shared<Expr::Node>();
        n->kind = k;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    NodePtr number(double v) {
        auto n = std::make_shared<Expr::Node>();
        n->kind = Expr::Node::Num;
        n->value = v;
        return n;
    }

    NodePtr parse_expr() {
        NodePtr n = parse_term();
        for (;;) {
            if (eat('+'))
                n = make(Expr::Node::Add, n, parse_term());
            else if (eat('-'))
                n = make(Expr::Node::Sub, n, parse_term());
            else
                return n;
        }
    }

    NodePtr parse_term() {
        NodePtr n = parse_factor();
        for (;;) {
            if (eat('*'))
                n = make(Expr::Node::Mul, n, parse_factor());
            else if (eat('/'))
                n = make(Expr::Node::Div, n, parse_factor());
            else
                return n;
        }
    }

    NodePtr parse_factor() {
        if (eat('-')) return make(Expr::Node::Neg, parse_factor());
        if (eat('+')) return parse_factor();
        NodePtr base = parse_primary();
        if (eat('^')) return make(Expr::Node::Pow, base, parse_factor());  // right assoc
        return base;
    }

    NodePtr parse_primary() {
        skip();
        if (pos >= s.size()) err("unexpected end of input");
        const char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(s.c_str() + pos, &end);
            if (end == s.c_str() + pos) err("bad number");
            pos = end - s.c_str();
            return number(v);
        }
        if (c == '(') {
            ++pos;
            NodePtr n = parse_expr();
            if (!eat(')')) err("expected ')'");
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            const std::string name = s.substr(start, pos - start);
            if (peek() == '(') {
                ++pos;
                NodePtr arg = parse_expr();
                if (!eat(')')) err("expected ')' after function argument");
                if (name == "sin") return make(Expr::Node::Sin, arg);
                if (name == "cos") return make(Expr::Node::Cos, arg);
                if (name == "exp") return make(Expr::Node::Exp, arg);
                if (name == "sqrt") return make(Expr::Node::Sqrt, arg);
                err("unknown function '" + name + "'");
            }
            if (name == "pi") return number(M_PI);
            for (size_t i = 0; i < vars.size(); ++i) {
                if (vars[i] == name) {
                    auto n = std::make_shared<Expr::Node>();
                    n->kind = Expr::Node::Var;
                    n->var = static_cast<int>(i);
                    return n;
                }
            }
            err("unknown identifier '" + name + "'");
        }
        err(std::string("unexpected character '") + c + "'");
    }
};

}  // namespace

Expr Expr::parse(const std::string& text, const std::vector<std::string>& vars) {
    Parser p{text, 0, vars};
    NodePtr root = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) p.err("trailing input");
    Expr e;
    e.root_ = std::move(root);
    e.text_ = text;
    return e;
}

double Expr::eval(const std::vector<double>& args) const {
    return eval_dual(args, -1).v;
}

Dual2 Expr::eval_dual(const std::vector<double>& args, int wrt) const {
    if (!root_) fail(ErrorKind::InvalidArgument, "evaluating empty expression");
    return root_->eval(args, wrt);
}

}  // namespace sml
