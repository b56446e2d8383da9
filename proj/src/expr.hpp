#pragma once

#include <memory>
#include <string>
#include <vector>

#include "num.hpp"

namespace sml {

// Value with first and second derivative with respect to one scalar variable.
struct Dual2 {
    double v = 0, d1 = 0, d2 = 0;
    static Dual2 constant(double c) { return {c, 0, 0}; }
    static Dual2 variable(double x) { return {x, 1, 0}; }
};

Dual2 operator+(const Dual2& a, const Dual2& b);
Dual2 operator-(const Dual2& a, const Dual2& b);
Dual2 operator-(const Dual2& a);
Dual2 operator*(const Dual2& a, const Dual2& b);
Dual2 operator/(const Dual2& a, const Dual2& b);
Dual2 dual_sin(const Dual2& a);
Dual2 dual_cos(const Dual2& a);
Dual2 dual_exp(const Dual2& a);
Dual2 dual_sqrt(const Dual2& a);
Dual2 dual_log(const Dual2& a);
Dual2 dual_powi(const Dual2& a, long long n);
Dual2 dual_pow(const Dual2& a, const Dual2& b);

// One-line expression in named variables.
// Grammar: + - * / ^  sin cos exp sqrt  numeric literals and `pi`.
class Expr {
  public:
    Expr() = default;
    static Expr parse(const std::string& text, const std::vector<std::string>& vars);

    double eval(const std::vector<double>& args) const;
    // Value and d/d(args[wrt]), d^2/d(args[wrt])^2.
    Dual2 eval_dual(const std::vector<double>& args, int wrt) const;

    bool empty() const { return !root_; }
    const std::string& text() const { return text_; }

    struct Node;

  private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace sml
