#include "doctest.h"
#include "expr.hpp"

#include <cmath>

using namespace sml;

TEST_CASE("expression evaluation") {
    Expr e = Expr::parse("2+cos(z)", {"z"});
    CHECK(e.eval({0.0}) == doctest::Approx(3.0));
    CHECK(e.eval({M_PI}) == doctest::Approx(1.0));

    Expr f = Expr::parse("1 + q1^2 + q2^2", {"q1", "q2"});
    CHECK(f.eval({0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(f.eval({-2.0, 1.0}) == doctest::Approx(6.0));

    CHECK(Expr::parse("pi", {}).eval({}) == doctest::Approx(M_PI));
    CHECK(Expr::parse("2^-2", {}).eval({}) == doctest::Approx(0.25));
    CHECK(Expr::parse("sqrt(exp(2))", {}).eval({}) == doctest::Approx(std::exp(1.0)));
    CHECK(Expr::parse("-z^2", {"z"}).eval({3.0}) == doctest::Approx(-9.0));
    CHECK(Expr::parse("2*3/4", {}).eval({}) == doctest::Approx(1.5));
    CHECK(Expr::parse("2^3^2", {}).eval({}) == doctest::Approx(512.0));  // right assoc
}

TEST_CASE("expression derivatives match finite differences") {
    const std::vector<std::string> cases = {
        "2+cos(z)", "sin(z)*exp(z/3)", "sqrt(4+z^2)", "z^3 - 2*z", "1/(2+sin(z))",
        "(1+z^2)^1.5"};
    for (const auto& text : cases) {
        Expr e = Expr::parse(text, {"z"});
        for (double z : {-1.3, 0.0, 0.7, 2.9}) {
            const double h = 1e-5;
            const double fd1 = (e.eval({z + h}) - e.eval({z - h})) / (2 * h);
            const double fd2 = (e.eval({z + h}) - 2 * e.eval({z}) + e.eval({z - h})) / (h * h);
            Dual2 d = e.eval_dual({z}, 0);
            CHECK(d.d1 == doctest::Approx(fd1).epsilon(1e-6));
            CHECK(d.d2 == doctest::Approx(fd2).epsilon(1e-4));
        }
    }
}

TEST_CASE("expression parse errors") {
    CHECK_THROWS_AS(Expr::parse("2+*3", {}), Error);
    CHECK_THROWS_AS(Expr::parse("foo(2)", {}), Error);
    CHECK_THROWS_AS(Expr::parse("q", {"z"}), Error);
    CHECK_THROWS_AS(Expr::parse("2+", {}), Error);
    CHECK_THROWS_AS(Expr::parse("(2", {}), Error);
    CHECK_THROWS_AS(Expr::parse("2 3", {}), Error);
}
