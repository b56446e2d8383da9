#include "doctest.h"
#include "num.hpp"
#include "sobol.hpp"

#include <cmath>

using namespace sml;

TEST_CASE("sobol points live in the unit cube and are index addressable") {
    Sobol sob(6);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        auto p = sob.point(i);
        for (double x : p) {
            CHECK(x >= 0.0);
            CHECK(x < 1.0);
        }
    }
    // Same index, same point, independent instances.
    Sobol other(6);
    CHECK(sob.point(12345) == other.point(12345));
}

TEST_CASE("sobol equidistribution") {
    Sobol sob(8);
    const int n = 1 << 12;
    std::vector<double> mean(8, 0.0);
    for (int i = 0; i < n; ++i) {
        auto p = sob.point(i);
        for (int d = 0; d < 8; ++d) mean[d] += p[d];
    }
    for (int d = 0; d < 8; ++d) CHECK(mean[d] / n == doctest::Approx(0.5).epsilon(1e-3));

    // Pairwise 2d projections should cover all quadrants roughly evenly.
    int quad[4] = {0, 0, 0, 0};
    for (int i = 0; i < n; ++i) {
        auto p = sob.point(i);
        quad[(p[3] > 0.5) * 2 + (p[6] > 0.5)]++;
    }
    for (int c : quad) CHECK(std::abs(c - n / 4) < n / 20);
}

TEST_CASE("gauss rules integrate polynomials exactly") {
    GaussRule r4(4);
    // order-4 Gauss is exact through degree 7
    auto poly = [](double x) { return 3 * x * x * x * x * x * x - x * x + 2; };
    const double exact = 3.0 / 7 * 2 - 2.0 / 3 + 4;  // integral over [-1,1]
    CHECK(integrate(poly, -1, 1, r4) == doctest::Approx(exact).epsilon(1e-13));

    GaussRule r16(16);
    CHECK(integrate([](double x) { return std::sin(x); }, 0, M_PI, r16) ==
          doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("adaptive quadrature") {
    CHECK(integrate_adaptive([](double x) { return std::exp(-x * x); }, -6, 6) ==
          doctest::Approx(std::sqrt(M_PI)).epsilon(1e-11));
}
