#include "doctest.h"
#include "capacity.hpp"
#include "sobol.hpp"

#include <cmath>

using namespace sml;

TEST_CASE("closed-form volumes") {
    // B^4(1) = pi^2/2
    CHECK(euclidean_volume(RegionDescriptor::ball(4, 1.0)) ==
          doctest::Approx(M_PI * M_PI / 2).epsilon(1e-14));
    CHECK(ball_volume(1, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(ball_volume(2, 3.0) == doctest::Approx(9 * M_PI).epsilon(1e-14));

    // D*S^1 with circumference 1: Vol = 1 x 2
    auto circle = std::make_shared<const Manifold>(Manifold::round_sphere(1, 0.5 / M_PI));
    CHECK(euclidean_volume(RegionDescriptor::disc_bundle(circle, 1.0, Vec::Zero(1))) ==
          doctest::Approx(2.0).epsilon(1e-12));

    CHECK(euclidean_volume(RegionDescriptor::product_box({{0, 2}, {0, 3}})) ==
          doctest::Approx(6.0));

    // Monte-Carlo volume of P_L(1,1) at n = 2 within 1%
    const RegionDescriptor bidisc = RegionDescriptor::bi_disc(2, 1.0, 1.0);
    Sobol sob(4);
    const long total = 200000;
    long inside = 0;
    std::vector<double> u(4);
    for (long i = 1; i <= total; ++i) {
        sob.point(static_cast<std::uint64_t>(i), u.data());
        Vec x(4);
        for (int k = 0; k < 4; ++k) x[k] = 2 * u[k] - 1;
        if (bidisc.contains(x)) ++inside;
    }
    const double mc = 16.0 * inside / total;
    CHECK(mc == doctest::Approx(euclidean_volume(bidisc)).epsilon(0.01));
}

TEST_CASE("bi-disc capacities") {
    CertificateStore store;
    std::string id;
    const double lower = bidisc_gromov_lower(1, 1, 1e-3, 2, store, &id, 1000);
    CHECK(lower == doctest::Approx(4 * sq(1 - 1e-3)).epsilon(1e-13));
    CHECK(lower >= 3.99);
    CHECK(store.find(id).has_value());

    CHECK(bidisc_cyl_upper(1, 1) == 4.0);
    CHECK(bidisc_cyl_upper(2, 0.5) == 4.0);

    // scaling both radii scales the bound by lambda^2 exactly
    const double scaled = bidisc_gromov_lower(1.5, 3.0, 1e-3, 2, store, nullptr, 400);
    CHECK(scaled == doctest::Approx(4 * 1.5 * 3.0 * sq(1 - 1e-3)).epsilon(1e-13));

    // ordering on a small grid
    for (double a : {0.5, 1.0, 2.0})
        for (double b : {0.5, 1.0, 2.0}) {
            const double lo = bidisc_gromov_lower(a, b, 1e-3, 1, store, nullptr, 300);
            CHECK(lo <= bidisc_cyl_upper(a, b));
        }
}

TEST_CASE("projection shadow stays inside the 4ab square") {
    for (int n : {1, 2}) {
        const double area = bidisc_shadow_box_area(1.0, 1.0, n, 20000);
        CHECK(area <= 4.0 + 1e-12);
        if (n == 1) CHECK(area >= 3.9);  // the shadow is the full open square
        if (n == 2) CHECK(area < 4.0);   // corners are cut strictly inside
    }
}

TEST_CASE("capacity report") {
    CertificateStore store;
    CapacityReport rep = bidisc_capacity_report(1, 1, 2, 1e-3, store, 500);
    CHECK(rep.gromov_lower <= rep.cyl_upper);
    CHECK(rep.gromov_lower >= 3.99);
    CHECK(rep.cyl_upper == 4.0);
    CHECK(rep.volume == doctest::Approx(M_PI * M_PI).epsilon(1e-13));
    CHECK(rep.conformality_ok);
    CHECK(rep.monotonicity_ok);
    nlohmann::json j = rep.to_json();
    CHECK(j["region"]["kind"] == "bi-disc");
    CHECK(j["cyl_method"] == "projection-shadow");

    // the volume obstruction is strictly weaker than 4ab in dimension >= 4
    for (double a : {0.5, 1.0, 2.0})
        for (double b : {0.7, 1.3}) {
            for (int n : {2, 3}) {
                const RegionDescriptor r = RegionDescriptor::bi_disc(n, a, b);
                CHECK(gromov_width_volume_bound(r) > 4 * a * b);
            }
            // while for the ball it is exact
            const RegionDescriptor ball = RegionDescriptor::ball(4, a);
            CHECK(gromov_width_volume_bound(ball) ==
                  doctest::Approx(M_PI * a * a).epsilon(1e-12));
        }
}

TEST_CASE("sphere packing example fills the bundle volume") {
    for (int n : {1, 2, 3}) {
        SpherePackingReport rep = sphere_packing_example(n);
        CHECK(rep.volume_gap <= 1e-10);
        CHECK(rep.packing_number == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(rep.four_diam == doctest::Approx(2.0).epsilon(1e-14));
        // closed-form cross-check of the two-ball volume: 2/n!
        CHECK(rep.two_ball_volume ==
              doctest::Approx(2.0 / std::tgamma(n + 1.0)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(sphere_packing_example(4), Error);
}

TEST_CASE("packing audit") {
    std::vector<PackingRecord> records;
    CHECK(packing_audit(records).ok);  // vacuous

    // equal-radius pairs from the near construction: ratio sqrt(1/(1+d))(1-eps)^2
    const double eps = 1e-3;
    for (double d : {0.05, 0.1, 0.2}) {
        const double cap = 2 * d * std::sqrt(1 / (1 + d)) * sq(1 - eps) / 2;
        records.push_back({2 * cap, 2 * cap, 1.0, d, "c0", "c1"});
    }
    PackingAuditReport rep = packing_audit(records);
    CHECK(rep.ok);
    CHECK(rep.pairs == 3);
    CHECK(rep.tightest_ratio ==
          doctest::Approx(std::sqrt(1 / 1.05) * sq(1 - eps)).epsilon(1e-12));

    // a pair at the bound is reproduced exactly; one beyond it is flagged
    records.push_back({2.0, 2.0, 1.0, 1.0, "c2", "c3"});  // sum = 4 = 4 r d
    CHECK(packing_audit(records).ok);
    records.push_back({2.5, 2.0, 1.0, 1.0, "c4", "c5"});
    PackingAuditReport bad = packing_audit(records);
    CHECK_FALSE(bad.ok);
    CHECK(bad.violations == 1);
    CHECK(bad.worst_excess == doctest::Approx(0.5));
}
