#include "doctest.h"
#include "symplectic.hpp"
#include "sobol.hpp"

#include <cmath>

using namespace sml;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

std::shared_ptr<const Manifold> shared_torus() {
    static auto m = std::make_shared<const Manifold>(Manifold::flat_torus({1.0, 1.0}));
    return m;
}

std::shared_ptr<const Manifold> shared_sphere() {
    static auto m = std::make_shared<const Manifold>(Manifold::round_sphere(2, 0.5 / M_PI));
    return m;
}

}  // namespace

TEST_CASE("bidisc profile closed form") {
    // f(2 sqrt(ab/pi)) = ab at the edge of the domain
    for (double a : {0.5, 1.0, 2.0})
        for (double b : {0.3, 1.0, 1.7}) {
            const double qmax = 2 * std::sqrt(a * b / M_PI);
            // sqrt-type sensitivity at the edge bounds the attainable accuracy
            auto [f_edge, fp_edge] = bidisc_profile(a, b, qmax);
            CHECK(f_edge == doctest::Approx(a * b).epsilon(1e-7));
            CHECK(std::abs(fp_edge) <= 1e-7 * qmax);
            // odd function, f'(0) = qmax
            auto [f0, fp0] = bidisc_profile(a, b, 0.0);
            CHECK(f0 == 0.0);
            CHECK(fp0 == doctest::Approx(qmax).epsilon(1e-14));
            auto [fm, fpm] = bidisc_profile(a, b, -0.37 * qmax);
            auto [fp_, fpp_] = bidisc_profile(a, b, 0.37 * qmax);
            CHECK(fm == doctest::Approx(-fp_).epsilon(1e-14));
            CHECK(fpm == doctest::Approx(fpp_).epsilon(1e-14));
        }

    // f' is the integrand of f: adaptive quadrature oracle at a=b=1, q=0.5
    const double f_quad = integrate_adaptive(
        [](double t) { return std::sqrt(4.0 / M_PI - t * t); }, 0.0, 0.5, 1e-14);
    auto [f_half, unused] = bidisc_profile(1, 1, 0.5);
    (void)unused;
    CHECK(f_half == doctest::Approx(f_quad).epsilon(1e-10));

    CHECK_THROWS_AS(bidisc_profile(1, 1, 1.5), Error);

    // f(t)/t > f'(t) on (0, qmax): strict concavity used by the construction
    for (int i = 1; i < 50; ++i) {
        const double t = 2 / std::sqrt(M_PI) * i / 50.0;
        auto [ft, fpt] = bidisc_profile(1, 1, t);
        CHECK(ft / t > fpt);
    }
}

TEST_CASE("radial extension: origin, 1-d reduction, FD Jacobian") {
    const double qmax = 2 / std::sqrt(M_PI);
    RadialExtension at0 = radial_extension(1, 1, Vec::Zero(2));
    CHECK(at0.phi.norm() == 0.0);
    CHECK(at0.dphi.isApprox(qmax * Mat::Identity(2, 2), 1e-14));

    // n = 1 reduces to the profile pair
    Vec q1(1);
    q1 << 0.4;
    RadialExtension r1 = radial_extension(1, 1, q1);
    auto [f, fp] = bidisc_profile(1, 1, 0.4);
    CHECK(r1.phi[0] == doctest::Approx(f).epsilon(1e-14));
    CHECK(r1.dphi(0, 0) == doctest::Approx(fp).epsilon(1e-14));

    // FD comparison in n = 2
    Sobol sob(2);
    for (int i = 1; i <= 25; ++i) {
        auto u = sob.point(i);
        Vec q = vec2((2 * u[0] - 1) * 0.7, (2 * u[1] - 1) * 0.7);
        if (q.norm() >= 0.95 * qmax) continue;
        RadialExtension re = radial_extension(1, 1, q);
        const double h = 1e-7;
        Mat fd(2, 2);
        for (int k = 0; k < 2; ++k) {
            Vec qp = q, qm = q;
            qp[k] += h;
            qm[k] -= h;
            fd.col(k) =
                (radial_extension(1, 1, qp).phi - radial_extension(1, 1, qm).phi) / (2 * h);
        }
        CHECK((re.dphi - fd).norm() / re.dphi.norm() < 1e-6);
    }
}

TEST_CASE("lower bound on |Dphi h| (displayed inequality)") {
    Sobol sob(4);
    int taken = 0;
    const double qmax = 2 / std::sqrt(M_PI);
    for (std::uint64_t i = 1; taken < 10000; ++i) {
        auto u = sob.point(i);
        Vec q = vec2((2 * u[0] - 1) * qmax, (2 * u[1] - 1) * qmax);
        if (q.norm() >= qmax * 0.999) continue;
        Vec h = vec2(2 * u[2] - 1, 2 * u[3] - 1);
        RadialExtension re = radial_extension(1, 1, q);
        auto [f, fp] = bidisc_profile(1, 1, q.norm());
        (void)f;
        CHECK((re.dphi * h).norm() >= fp * h.norm() - 1e-10);
        ++taken;
    }
}

TEST_CASE("bidisc embedding: sanity, capacity, membership margin") {
    for (double a : {0.5, 1.0, 2.0})
        for (double b : {0.5, 1.0, 2.0}) {
            SymplecticMapSpec e = bidisc_embedding(a, b, 2, 1e-3);
            CHECK(e.domain_capacity ==
                  doctest::Approx(4 * a * b * sq(1 - 1e-3)).epsilon(1e-13));
            CHECK(e.apply(Vec::Zero(4)).norm() == 0.0);
            CheckResult cont = check_containment(e, 10000, 0.0);
            CHECK(cont.pass);
        }

    // conformality of the domain capacity formula
    const double base = bidisc_embedding(1.0, 1.0, 2, 1e-3).domain_capacity;
    const double scaled = bidisc_embedding(1.7, 1.7, 2, 1e-3).domain_capacity;
    CHECK(std::abs(scaled - 1.7 * 1.7 * base) <= 1e-12 * scaled);

    CHECK_THROWS_AS(bidisc_embedding(1, 1, 2, 0.0), Error);
    CHECK_THROWS_AS(bidisc_embedding(1, 1, 2, 1.0), Error);
}

TEST_CASE("symplectic and Liouville checks on constructed maps") {
    for (int n : {1, 2, 3}) {
        SymplecticMapSpec e = bidisc_embedding(1.3, 0.8, n, 1e-3);
        CheckResult symp = check_symplectic(e, 2000, 1e-8);
        CheckResult liou = check_liouville(e, 2000, 1e-8);
        CheckResult rel = check_relative_boundary(e, 2000, 1e-12);
        CHECK(symp.pass);
        CHECK(liou.pass);
        CHECK(rel.pass);
        CHECK(symp.worst <= 1e-10);
    }

    // analytic Jacobian agrees with finite differences of the map
    SymplecticMapSpec e = bidisc_embedding(1, 1, 2, 1e-3);
    Sobol sob(4);
    for (int i = 1; i <= 20; ++i) {
        auto u = sob.point(i);
        Vec x(4);
        for (int k = 0; k < 4; ++k) x[k] = (2 * u[k] - 1) * 0.5;
        if (x.norm() >= e.domain.radius) continue;
        const Mat ja = e.jacobian(x);
        const Mat jf = fd_jacobian(e.map, x, e.domain.radius);
        CHECK((ja - jf).norm() / ja.norm() < 1e-4);
    }

    // volume preservation follows at every sampled point of a passing map
    for (int i = 1; i <= 200; ++i) {
        auto u = sob.point(i);
        Vec x(4);
        for (int k = 0; k < 4; ++k) x[k] = (2 * u[k] - 1) * 0.5;
        if (x.norm() >= e.domain.radius) continue;
        CHECK(std::abs(std::abs(e.jacobian(x).determinant()) - 1.0) <= 1e-8);
    }
}

TEST_CASE("negative controls") {
    // (q,p) -> (q,2p) is volume-scaling, not symplectic
    SymplecticMapSpec broken = bidisc_embedding(1, 1, 1, 1e-3);
    broken.name = "broken";
    broken.map = [](const Vec& x) {
        Vec y = x;
        y[1] *= 2;
        return y;
    };
    broken.jacobian = [](const Vec&) {
        Mat j = Mat::Identity(2, 2);
        j(1, 1) = 2;
        return j;
    };
    CheckResult symp = check_symplectic(broken, 500, 1e-8);
    CHECK_FALSE(symp.pass);
    CHECK(symp.worst > 0.5);

    // translation in p preserves omega but not lambda
    SymplecticMapSpec shift = bidisc_embedding(1, 1, 1, 1e-3);
    shift.name = "p-shift";
    shift.map = [](const Vec& x) {
        Vec y = x;
        y[1] += 0.25;
        return y;
    };
    shift.jacobian = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
    CHECK(check_symplectic(shift, 500, 1e-8).pass);
    CHECK_FALSE(check_liouville(shift, 500, 1e-8).pass);

    // a linear symplectic matrix passes with zero violation
    SymplecticMapSpec lin = bidisc_embedding(1, 1, 1, 1e-3);
    lin.name = "linear";
    Mat sp(2, 2);
    sp << 2, 0, 0, 0.5;
    lin.map = [sp](const Vec& x) { return Vec(sp * x); };
    lin.jacobian = [sp](const Vec&) { return sp; };
    CheckResult ls = check_symplectic(lin, 200, 1e-15);
    CHECK(ls.pass);
    CHECK(ls.worst == 0.0);
}

TEST_CASE("fiber frame embedding on the torus is the identity chart lift") {
    auto torus = shared_torus();
    SymplecticMapSpec psi =
        fiber_frame_embedding(torus, vec2(0.2, 0.7), 0.2, std::sqrt(1 / 1.2), 1.0, 1e-3);
    CHECK(psi.apply(Vec::Zero(4)).norm() == 0.0);
    Vec x(4);
    x << 0.05, -0.03, 0.2, 0.4;
    CHECK((psi.apply(x) - x).norm() == 0.0);
    CHECK(check_symplectic(psi, 500, 1e-15).worst == 0.0);
    CHECK(check_liouville(psi, 500, 1e-15).worst == 0.0);
    CHECK(check_containment(psi, 2000, 0.0).pass);

    CHECK_THROWS_AS(fiber_frame_embedding(torus, vec2(0, 0), 0.3, 1.0, 1.0, 1e-3), Error);
}

TEST_CASE("fiber frame containment uses the chart metric (sphere)") {
    auto sphere = shared_sphere();
    const double d = 0.05;  // delta0 for this sphere is ~0.068
    SymplecticMapSpec psi =
        fiber_frame_embedding(sphere, vec2(0.04, 0.02), d, std::sqrt(1 / (1 + d)), 1.0, 1e-3);
    CHECK(check_containment(psi, 3000, 0.0).pass);

    // and a too-greedy fiber radius is caught by the same check
    SymplecticMapSpec greedy =
        fiber_frame_embedding(sphere, vec2(0.04, 0.02), d, 1.0 + 1e-3, 1.0, 1e-6);
    CHECK_FALSE(check_containment(greedy, 3000, 0.0).pass);

    // rho_p = A r_min keeps the image inside D*_{r_min}N out to d near
    // rho_inj/2, independent of delta0
    const double r_min = 0.8;
    const double rho_a = (2 / M_PI) * r_min;
    SymplecticMapSpec wide =
        fiber_frame_embedding(sphere, vec2(0.03, -0.05), 0.24, rho_a, r_min, 1e-3);
    CHECK(check_containment(wide, 3000, 0.0).pass);
}

TEST_CASE("local ball embedding capacity and certification") {
    auto torus = shared_torus();
    const double d = 0.1, eps = 1e-3;
    const double rho = std::sqrt(1 / 1.1);
    SymplecticMapSpec ball = local_ball_embedding(torus, vec2(0.3, 0.3), d, rho, 1.0, eps);
    CHECK(ball.domain_capacity == doctest::Approx(2 * d * rho * sq(1 - eps)).epsilon(1e-12));
    CHECK(ball.domain_capacity == doctest::Approx(0.19069 * sq(1 - eps)).epsilon(1e-4));
    // center goes to (q0, 0): the chart origin with zero covector
    CHECK(ball.apply(Vec::Zero(4)).norm() == 0.0);

    EmbeddingCertificate cert =
        certify(ball, {CheckKind::Symplectic, CheckKind::Liouville, CheckKind::Containment,
                       CheckKind::Relative},
                {.samples = 2000, .tol = 1e-8});
    CHECK(cert.pass);
    for (const auto& c : cert.checks) CHECK(c.pass);
}

TEST_CASE("disjointness by base tubes and the self-overlap control") {
    auto torus = shared_torus();
    const double rho = std::sqrt(1 / 1.2);
    SymplecticMapSpec b0 = local_ball_embedding(torus, vec2(0.0, 0.0), 0.2, rho, 1.0, 1e-3);
    SymplecticMapSpec b1 = local_ball_embedding(torus, vec2(0.5, 0.0), 0.2, rho, 1.0, 1e-3);
    CheckResult dis = check_disjoint(b0, b1, 200, 0.0);
    CHECK(dis.pass);
    CHECK(dis.notes == "base-tubes");

    CheckResult self = check_disjoint(b0, b0, 200, 0.0);
    CHECK_FALSE(self.pass);

    // sampled route: the same bidisc map against itself must also fail
    SymplecticMapSpec e = bidisc_embedding(1, 1, 1, 1e-3);
    CheckResult sampled = check_disjoint(e, e, 200, 0.0);
    CHECK_FALSE(sampled.pass);
    CHECK(sampled.notes == "sampled-lipschitz");
}

TEST_CASE("certificate aggregation and serialization") {
    SymplecticMapSpec e = bidisc_embedding(1, 1, 2, 1e-3);
    EmbeddingCertificate cert = certify(
        e, {CheckKind::Symplectic, CheckKind::Liouville, CheckKind::Containment,
            CheckKind::Relative},
        {.samples = 1000, .tol = 1e-8});
    CHECK(cert.pass);

    CertificateStore store;
    const std::string id = store.add(cert);
    CHECK(id == "cert-000001");
    CHECK(store.find(id).has_value());
    CHECK_FALSE(store.find("cert-999999").has_value());

    nlohmann::json j = store.find(id)->to_json();
    CHECK(j["map"] == "bidisc");
    CHECK(j["params"]["a"] == 1.0);
    CHECK(j["checks"].size() == 4);
    CHECK(j["checks"][0]["name"] == "symplectic");
    CHECK(j["checks"][0]["samples"] == 1000);
    CHECK(j["pass"] == true);

    // empty constraint list: vacuous pass, flagged
    EmbeddingCertificate vac = certify(e, {});
    CHECK(vac.pass);
    CHECK(vac.note == "no checks requested");

    // broken map fails with the offending check named
    SymplecticMapSpec broken = e;
    broken.map = [](const Vec& x) {
        Vec y = x;
        y.tail(2) *= 2;
        return y;
    };
    broken.jacobian = nullptr;  // forces the FD recipe
    EmbeddingCertificate bad =
        certify(broken, {CheckKind::Symplectic}, {.samples = 200, .tol = 1e-8});
    CHECK_FALSE(bad.pass);
    CHECK(bad.checks[0].name == "symplectic");
    CHECK_FALSE(bad.checks[0].pass);
}
