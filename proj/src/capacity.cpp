#include "capacity.hpp"

#include <cmath>

#include "sobol.hpp"

namespace sml {

double ball_volume(int n, double r) {
    if (n < 0) fail(ErrorKind::InvalidArgument, "ball dimension must be nonnegative");
    return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(r, n);
}

double euclidean_volume(const RegionDescriptor& region) {
    switch (region.kind) {
        case RegionDescriptor::Kind::Ball:
            return ball_volume(region.n, region.radius);
        case RegionDescriptor::Kind::BiDisc:
            return ball_volume(region.n, region.a) * ball_volume(region.n, region.b);
        case RegionDescriptor::Kind::DiscBundle:
            // Liouville volume: Vol_g(N) x vol(B^n(r))
            return region.model->riemannian_volume() * ball_volume(region.n, region.radius);
        case RegionDescriptor::Kind::Box: {
            double v = 1;
            for (const auto& iv : region.box) v *= iv[1] - iv[0];
            return v;
        }
    }
    fail(ErrorKind::InvalidArgument, "unsupported region");
}

double gromov_width_volume_bound(const RegionDescriptor& region) {
    int phase_dim = 0;
    switch (region.kind) {
        case RegionDescriptor::Kind::Ball:
            phase_dim = region.n;
            break;
        case RegionDescriptor::Kind::BiDisc:
        case RegionDescriptor::Kind::DiscBundle:
            phase_dim = 2 * region.n;
            break;
        case RegionDescriptor::Kind::Box:
            phase_dim = static_cast<int>(region.box.size());
            break;
    }
    if (phase_dim % 2 != 0) fail(ErrorKind::InvalidArgument, "region has odd dimension");
    const int n = phase_dim / 2;
    return std::pow(std::tgamma(n + 1.0) * euclidean_volume(region), 1.0 / n);
}

double bidisc_gromov_lower(double a, double b, double eps, int n, CertificateStore& store,
                           std::string* cert_id, long samples, double tol) {
    SymplecticMapSpec e = bidisc_embedding(a, b, n, eps);
    CertifyOptions opt;
    opt.samples = samples;
    opt.tol = tol;
    EmbeddingCertificate cert =
        certify(e, {CheckKind::Symplectic, CheckKind::Liouville, CheckKind::Containment,
                    CheckKind::Relative},
                opt);
    const std::string id = store.add(cert);
    if (cert_id) *cert_id = id;
    if (!cert.pass)
        fail(ErrorKind::CheckFailed, "bi-disc embedding certification failed (" + id + ")");
    return e.domain_capacity;  // 4ab(1-eps)^2
}

double bidisc_cyl_upper(double a, double b) { return 4 * a * b; }

double bidisc_shadow_box_area(double a, double b, int n, long samples) {
    Sobol sob(2 * n);
    double qlo = 0, qhi = 0, plo = 0, phi = 0;
    long taken = 0;
    std::vector<double> u(2 * n);
    for (std::uint64_t idx = 1; taken < samples; ++idx) {
        sob.point(idx, u.data());
        Vec q(n), p(n);
        for (int i = 0; i < n; ++i) q[i] = (2 * u[i] - 1) * a;
        for (int i = 0; i < n; ++i) p[i] = (2 * u[n + i] - 1) * b;
        if (q.norm() >= a || p.norm() >= b) continue;
        qlo = std::min(qlo, q[0]);
        qhi = std::max(qhi, q[0]);
        plo = std::min(plo, p[0]);
        phi = std::max(phi, p[0]);
        ++taken;
    }
    return (qhi - qlo) * (phi - plo);
}

nlohmann::json CapacityReport::to_json() const {
    nlohmann::json j;
    j["region"] = region.to_json();
    j["gromov_lower"] = gromov_lower;
    j["gromov_certificate"] = gromov_certificate;
    j["cyl_upper"] = cyl_upper;
    j["cyl_method"] = cyl_method;
    j["volume"] = volume;
    j["conformality_ok"] = conformality_ok;
    j["monotonicity_ok"] = monotonicity_ok;
    return j;
}

CapacityReport bidisc_capacity_report(double a, double b, int n, double eps,
                                      CertificateStore& store, long samples) {
    CapacityReport rep;
    rep.region = RegionDescriptor::bi_disc(n, a, b);
    rep.gromov_lower = bidisc_gromov_lower(a, b, eps, n, store, &rep.gromov_certificate, samples);
    rep.cyl_upper = bidisc_cyl_upper(a, b);
    rep.cyl_method = "projection-shadow";
    rep.volume = euclidean_volume(rep.region);
    if (rep.gromov_lower > rep.cyl_upper)
        fail(ErrorKind::CheckFailed, "capacity ordering violated: Gr > c_Z");

    // conformality: scaling both radii by lambda scales the bound by lambda^2
    const double lam = 1.75;
    const double scaled = 4 * (lam * a) * (lam * b) * sq(1 - eps);
    rep.conformality_ok = std::abs(scaled - lam * lam * rep.gromov_lower) <=
                          1e-12 * std::max(1.0, std::abs(scaled));
    // monotonicity: enlarging the bi-disc never shrinks the reported bound
    rep.monotonicity_ok = 4 * (a * 1.1) * (b * 1.2) * sq(1 - eps) >= rep.gromov_lower;
    return rep;
}

nlohmann::json SpherePackingReport::to_json() const {
    return {{"n", n},
            {"ball_capacity", ball_capacity},
            {"packing_number", packing_number},
            {"two_ball_volume", two_ball_volume},
            {"bundle_volume", bundle_volume},
            {"volume_gap", volume_gap},
            {"four_diam", four_diam}};
}

SpherePackingReport sphere_packing_example(int n) {
    if (n < 1 || n > 3) fail(ErrorKind::InvalidArgument, "sphere example supports n in {1,2,3}");
    SpherePackingReport rep;
    rep.n = n;
    const double r = 1 / std::sqrt(M_PI);
    rep.ball_capacity = M_PI * r * r;  // = 1
    rep.packing_number = 2 * rep.ball_capacity;
    rep.two_ball_volume = 2 * ball_volume(2 * n, r);
    const auto sphere = std::make_shared<const Manifold>(
        Manifold::round_sphere(n, 0.5 / M_PI));  // diam = pi R = 1/2
    rep.bundle_volume = sphere->riemannian_volume() * ball_volume(n, 1.0);
    rep.volume_gap = std::abs(rep.two_ball_volume - rep.bundle_volume);
    rep.four_diam = 4 * sphere->diameter().value;
    return rep;
}

nlohmann::json PackingAuditReport::to_json() const {
    return {{"pairs", pairs},
            {"violations", violations},
            {"worst_excess", worst_excess},
            {"tightest_ratio", tightest_ratio},
            {"ok", ok}};
}

PackingAuditReport packing_audit(const std::vector<PackingRecord>& records, double tolerance) {
    PackingAuditReport rep;
    rep.pairs = static_cast<long>(records.size());
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    for (const auto& rec : records) {
        const double sum = rec.pi_r0_sq + rec.pi_r1_sq;
        const double bound = 4 * rec.bundle_r * rec.d_g;
        rep.worst_excess = std::max(rep.worst_excess, sum - bound);
        if (bound > 0) rep.tightest_ratio = std::max(rep.tightest_ratio, sum / bound);
        if (sum > bound + tolerance) ++rep.violations;
    }
    if (records.empty()) rep.worst_excess = 0;
    rep.ok = rep.violations == 0;
    return rep;
}

}  // namespace sml
