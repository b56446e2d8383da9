#include "symplectic.hpp"

#include <cmath>

#include "sobol.hpp"

namespace sml {

// ---------------------------------------------------------------------------
// profile and radial extension

BidiscProfile::BidiscProfile(double a, double b) {
    if (!(a > 0) || !(b > 0)) fail(ErrorKind::InvalidArgument, "bi-disc radii must be positive");
    c = 4 * a * b / M_PI;
    qmax = std::sqrt(c);
}

double BidiscProfile::f(double q) const {
    if (std::abs(q) > qmax * (1 + 1e-12))
        fail(ErrorKind::InvalidArgument,
             "profile argument outside [-2 sqrt(ab/pi), 2 sqrt(ab/pi)]");
    const double qq = std::clamp(q, -qmax, qmax);
    return (c / 2) * std::asin(qq / qmax) + (qq / 2) * std::sqrt(std::max(0.0, c - qq * qq));
}

double BidiscProfile::fp(double q) const {
    if (std::abs(q) > qmax * (1 + 1e-12))
        fail(ErrorKind::InvalidArgument,
             "profile argument outside [-2 sqrt(ab/pi), 2 sqrt(ab/pi)]");
    return std::sqrt(std::max(0.0, c - q * q));
}

std::pair<double, double> bidisc_profile(double a, double b, double q) {
    BidiscProfile pr(a, b);
    return {pr.f(q), pr.fp(q)};
}

namespace {

// Scalar pieces of phi and (Dphi^-1)^T with series fallbacks near r = 0:
// beta = f(r)/r, u = 1/beta, w = 1/f', primes are d/dr.
struct RadialParts {
    double beta, fp, u, w, up, wp;
};

RadialParts radial_parts(const BidiscProfile& pr, double r) {
    RadialParts parts{};
    const double c = pr.c, sc = std::sqrt(c);
    if (r < 1e-6 * pr.qmax) {
        const double r2 = r * r;
        parts.beta = sc * (1 - r2 / (6 * c) - r2 * r2 / (40 * c * c));
        parts.fp = sc * (1 - r2 / (2 * c) - r2 * r2 / (8 * c * c));
        parts.u = (1 / sc) * (1 + r2 / (6 * c));
        parts.w = (1 / sc) * (1 + r2 / (2 * c));
        parts.up = r / (3 * c * sc);
        parts.wp = r / (c * sc);
        return parts;
    }
    parts.fp = pr.fp(r);
    parts.beta = pr.f(r) / r;
    parts.u = 1 / parts.beta;
    parts.w = 1 / parts.fp;
    const double betap = (parts.fp - parts.beta) / r;
    parts.up = -betap * parts.u * parts.u;
    const double fpp = -r / parts.fp;
    parts.wp = -fpp * parts.w * parts.w;
    return parts;
}

}  // namespace

RadialExtension radial_extension(double a, double b, const Vec& q) {
    BidiscProfile pr(a, b);
    const int n = static_cast<int>(q.size());
    const double r = q.norm();
    RadialExtension out;
    if (r < 1e-12 * pr.qmax) {
        out.phi = Vec::Zero(n);
        out.dphi = pr.qmax * Mat::Identity(n, n);
        return out;
    }
    const RadialParts parts = radial_parts(pr, r);
    const Vec qh = q / r;
    out.phi = parts.beta * q;
    out.dphi = parts.beta * Mat::Identity(n, n) + (parts.fp - parts.beta) * (qh * qh.transpose());
    return out;
}

// ---------------------------------------------------------------------------
// regions

RegionDescriptor RegionDescriptor::ball(int n, double r) {
    RegionDescriptor d;
    d.kind = Kind::Ball;
    d.n = n;
    d.radius = r;
    return d;
}

RegionDescriptor RegionDescriptor::bi_disc(int n, double a, double b) {
    RegionDescriptor d;
    d.kind = Kind::BiDisc;
    d.n = n;
    d.a = a;
    d.b = b;
    return d;
}

RegionDescriptor RegionDescriptor::disc_bundle(std::shared_ptr<const Manifold> m, double r,
                                               Vec center) {
    RegionDescriptor d;
    d.kind = Kind::DiscBundle;
    d.n = m->dim();
    d.radius = r;
    d.model = std::move(m);
    d.center = std::move(center);
    return d;
}

RegionDescriptor RegionDescriptor::product_box(std::vector<std::array<double, 2>> intervals) {
    RegionDescriptor d;
    d.kind = Kind::Box;
    d.n = static_cast<int>(intervals.size()) / 2;
    d.box = std::move(intervals);
    return d;
}

double RegionDescriptor::margin(const Vec& x) const {
    switch (kind) {
        case Kind::Ball:
            return radius - x.norm();
        case Kind::BiDisc:
            return std::min(a - x.head(n).norm(), b - x.tail(n).norm());
        case Kind::DiscBundle: {
            const Vec xq = x.head(n), xp = x.tail(n);
            const Mat gn = model->normal_metric(center, xq);
            const double norm =
                std::sqrt(std::max(0.0, xp.dot(gn.llt().solve(xp))));
            return radius - norm;
        }
        case Kind::Box: {
            double m = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < box.size(); ++i)
                m = std::min({m, x[i] - box[i][0], box[i][1] - x[i]});
            return m;
        }
    }
    fail(ErrorKind::Numeric, "unreachable");
}

nlohmann::json RegionDescriptor::to_json() const {
    nlohmann::json j;
    switch (kind) {
        case Kind::Ball:
            j["kind"] = "ball";
            j["n"] = n;
            j["radius"] = radius;
            break;
        case Kind::BiDisc:
            j["kind"] = "bi-disc";
            j["n"] = n;
            j["a"] = a;
            j["b"] = b;
            break;
        case Kind::DiscBundle:
            j["kind"] = "disc-bundle";
            j["radius"] = radius;
            j["model"] = model->to_json();
            break;
        case Kind::Box:
            j["kind"] = "box";
            j["intervals"] = box;
            break;
    }
    return j;
}

// ---------------------------------------------------------------------------
// constructions

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double scale) {
    const double h = 1e-6 * scale;
    const int m = static_cast<int>(x.size());
    Mat j(m, m);
    for (int k = 0; k < m; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        j.col(k) = (f(xp) - f(xm)) / (2 * h);
    }
    return j;
}

SymplecticMapSpec bidisc_embedding(double a, double b, int n, double eps) {
    if (!(eps > 0) || !(eps < 1)) fail(ErrorKind::InvalidArgument, "shrink eps must be in (0,1)");
    if (n < 1) fail(ErrorKind::InvalidArgument, "dimension n must be >= 1");
    BidiscProfile pr(a, b);
    const double rdom = pr.qmax * (1 - eps);
    SymplecticMapSpec spec;
    spec.name = "bidisc";
    spec.params = {{"a", a}, {"b", b}, {"n", n}, {"eps", eps}};
    spec.n = n;
    spec.domain = RegionDescriptor::ball(2 * n, rdom);
    spec.target = RegionDescriptor::bi_disc(n, a, b);
    spec.analytic_jacobian = true;
    spec.domain_capacity = M_PI * rdom * rdom;  // = 4ab(1-eps)^2

    const double bs = b;
    spec.map = [pr, n, bs](const Vec& x) {
        const Vec q = x.head(n), p = x.tail(n);
        const double r = q.norm();
        Vec out(2 * n);
        if (r < 1e-12 * pr.qmax) {
            out.head(n) = (pr.qmax / bs) * q;
            out.tail(n) = (bs / pr.qmax) * p;
            return out;
        }
        const RadialParts pa = radial_parts(pr, r);
        const double s = q.dot(p);
        out.head(n) = (pa.beta / bs) * q;
        // (Dphi^-1)^T p = u p + (w - u) (q.p / r^2) q
        out.tail(n) = bs * (pa.u * p + (pa.w - pa.u) * (s / (r * r)) * q);
        return out;
    };
    spec.jacobian = [pr, n, bs](const Vec& x) {
        const Vec q = x.head(n), p = x.tail(n);
        const double r = q.norm();
        Mat j = Mat::Zero(2 * n, 2 * n);
        if (r < 1e-12 * pr.qmax) {
            j.topLeftCorner(n, n) = (pr.qmax / bs) * Mat::Identity(n, n);
            j.bottomRightCorner(n, n) = (bs / pr.qmax) * Mat::Identity(n, n);
            return j;
        }
        const RadialParts pa = radial_parts(pr, r);
        const Mat proj = (q * q.transpose()) / (r * r);
        const double s = q.dot(p);
        const double wu = pa.w - pa.u;
        j.topLeftCorner(n, n) =
            (pa.beta * Mat::Identity(n, n) + (pa.fp - pa.beta) * proj) / bs;
        j.bottomRightCorner(n, n) = bs * (pa.u * Mat::Identity(n, n) + wu * proj);
        Mat bl(n, n);
        for (int k = 0; k < n; ++k) {
            Vec col = (pa.up / r) * q[k] * p;
            col += ((pa.wp - pa.up) / r) * q[k] * (s / (r * r)) * q;
            col += (wu / (r * r)) * (p[k] * q + s * Vec::Unit(n, k));
            col -= 2 * (wu / (r * r)) * (s * q[k] / (r * r)) * q;
            bl.col(k) = bs * col;
        }
        j.bottomLeftCorner(n, n) = bl;
        return j;
    };
    return spec;
}

SymplecticMapSpec fiber_frame_embedding(std::shared_ptr<const Manifold> model, const Vec& q0,
                                        double d, double rho_p, double target_r, double eps) {
    const Bound inj = model->injectivity_radius();
    if (!(d > 0) || d >= inj.value / 2 * (1 + 1e-12))
        fail(ErrorKind::InvalidArgument,
             "fiber frame embedding needs 0 < d < injectivity_radius/2");
    const int n = model->dim();
    SymplecticMapSpec spec;
    spec.name = "fiber-frame";
    spec.params = {{"d", d}, {"rho_p", rho_p}, {"target_r", target_r}, {"eps", eps}};
    spec.n = n;
    spec.domain = RegionDescriptor::bi_disc(n, d, rho_p);
    const Vec center = model->wrap(q0);
    spec.target = RegionDescriptor::disc_bundle(std::move(model), target_r, center);
    spec.analytic_jacobian = true;
    spec.sampling_shrink = 1 - eps;
    spec.base_tube = d;
    // In its own exponential normal chart the lift of exp_q0 is the identity
    // on coordinates; the chart metric carries all of the geometry.
    spec.map = [](const Vec& x) { return x; };
    spec.jacobian = [n](const Vec&) { return Mat(Mat::Identity(2 * n, 2 * n)); };
    return spec;
}

SymplecticMapSpec local_ball_embedding(std::shared_ptr<const Manifold> model, const Vec& q0,
                                       double d, double rho_p, double target_r, double eps) {
    const Bound inj = model->injectivity_radius();
    if (!(d > 0) || d > inj.value * (1 + 1e-12))
        fail(ErrorKind::InvalidArgument,
             "local ball embedding needs 0 < d <= injectivity_radius");
    // Bi-disc factor P_L(d/2, rho_p): base tubes of two balls at distance d
    // stay disjoint, and the ball capacity is 4 (d/2) rho_p = 2 d rho_p.
    SymplecticMapSpec spec = bidisc_embedding(d / 2, rho_p, model->dim(), eps);
    spec.name = "local-ball";
    spec.params = {{"d", d},
                   {"rho_p", rho_p},
                   {"eps", eps},
                   {"target_r", target_r},
                   {"n", model->dim()}};
    const Vec center = model->wrap(q0);
    spec.target = RegionDescriptor::disc_bundle(std::move(model), target_r, center);
    // Base displacement never exceeds f(qmax (1-eps)) / rho_p < d/2.
    BidiscProfile pr(d / 2, rho_p);
    spec.base_tube = pr.f(pr.qmax * (1 - eps)) / rho_p;
    return spec;
}

// ---------------------------------------------------------------------------
// checks

namespace {

// Deterministic Sobol samples of the (scaled) domain; rejection keeps only
// points inside, scanning raw indices in order.
std::vector<Vec> sample_domain(const SymplecticMapSpec& m, long count) {
    const int dim = 2 * m.n;
    Sobol sob(dim);
    std::vector<Vec> out;
    out.reserve(count);
    const double shrink = m.sampling_shrink;
    const RegionDescriptor& dom = m.domain;
    std::vector<double> half(dim, 0.0);
    switch (dom.kind) {
        case RegionDescriptor::Kind::Ball:
            for (int i = 0; i < dim; ++i) half[i] = dom.radius * shrink;
            break;
        case RegionDescriptor::Kind::BiDisc:
            for (int i = 0; i < m.n; ++i) half[i] = dom.a * shrink;
            for (int i = m.n; i < dim; ++i) half[i] = dom.b * shrink;
            break;
        default:
            fail(ErrorKind::InvalidArgument, "unsupported sampling domain");
    }
    std::uint64_t idx = 0;
    std::vector<double> u(dim);
    while (static_cast<long>(out.size()) < count) {
        sob.point(++idx, u.data());
        Vec x(dim);
        for (int i = 0; i < dim; ++i) x[i] = (2 * u[i] - 1) * half[i];
        const bool inside = dom.kind == RegionDescriptor::Kind::Ball
                                ? x.norm() <= dom.radius * shrink
                                : (x.head(m.n).norm() <= dom.a * shrink &&
                                   x.tail(m.n).norm() <= dom.b * shrink);
        if (inside) out.push_back(std::move(x));
        if (idx > 1000 * static_cast<std::uint64_t>(count) + 100000)
            fail(ErrorKind::Numeric, "domain sampling rejection rate too high");
    }
    return out;
}

Mat standard_omega(int n) {
    Mat om = Mat::Zero(2 * n, 2 * n);
    om.topRightCorner(n, n) = Mat::Identity(n, n);
    om.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return om;
}

Mat jac_of(const SymplecticMapSpec& m, const Vec& x) {
    if (m.jacobian) return m.jacobian(x);
    double scale = 1.0;
    if (m.domain.kind == RegionDescriptor::Kind::Ball) scale = m.domain.radius;
    if (m.domain.kind == RegionDescriptor::Kind::BiDisc) scale = std::max(m.domain.a, m.domain.b);
    return fd_jacobian(m.map, x, scale);
}

}  // namespace

CheckResult check_symplectic(const SymplecticMapSpec& m, long samples, double tol) {
    const Mat om = standard_omega(m.n);
    const std::vector<Vec> xs = sample_domain(m, samples);
    const double worst = parallel_max(static_cast<std::int64_t>(xs.size()), [&](std::int64_t i) {
        const Mat j = jac_of(m, xs[i]);
        return (j.transpose() * om * j - om).norm();
    });
    return {"symplectic", static_cast<long>(xs.size()), tol, worst, worst <= tol, ""};
}

CheckResult check_liouville(const SymplecticMapSpec& m, long samples, double tol) {
    const std::vector<Vec> xs = sample_domain(m, samples);
    const int n = m.n;
    const double worst = parallel_max(static_cast<std::int64_t>(xs.size()), [&](std::int64_t i) {
        const Mat j = jac_of(m, xs[i]);
        const Vec y = m.apply(xs[i]);
        Vec lam_y = Vec::Zero(2 * n), lam_x = Vec::Zero(2 * n);
        lam_y.head(n) = y.tail(n);  // lambda = p dq
        lam_x.head(n) = xs[i].tail(n);
        return (j.transpose() * lam_y - lam_x).norm();
    });
    return {"liouville", static_cast<long>(xs.size()), tol, worst, worst <= tol, ""};
}

CheckResult check_containment(const SymplecticMapSpec& m, long samples, double required_margin) {
    const std::vector<Vec> xs = sample_domain(m, samples);
    // violation = required_margin - margin; every sample must clear it
    const double worst = parallel_max(static_cast<std::int64_t>(xs.size()), [&](std::int64_t i) {
        return required_margin - m.target.margin(m.apply(xs[i]));
    });
    return {"containment", static_cast<long>(xs.size()), 0.0, worst, worst <= 0.0, ""};
}

CheckResult check_relative_boundary(const SymplecticMapSpec& m, long samples, double tol) {
    const int n = m.n;
    const long half = std::max<long>(1, samples / 2);
    const std::vector<Vec> xs = sample_domain(m, half);
    double worst = 0;
    for (const Vec& x : xs) {
        Vec real = x;
        real.tail(n).setZero();
        worst = std::max(worst, m.apply(real).tail(n).norm());
        Vec imag = x;
        imag.head(n).setZero();
        worst = std::max(worst, m.apply(imag).head(n).norm());
    }
    return {"relative", 2 * half, tol, worst, worst <= tol, ""};
}

CheckResult check_disjoint(const SymplecticMapSpec& a, const SymplecticMapSpec& b, long samples,
                           double margin) {
    if (a.target.kind == RegionDescriptor::Kind::DiscBundle &&
        b.target.kind == RegionDescriptor::Kind::DiscBundle && a.base_tube > 0 &&
        b.base_tube > 0 && a.target.model == b.target.model) {
        const double sep = a.target.model->distance(a.target.center, b.target.center).value;
        const double viol = (a.base_tube + b.base_tube + margin) - sep;
        return {"disjoint", 0, 0.0, viol, viol <= 0.0, "base-tubes"};
    }
    // Sampled route with a Lipschitz slack; meaningful when both images live
    // in one coordinate system.
    const std::vector<Vec> xa = sample_domain(a, samples), xb = sample_domain(b, samples);
    std::vector<Vec> ya(xa.size()), yb(xb.size());
    double lip = 0;
    for (size_t i = 0; i < xa.size(); ++i) {
        ya[i] = a.apply(xa[i]);
        lip = std::max(lip, operator_norm(jac_of(a, xa[i])));
    }
    for (size_t i = 0; i < xb.size(); ++i) {
        yb[i] = b.apply(xb[i]);
        lip = std::max(lip, operator_norm(jac_of(b, xb[i])));
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (const Vec& p : ya)
        for (const Vec& q : yb) min_dist = std::min(min_dist, (p - q).norm());
    const double dom_radius = a.domain.kind == RegionDescriptor::Kind::Ball
                                  ? a.domain.radius
                                  : std::max(a.domain.a, a.domain.b);
    const double mesh =
        2 * dom_radius * std::pow(1.0 / static_cast<double>(samples), 1.0 / (2.0 * a.n));
    const double justified = min_dist - 2 * lip * mesh;
    const double viol = margin - justified;
    return {"disjoint", static_cast<long>(xa.size() + xb.size()), 0.0, viol, viol <= 0.0,
            "sampled-lipschitz"};
}

// ---------------------------------------------------------------------------
// certificates

nlohmann::json CheckResult::to_json() const {
    nlohmann::json j{{"name", name},   {"samples", samples}, {"tol", tol},
                     {"worst", worst}, {"pass", pass}};
    if (!notes.empty()) j["notes"] = notes;
    return j;
}

nlohmann::json EmbeddingCertificate::to_json() const {
    nlohmann::json j;
    j["id"] = id;
    j["map"] = map_name;
    j["params"] = params;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) arr.push_back(c.to_json());
    j["checks"] = arr;
    j["pass"] = pass;
    if (!note.empty()) j["note"] = note;
    return j;
}

EmbeddingCertificate certify(const SymplecticMapSpec& m, const std::vector<CheckKind>& checks,
                             const CertifyOptions& opt) {
    EmbeddingCertificate cert;
    cert.map_name = m.name;
    cert.params = m.params;
    if (checks.empty()) {
        cert.pass = true;
        cert.note = "no checks requested";
        return cert;
    }
    bool ok = true;
    for (CheckKind k : checks) {
        CheckResult r;
        switch (k) {
            case CheckKind::Symplectic:
                r = check_symplectic(m, opt.samples, opt.tol);
                break;
            case CheckKind::Liouville:
                r = check_liouville(m, opt.samples, opt.tol);
                break;
            case CheckKind::Containment:
                r = check_containment(m, opt.samples, opt.containment_margin);
                break;
            case CheckKind::Relative:
                r = check_relative_boundary(m, opt.samples, opt.relative_tol);
                break;
        }
        ok = ok && r.pass;
        cert.checks.push_back(std::move(r));
    }
    cert.pass = ok;
    return cert;
}

std::string CertificateStore::add(EmbeddingCertificate cert) {
    std::lock_guard<std::mutex> lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "cert-%06zu", items_.size() + 1);
    cert.id = buf;
    items_.push_back(std::move(cert));
    return items_.back().id;
}

std::optional<EmbeddingCertificate> CertificateStore::find(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& c : items_)
        if (c.id == id) return c;
    return std::nullopt;
}

size_t CertificateStore::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return items_.size();
}

}  // namespace sml
