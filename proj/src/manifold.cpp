#include "manifold.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>

#include "sobol.hpp"

namespace sml {

namespace {

// Directions from Sobol points in [-1,1]^n, skipping near-degenerate draws.
Vec sobol_direction(const Sobol& sob, std::uint64_t& index, int n) {
    for (;;) {
        std::vector<double> p = sob.point(++index);
        Vec d(n);
        for (int i = 0; i < n; ++i) d[i] = 2 * p[i] - 1;
        const double nn = d.norm();
        if (nn > 1e-3) return d / nn;
    }
}

}  // namespace

struct Manifold::Cache {
    std::mutex mu;
    std::optional<double> delta0;
    std::map<int, Bound> const_a;
    std::optional<Bound> diameter;

    struct Graph {
        int size = 0;
        std::vector<Vec> nodes;
        std::vector<std::vector<std::pair<int, double>>> adj;
    };
    std::shared_ptr<const Graph> graph;
};

// ---------------------------------------------------------------------------
// construction / serialization

Manifold Manifold::flat_torus(std::vector<double> periods) {
    Manifold m;
    m.kind_ = ManifoldKind::FlatTorus;
    m.dim_ = static_cast<int>(periods.size());
    m.periods_ = std::move(periods);
    m.cache_ = std::make_shared<Cache>();
    m.validate();
    return m;
}

Manifold Manifold::round_sphere(int dim, double radius) {
    Manifold m;
    m.kind_ = ManifoldKind::RoundSphere;
    m.dim_ = dim;
    m.radius_ = radius;
    m.cache_ = std::make_shared<Cache>();
    m.validate();
    return m;
}

Manifold Manifold::surface_of_revolution(const std::string& profile, double z_period,
                                         double theta_period, double injectivity_bound) {
    Manifold m;
    m.kind_ = ManifoldKind::Revolution;
    m.dim_ = 2;
    m.profile_ = Expr::parse(profile, {"z"});
    m.z_period_ = z_period;
    m.theta_period_ = theta_period;
    m.injectivity_bound_ = injectivity_bound;
    m.cache_ = std::make_shared<Cache>();
    m.validate();
    return m;
}

Manifold Manifold::chart_metric(std::vector<std::array<double, 2>> domain,
                                std::vector<std::vector<std::string>> g,
                                double injectivity_bound) {
    Manifold m;
    m.kind_ = ManifoldKind::ChartMetric;
    m.dim_ = static_cast<int>(domain.size());
    m.box_ = std::move(domain);
    std::vector<std::string> vars;
    for (int i = 0; i < m.dim_; ++i) vars.push_back("q" + std::to_string(i + 1));
    if (static_cast<int>(g.size()) != m.dim_)
        fail(ErrorKind::InvalidArgument, "chart-metric: g must be an n x n matrix of expressions");
    m.gexpr_.resize(m.dim_);
    for (int i = 0; i < m.dim_; ++i) {
        if (static_cast<int>(g[i].size()) != m.dim_)
            fail(ErrorKind::InvalidArgument, "chart-metric: g must be an n x n matrix of expressions");
        for (int j = 0; j < m.dim_; ++j) m.gexpr_[i].push_back(Expr::parse(g[i][j], vars));
    }
    m.injectivity_bound_ = injectivity_bound;
    m.cache_ = std::make_shared<Cache>();
    m.validate();
    return m;
}

void Manifold::validate() const {
    if (dim_ < 1) fail(ErrorKind::InvalidArgument, "manifold dimension must be >= 1");
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            for (double p : periods_)
                if (!(p > 0)) fail(ErrorKind::InvalidArgument, "torus periods must be positive");
            break;
        case ManifoldKind::RoundSphere:
            if (!(radius_ > 0)) fail(ErrorKind::InvalidArgument, "sphere radius must be positive");
            break;
        case ManifoldKind::Revolution: {
            if (!(z_period_ > 0) || !(theta_period_ > 0))
                fail(ErrorKind::InvalidArgument, "revolution periods must be positive");
            for (int i = 0; i <= 64; ++i) {
                const double z = z_period_ * i / 64.0;
                if (!(profile_r(z) > 0))
                    fail(ErrorKind::InvalidArgument, "revolution profile must be positive");
            }
            break;
        }
        case ManifoldKind::ChartMetric: {
            for (const auto& iv : box_)
                if (!(iv[0] < iv[1]))
                    fail(ErrorKind::InvalidArgument, "chart-metric domain box is empty");
            Sobol sob(dim_);
            for (int s = 0; s < 8; ++s) {
                Vec q(dim_);
                std::vector<double> u = sob.point(s + 1);
                for (int i = 0; i < dim_; ++i) q[i] = box_[i][0] + u[i] * (box_[i][1] - box_[i][0]);
                metric_at(q);  // throws if not SPD
            }
            break;
        }
    }
}

Manifold Manifold::from_json(const nlohmann::json& doc) {
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "flat-torus") {
        return flat_torus(doc.at("periods").get<std::vector<double>>());
    }
    if (kind == "round-sphere") {
        return round_sphere(doc.at("dim").get<int>(), doc.at("radius").get<double>());
    }
    if (kind == "surface-of-revolution") {
        return surface_of_revolution(doc.at("profile").get<std::string>(),
                                     doc.value("z_period", 2 * M_PI),
                                     doc.value("theta_period", 2 * M_PI),
                                     doc.value("injectivity_bound", 0.0));
    }
    if (kind == "chart-metric") {
        std::vector<std::array<double, 2>> box;
        for (const auto& iv : doc.at("domain"))
            box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        return chart_metric(std::move(box),
                            doc.at("g").get<std::vector<std::vector<std::string>>>(),
                            doc.value("injectivity_bound", 0.0));
    }
    fail(ErrorKind::InvalidArgument, "unknown manifold kind '" + kind + "'");
}

Manifold Manifold::from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) fail(ErrorKind::InvalidArgument, "malformed manifold JSON");
    return from_json(doc);
}

nlohmann::json Manifold::to_json() const {
    nlohmann::json doc;
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            doc["kind"] = "flat-torus";
            doc["periods"] = periods_;
            break;
        case ManifoldKind::RoundSphere:
            doc["kind"] = "round-sphere";
            doc["dim"] = dim_;
            doc["radius"] = radius_;
            break;
        case ManifoldKind::Revolution:
            doc["kind"] = "surface-of-revolution";
            doc["profile"] = profile_.text();
            doc["z_period"] = z_period_;
            doc["theta_period"] = theta_period_;
            if (injectivity_bound_ > 0) doc["injectivity_bound"] = injectivity_bound_;
            break;
        case ManifoldKind::ChartMetric: {
            doc["kind"] = "chart-metric";
            nlohmann::json dom = nlohmann::json::array();
            for (const auto& iv : box_) dom.push_back({iv[0], iv[1]});
            doc["domain"] = dom;
            nlohmann::json g = nlohmann::json::array();
            for (const auto& row : gexpr_) {
                nlohmann::json r = nlohmann::json::array();
                for (const auto& e : row) r.push_back(e.text());
                g.push_back(r);
            }
            doc["g"] = g;
            if (injectivity_bound_ > 0) doc["injectivity_bound"] = injectivity_bound_;
            break;
        }
    }
    return doc;
}

void Manifold::set_graph_size_hint(int n) {
    if (n < 100) fail(ErrorKind::InvalidArgument, "graph size hint too small");
    graph_size_hint_ = n;
}

Vec Manifold::sample_point(std::uint64_t index) const {
    Sobol sob(dim_);
    std::vector<double> u = sob.point(index + 1);
    Vec q(dim_);
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            for (int d = 0; d < dim_; ++d) q[d] = u[d] * periods_[d];
            return q;
        case ManifoldKind::Revolution:
            q[0] = u[0] * z_period_;
            q[1] = u[1] * theta_period_;
            return q;
        case ManifoldKind::ChartMetric:
            for (int d = 0; d < dim_; ++d) q[d] = box_[d][0] + u[d] * (box_[d][1] - box_[d][0]);
            return q;
        case ManifoldKind::RoundSphere: {
            const double rr = M_PI * radius_ * 0.999;
            for (std::uint64_t extra = 0;; ++extra) {
                const std::vector<double> uu =
                    extra == 0 ? u : sob.point((index + 1) * 7919 + extra);
                for (int d = 0; d < dim_; ++d) q[d] = (2 * uu[d] - 1) * rr;
                if (q.norm() < rr) return q;
            }
        }
    }
    fail(ErrorKind::Numeric, "unreachable");
}

// ---------------------------------------------------------------------------
// chart bookkeeping

bool Manifold::in_chart(const Vec& q) const {
    if (q.size() != dim_) return false;
    switch (kind_) {
        case ManifoldKind::FlatTorus:
        case ManifoldKind::Revolution:
            return true;
        case ManifoldKind::RoundSphere:
            return q.norm() < M_PI * radius_ * (1 - 1e-12);
        case ManifoldKind::ChartMetric:
            for (int i = 0; i < dim_; ++i)
                if (q[i] < box_[i][0] || q[i] > box_[i][1]) return false;
            return true;
    }
    return false;
}

Vec Manifold::wrap(const Vec& q) const {
    Vec out = q;
    if (kind_ == ManifoldKind::FlatTorus) {
        for (int i = 0; i < dim_; ++i) out[i] = wrap_period(q[i], periods_[i]);
    } else if (kind_ == ManifoldKind::Revolution) {
        out[0] = wrap_period(q[0], z_period_);
        out[1] = wrap_period(q[1], theta_period_);
    }
    return out;
}

namespace {
// Shortest chart representative of b - a (periodic kinds wrap per axis).
Vec chart_delta_impl(const Vec& a, const Vec& b, const std::vector<double>& periods) {
    Vec d = b - a;
    for (int i = 0; i < d.size(); ++i)
        if (i < static_cast<int>(periods.size()) && periods[i] > 0)
            d[i] = wrap_centered(d[i], periods[i]);
    return d;
}
}  // namespace

// ---------------------------------------------------------------------------
// metric

double Manifold::profile_r(double z, double* dr, double* ddr) const {
    Dual2 r = profile_.eval_dual({z}, 0);
    if (dr) *dr = r.d1;
    if (ddr) *ddr = r.d2;
    return r.v;
}

Mat Manifold::metric_at(const Vec& q) const {
    if (!in_chart(q))
        fail(ErrorKind::ChartDomain, "point outside chart domain");
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            return Mat::Identity(dim_, dim_);
        case ManifoldKind::RoundSphere: {
            const double r = q.norm();
            if (r < 1e-14) return Mat::Identity(dim_, dim_);
            const double th = r / radius_;
            const double tang = sq(radius_ * std::sin(th) / r);
            const Vec qh = q / r;
            return tang * Mat::Identity(dim_, dim_) + (1 - tang) * (qh * qh.transpose());
        }
        case ManifoldKind::Revolution: {
            double dr;
            const double r = profile_r(wrap(q)[0], &dr);
            Mat g = Mat::Zero(2, 2);
            g(0, 0) = 1 + dr * dr;
            g(1, 1) = r * r;
            return g;
        }
        case ManifoldKind::ChartMetric: {
            std::vector<double> args(q.data(), q.data() + dim_);
            Mat g(dim_, dim_);
            for (int i = 0; i < dim_; ++i)
                for (int j = 0; j < dim_; ++j) g(i, j) = gexpr_[i][j].eval(args);
            g = 0.5 * (g + g.transpose()).eval();
            Eigen::LLT<Mat> llt(g);
            if (llt.info() != Eigen::Success)
                fail(ErrorKind::Numeric, "metric matrix is not positive definite at sample point");
            return g;
        }
    }
    fail(ErrorKind::Numeric, "unreachable");
}

Mat Manifold::metric_inv_at(const Vec& q) const {
    return metric_at(q).llt().solve(Mat::Identity(dim_, dim_));
}

double Manifold::cometric_norm(const Vec& q, const Vec& p) const {
    const Mat g = metric_at(q);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::Numeric, "metric matrix is not positive definite");
    const double v = p.dot(llt.solve(p));
    return std::sqrt(std::max(0.0, v));
}

double Manifold::tangent_norm(const Vec& q, const Vec& v) const {
    const double s = v.dot(metric_at(q) * v);
    return std::sqrt(std::max(0.0, s));
}

Mat Manifold::gs_frame(const Vec& q) const {
    if (kind_ == ManifoldKind::FlatTorus) return Mat::Identity(dim_, dim_);
    const Mat g = metric_at(q);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
        fail(ErrorKind::Numeric, "metric matrix is not positive definite");
    Mat lt = llt.matrixL().transpose();
    // Gram-Schmidt of the chart basis = inverse of the upper Cholesky factor.
    return lt.triangularView<Eigen::Upper>().solve(Mat::Identity(dim_, dim_));
}

// ---------------------------------------------------------------------------
// sphere closed forms

Vec Manifold::sphere_embed(const Vec& q) const {
    const int n = dim_;
    const double r = q.norm();
    Vec u = Vec::Zero(n + 1);
    if (r < 1e-300) {
        u[n] = 1;
        return u;
    }
    const double th = r / radius_;
    u.head(n) = std::sin(th) * q / r;
    u[n] = std::cos(th);
    return u;
}

Mat Manifold::sphere_embed_jac(const Vec& q) const {
    const int n = dim_;
    const double r = q.norm();
    Mat j = Mat::Zero(n + 1, n);
    if (r < 1e-14) {
        j.topRows(n) = Mat::Identity(n, n);
        return j;
    }
    const double th = r / radius_;
    const Vec qh = q / r;
    j.topRows(n) = std::cos(th) * (qh * qh.transpose()) +
                   (radius_ * std::sin(th) / r) * (Mat::Identity(n, n) - qh * qh.transpose());
    j.row(n) = -std::sin(th) * qh.transpose();
    return j;
}

Vec Manifold::sphere_chart(const Vec& u) const {
    const int n = dim_;
    const Vec w = u.head(n);
    const double s = w.norm();
    const double th = std::atan2(s, u[n]);
    if (th >= M_PI * (1 - 1e-12))
        fail(ErrorKind::ChartDomain, "point at the antipode of the chart pole");
    if (s < 1e-300) return Vec::Zero(n);
    return (radius_ * th / s) * w;
}

// ---------------------------------------------------------------------------
// geodesics

Vec Manifold::geodesic_accel(const Vec& q, const Vec& v) const {
    return -christoffel_apply(q, v, v);
}

Vec Manifold::christoffel_apply(const Vec& q, const Vec& v, const Vec& w) const {
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            return Vec::Zero(dim_);
        case ManifoldKind::Revolution: {
            double dr, ddr;
            const double r = profile_r(wrap(q)[0], &dr, &ddr);
            const double e = 1 + dr * dr;
            Vec out(2);
            out[0] = (dr * ddr / e) * v[0] * w[0] - (r * dr / e) * v[1] * w[1];
            out[1] = (dr / r) * (v[0] * w[1] + v[1] * w[0]);
            return out;
        }
        case ManifoldKind::RoundSphere:
        case ManifoldKind::ChartMetric: {
            // Central finite differences of g, step 1e-5.
            const int n = dim_;
            const double h = 1e-5;
            std::vector<Mat> dg(n);
            for (int k = 0; k < n; ++k) {
                Vec qp = q, qm = q;
                qp[k] += h;
                qm[k] -= h;
                dg[k] = (metric_at(qp) - metric_at(qm)) / (2 * h);
            }
            const Mat ginv = metric_inv_at(q);
            Vec low(n);  // Gamma_{l,ij} v^i w^j
            for (int l = 0; l < n; ++l) {
                double s = 0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        s += 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j)) * v[i] * w[j];
                low[l] = s;
            }
            return ginv * low;
        }
    }
    fail(ErrorKind::Numeric, "unreachable");
}

GeodesicPath Manifold::integrate_rk4(const Vec& q0, const Vec& v0, double T, int steps) const {
    GeodesicPath path;
    path.t.reserve(steps + 1);
    path.q.reserve(steps + 1);
    path.dq.reserve(steps + 1);
    Vec q = q0, v = v0;
    const double h = T / steps;
    auto push = [&](double t, const Vec& qq, const Vec& vv) {
        path.t.push_back(t);
        path.q.push_back(wrap(qq));
        path.dq.push_back(vv);
    };
    push(0, q, v);
    for (int i = 0; i < steps; ++i) {
        const Vec k1q = v, k1v = geodesic_accel(q, v);
        const Vec k2q = v + 0.5 * h * k1v, k2v = geodesic_accel(q + 0.5 * h * k1q, k2q);
        const Vec k3q = v + 0.5 * h * k2v, k3v = geodesic_accel(q + 0.5 * h * k2q, k3q);
        const Vec k4q = v + h * k3v, k4v = geodesic_accel(q + h * k3q, k4q);
        q += (h / 6) * (k1q + 2 * k2q + 2 * k3q + k4q);
        v += (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (kind_ == ManifoldKind::ChartMetric && !in_chart(q))
            fail(ErrorKind::ChartDomain, "geodesic left the chart domain at t=" +
                                             std::to_string((i + 1) * h));
        push((i + 1) * h, q, v);
    }
    // Composite Simpson over the speed samples (steps is kept even).
    double len = 0;
    std::vector<double> speed(path.t.size());
    for (size_t i = 0; i < path.t.size(); ++i) speed[i] = tangent_norm(path.q[i], path.dq[i]);
    for (size_t i = 0; i + 2 < speed.size(); i += 2)
        len += (h / 3) * (speed[i] + 4 * speed[i + 1] + speed[i + 2]);
    path.length = len;
    return path;
}

GeodesicPath Manifold::geodesic(const Vec& q, const Vec& v, double T, int steps) const {
    if (steps != 0 && steps < 16)
        fail(ErrorKind::InvalidArgument, "geodesic integration needs steps >= 16");
    const double s = tangent_norm(q, v);
    if (!(s > 0)) fail(ErrorKind::InvalidArgument, "geodesic needs a nonzero initial velocity");

    if (kind_ == ManifoldKind::FlatTorus) {
        const int m = steps ? steps : 64;
        GeodesicPath path;
        for (int i = 0; i <= m; ++i) {
            const double t = T * i / m;
            path.t.push_back(t);
            path.q.push_back(wrap(q + t * v));
            path.dq.push_back(v);
        }
        path.length = std::abs(T) * s;
        return path;
    }
    if (kind_ == ManifoldKind::RoundSphere) {
        const int m = steps ? steps : 64;
        const Vec u = sphere_embed(q);
        const Mat j = sphere_embed_jac(q);
        const Vec vemb = j * v;
        const Vec vh = vemb / vemb.norm();
        GeodesicPath path;
        for (int i = 0; i <= m; ++i) {
            const double t = T * i / m;
            const double sig = t * s / radius_;
            const Vec ut = std::cos(sig) * u + std::sin(sig) * vh;
            const Vec xt = sphere_chart(ut);
            const Vec vt_emb = s * (std::cos(sig) * vh - std::sin(sig) * u);
            const Mat jt = sphere_embed_jac(xt);
            const Vec vt = (jt.transpose() * jt).llt().solve(jt.transpose() * vt_emb);
            path.t.push_back(t);
            path.q.push_back(xt);
            path.dq.push_back(vt);
        }
        path.length = std::abs(T) * s;
        return path;
    }

    if (steps) {
        int m = steps % 2 ? steps + 1 : steps;
        return integrate_rk4(q, v, T, m);
    }
    int m = 64;
    GeodesicPath path = integrate_rk4(q, v, T, m);
    for (; m <= 32768; ) {
        m *= 2;
        GeodesicPath finer = integrate_rk4(q, v, T, m);
        const bool done = std::abs(finer.length - path.length) < 1e-8;
        path = std::move(finer);
        if (done) break;
    }
    return path;
}

Vec Manifold::exp_map(const Vec& q, const Vec& v) const {
    const double s = tangent_norm(q, v);
    if (s == 0) return wrap(q);
    double inj = std::numeric_limits<double>::infinity();
    if (kind_ == ManifoldKind::FlatTorus || kind_ == ManifoldKind::RoundSphere)
        inj = injectivity_radius().value;
    else if (injectivity_bound_ > 0)
        inj = injectivity_bound_;
    if (s >= inj * (1 + 1e-12))
        fail(ErrorKind::ChartDomain, "exp_map argument beyond the injectivity radius");
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            return wrap(q + v);
        case ManifoldKind::RoundSphere: {
            const Vec u = sphere_embed(q);
            const Vec vemb = sphere_embed_jac(q) * v;
            const double sig = s / radius_;
            const Vec ut = std::cos(sig) * u + std::sin(sig) * (vemb / vemb.norm());
            return sphere_chart(ut);
        }
        default: {
            GeodesicPath p = integrate_rk4(q, v, 1.0, 256);
            return p.q.back();
        }
    }
}

Mat Manifold::d_exp(const Vec& q, const Vec& v) const {
    const int n = dim_;
    const double s = tangent_norm(q, v);
    if (s < 1e-14) return Mat::Identity(n, n);
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            return Mat::Identity(n, n);
        case ManifoldKind::RoundSphere: {
            const double th = s / radius_;
            if (th >= M_PI * (1 - 1e-12))
                fail(ErrorKind::SingularJacobian, "conjugate point reached in d_exp");
            const Mat e = gs_frame(q);
            Vec vf = e.triangularView<Eigen::Upper>().solve(v);
            vf /= vf.norm();
            const Mat p = vf * vf.transpose();
            return p + sinc(th) * (Mat::Identity(n, n) - p);
        }
        case ManifoldKind::Revolution: {
            // Scalar Jacobi field along the geodesic: phi'' = -K s^2 phi.
            const int steps = 256;
            Vec qq = q, vv = v;
            double phi = 0, dphi = 1;
            const double h = 1.0 / steps;
            auto acc = [&](const Vec& a, const Vec& b) { return geodesic_accel(a, b); };
            for (int i = 0; i < steps; ++i) {
                auto jrhs = [&](const Vec& qa, double ph) {
                    return -gauss_curvature(wrap(qa)[0]) * s * s * ph;
                };
                const Vec k1q = vv, k1v = acc(qq, vv);
                const double k1p = dphi, k1dp = jrhs(qq, phi);
                const Vec q2 = qq + 0.5 * h * k1q, v2 = vv + 0.5 * h * k1v;
                const Vec k2q = v2, k2v = acc(q2, v2);
                const double k2p = dphi + 0.5 * h * k1dp, k2dp = jrhs(q2, phi + 0.5 * h * k1p);
                const Vec q3 = qq + 0.5 * h * k2q, v3 = vv + 0.5 * h * k2v;
                const Vec k3q = v3, k3v = acc(q3, v3);
                const double k3p = dphi + 0.5 * h * k2dp, k3dp = jrhs(q3, phi + 0.5 * h * k2p);
                const Vec q4 = qq + h * k3q, v4 = vv + h * k3v;
                const Vec k4q = v4, k4v = acc(q4, v4);
                const double k4p = dphi + h * k3dp, k4dp = jrhs(q4, phi + h * k3p);
                qq += (h / 6) * (k1q + 2 * k2q + 2 * k3q + k4q);
                vv += (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v);
                phi += (h / 6) * (k1p + 2 * k2p + 2 * k3p + k4p);
                dphi += (h / 6) * (k1dp + 2 * k2dp + 2 * k3dp + k4dp);
            }
            if (std::abs(phi) < 1e-10)
                fail(ErrorKind::SingularJacobian, "conjugate point reached in d_exp");
            const Mat e = gs_frame(q);
            Vec a1 = e.triangularView<Eigen::Upper>().solve(v / s);  // frame comps
            a1 /= a1.norm();
            Vec a2(2);
            a2[0] = -a1[1];
            a2[1] = a1[0];
            Mat o(2, 2);
            o.col(0) = a1;
            o.col(1) = a2;
            Mat m_ad = Mat::Identity(2, 2);
            m_ad(1, 1) = phi;
            return o * m_ad * o.transpose();
        }
        case ManifoldKind::ChartMetric: {
            // Finite differences of the exponential, columns in the parallel
            // transported Gram-Schmidt frame at the endpoint.
            const Mat e = gs_frame(q);
            const double h = 1e-6 * std::max(1.0, s);
            Mat jc(n, n);
            for (int j = 0; j < n; ++j) {
                const Vec fj = e.col(j);
                const Vec yp = exp_map(q, v + h * fj);
                const Vec ym = exp_map(q, v - h * fj);
                jc.col(j) = chart_delta_impl(ym, yp, {}) / (2 * h);
            }
            Mat f(n, n);
            for (int j = 0; j < n; ++j) f.col(j) = parallel_transport(q, v, e.col(j));
            return f.partialPivLu().solve(jc);
        }
    }
    fail(ErrorKind::Numeric, "unreachable");
}

Vec Manifold::parallel_transport(const Vec& q, const Vec& v, const Vec& w) const {
    const double s = tangent_norm(q, v);
    if (s < 1e-14) return w;
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            return w;
        case ManifoldKind::RoundSphere: {
            const Vec u = sphere_embed(q);
            const Mat j = sphere_embed_jac(q);
            const Vec vemb = j * v;
            const Vec wemb = j * w;
            const Vec vh = vemb / vemb.norm();
            const double sig = s / radius_;
            const double a = wemb.dot(vh);
            const Vec wperp = wemb - a * vh;
            const Vec vh_t = std::cos(sig) * vh - std::sin(sig) * u;
            const Vec wt = wperp + a * vh_t;
            const Vec y = sphere_chart(std::cos(sig) * u + std::sin(sig) * vh);
            const Mat jy = sphere_embed_jac(y);
            return (jy.transpose() * jy).llt().solve(jy.transpose() * wt);
        }
        case ManifoldKind::Revolution: {
            // On a surface, parallel transport along a geodesic preserves the
            // angle with the velocity; move the adapted orthonormal frame.
            GeodesicPath p = integrate_rk4(q, v, 1.0, 256);
            const Vec q1 = p.q.back(), v1 = p.dq.back();
            auto unit_normal = [&](const Vec& qq, const Vec& vv) {
                const Vec gv = metric_at(qq) * vv;
                Vec nr(2);
                nr[0] = -gv[1];
                nr[1] = gv[0];
                return Vec(nr / tangent_norm(qq, nr));
            };
            const Vec a1 = v / s, a2 = unit_normal(q, v);
            const Mat g0 = metric_at(q);
            const double w1 = w.dot(g0 * a1), w2 = w.dot(g0 * a2);
            const double s1 = tangent_norm(q1, v1);
            return w1 * (v1 / s1) + w2 * unit_normal(q1, v1);
        }
        case ManifoldKind::ChartMetric: {
            // Transport ODE alongside the geodesic: w' = -Gamma(q', w).
            const int steps = 256;
            Vec qq = q, vv = v, ww = w;
            const double h = 1.0 / steps;
            for (int i = 0; i < steps; ++i) {
                const Vec k1q = vv, k1v = geodesic_accel(qq, vv),
                          k1w = -christoffel_apply(qq, vv, ww);
                const Vec q2 = qq + 0.5 * h * k1q, v2 = vv + 0.5 * h * k1v,
                          w2 = ww + 0.5 * h * k1w;
                const Vec k2q = v2, k2v = geodesic_accel(q2, v2), k2w = -christoffel_apply(q2, v2, w2);
                const Vec q3 = qq + 0.5 * h * k2q, v3 = vv + 0.5 * h * k2v,
                          w3 = ww + 0.5 * h * k2w;
                const Vec k3q = v3, k3v = geodesic_accel(q3, v3), k3w = -christoffel_apply(q3, v3, w3);
                const Vec q4 = qq + h * k3q, v4 = vv + h * k3v, w4 = ww + h * k3w;
                const Vec k4q = v4, k4v = geodesic_accel(q4, v4), k4w = -christoffel_apply(q4, v4, w4);
                qq += (h / 6) * (k1q + 2 * k2q + 2 * k3q + k4q);
                vv += (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v);
                ww += (h / 6) * (k1w + 2 * k2w + 2 * k3w + k4w);
            }
            return ww;
        }
    }
    fail(ErrorKind::Numeric, "unreachable");
}

double Manifold::gauss_curvature(double z) const {
    double dr, ddr;
    const double r = profile_r(z, &dr, &ddr);
    return -ddr / (r * sq(1 + dr * dr));
}

// ---------------------------------------------------------------------------
// normal charts

Vec Manifold::to_normal(const Vec& c, const Vec& q) const {
    switch (kind_) {
        case ManifoldKind::FlatTorus: {
            Vec d(dim_);
            for (int i = 0; i < dim_; ++i) d[i] = wrap_centered(q[i] - c[i], periods_[i]);
            return d;
        }
        case ManifoldKind::RoundSphere: {
            const Vec uc = sphere_embed(c), uq = sphere_embed(q);
            const double dot = uc.dot(uq);
            const Vec perp = uq - dot * uc;
            const double sp = perp.norm();
            const double th = std::atan2(sp, dot);
            if (th >= M_PI * (1 - 1e-12))
                fail(ErrorKind::ChartDomain, "log undefined at the antipode");
            Vec lemb = Vec::Zero(dim_ + 1);
            if (sp > 1e-300) lemb = (radius_ * th / sp) * perp;
            const Mat j = sphere_embed_jac(c);
            const Vec wchart = (j.transpose() * j).llt().solve(j.transpose() * lemb);
            const Mat e = gs_frame(c);
            return e.triangularView<Eigen::Upper>().solve(wchart);
        }
        default:
            fail(ErrorKind::InvalidArgument,
                 "to_normal is only available for flat-torus and round-sphere models");
    }
}

Vec Manifold::from_normal(const Vec& c, const Vec& x) const {
    if (x.norm() < 1e-300) return wrap(c);
    return exp_map(c, gs_frame(c) * x);
}

Mat Manifold::normal_metric(const Vec& c, const Vec& x) const {
    if (kind_ == ManifoldKind::FlatTorus) return Mat::Identity(dim_, dim_);
    if (x.norm() < 1e-14) return Mat::Identity(dim_, dim_);
    const Mat m = d_exp(c, gs_frame(c) * x);
    return m.transpose() * m;
}

// ---------------------------------------------------------------------------
// derived constants

Bound Manifold::injectivity_radius() const {
    switch (kind_) {
        case ManifoldKind::FlatTorus: {
            double p = periods_[0];
            for (double v : periods_) p = std::min(p, v);
            return {p / 2, false};
        }
        case ManifoldKind::RoundSphere:
            return {M_PI * radius_, false};
        default:
            if (injectivity_bound_ > 0) return {injectivity_bound_, true};
            fail(ErrorKind::InvalidArgument,
                 "no certified injectivity bound provided for this model");
    }
}

Bound Manifold::diameter() const {
    switch (kind_) {
        case ManifoldKind::FlatTorus: {
            double s = 0;
            for (double v : periods_) s += sq(v / 2);
            return {std::sqrt(s), false};
        }
        case ManifoldKind::RoundSphere:
            return {M_PI * radius_, false};
        default: {
            {
                std::lock_guard<std::mutex> lock(cache_->mu);
                if (cache_->diameter) return *cache_->diameter;
            }
            graph_distance(Vec(), Vec());  // ensure the background graph exists
            std::shared_ptr<const Cache::Graph> graph;
            {
                std::lock_guard<std::mutex> lock(cache_->mu);
                graph = cache_->graph;
            }
            // Estimate from below: max graph distance over a few sources.
            double best = 0;
            const int sources = 4;
            for (int s = 0; s < sources; ++s) {
                const int src = static_cast<int>(graph->nodes.size()) * s / sources;
                std::vector<double> dist(graph->nodes.size(),
                                         std::numeric_limits<double>::infinity());
                using Item = std::pair<double, int>;
                std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
                dist[src] = 0;
                pq.push({0, src});
                while (!pq.empty()) {
                    auto [d, i] = pq.top();
                    pq.pop();
                    if (d > dist[i]) continue;
                    for (auto [j, w] : graph->adj[i])
                        if (d + w < dist[j]) {
                            dist[j] = d + w;
                            pq.push({dist[j], j});
                        }
                }
                for (double d : dist)
                    if (std::isfinite(d)) best = std::max(best, d);
            }
            std::lock_guard<std::mutex> lock(cache_->mu);
            cache_->diameter = Bound{best, true};
            return *cache_->diameter;
        }
    }
}

double Manifold::riemannian_volume() const {
    switch (kind_) {
        case ManifoldKind::FlatTorus: {
            double v = 1;
            for (double p : periods_) v *= p;
            return v;
        }
        case ManifoldKind::RoundSphere: {
            const int n = dim_;
            return 2 * std::pow(M_PI, (n + 1) / 2.0) / std::tgamma((n + 1) / 2.0) *
                   std::pow(radius_, n);
        }
        case ManifoldKind::Revolution: {
            GaussRule rule(16);
            const double area = integrate(
                [&](double z) {
                    double dr;
                    const double r = profile_r(z, &dr);
                    return r * std::sqrt(1 + dr * dr);
                },
                0, z_period_, rule, 16);
            return theta_period_ * area;
        }
        case ManifoldKind::ChartMetric: {
            if (dim_ > 3) fail(ErrorKind::InvalidArgument, "volume unsupported for dim > 3");
            GaussRule rule(24);
            std::function<double(int, Vec&)> rec = [&](int axis, Vec& q) -> double {
                if (axis == dim_) return std::sqrt(metric_at(q).determinant());
                const double mid = (box_[axis][0] + box_[axis][1]) / 2;
                const double half = (box_[axis][1] - box_[axis][0]) / 2;
                double s = 0;
                for (size_t i = 0; i < rule.nodes.size(); ++i) {
                    q[axis] = mid + half * rule.nodes[i];
                    s += rule.weights[i] * rec(axis + 1, q);
                }
                return s * half;
            };
            Vec q = Vec::Zero(dim_);
            return rec(0, q);
        }
    }
    fail(ErrorKind::Numeric, "unreachable");
}

Bound Manifold::constant_A(int sample_budget) const {
    switch (kind_) {
        case ManifoldKind::FlatTorus:
            return {1.0, false};
        case ManifoldKind::RoundSphere: {
            // |p| <= rho_inj/2 gives theta <= pi/2; min of sin(theta)/theta.
            return {2 / M_PI, false};
        }
        default: {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->const_a.find(sample_budget);
            if (it != cache_->const_a.end()) return it->second;
            const double rmax = injectivity_radius().value / 2;
            Sobol sob(dim_ + dim_ + 1);
            double amin = 1.0;
            std::uint64_t idx = 0;
            int taken = 0;
            while (taken < sample_budget) {
                std::vector<double> u = sob.point(++idx);
                Vec c(dim_);
                if (kind_ == ManifoldKind::Revolution) {
                    c[0] = u[0] * z_period_;
                    c[1] = u[1] * theta_period_;
                } else {
                    for (int i = 0; i < dim_; ++i)
                        c[i] = box_[i][0] + u[i] * (box_[i][1] - box_[i][0]);
                }
                Vec dir(dim_);
                for (int i = 0; i < dim_; ++i) dir[i] = 2 * u[dim_ + i] - 1;
                if (dir.norm() < 1e-3) continue;
                dir /= dir.norm();
                const double rad = std::max(1e-6, u[2 * dim_]) * rmax;
                const Vec v = gs_frame(c) * (rad * dir);  // |v|_g = rad
                if (kind_ == ManifoldKind::ChartMetric && !in_chart(wrap(c + v))) {
                    // exp may leave the box near its edge; skip such draws
                    ++taken;
                    continue;
                }
                try {
                    const Mat m = d_exp(c, v);
                    amin = std::min(amin, smallest_singular_value(m));
                } catch (const Error& e) {
                    if (e.kind == ErrorKind::SingularJacobian)
                        fail(ErrorKind::SingularJacobian,
                             "d_exp singular within |p| <= rho_inj/2; injectivity bound suspect");
                    throw;
                }
                ++taken;
            }
            Bound out{amin, true};
            cache_->const_a[sample_budget] = out;
            return out;
        }
    }
}

double Manifold::delta0() const {
    if (kind_ == ManifoldKind::FlatTorus) return injectivity_radius().value;
    std::lock_guard<std::mutex> lock(cache_->mu);
    if (cache_->delta0) return *cache_->delta0;

    const double rmax = injectivity_radius().value / 2;
    const bool homogeneous = kind_ == ManifoldKind::RoundSphere;
    const int n_centers = homogeneous ? 1 : 24;
    const int n_dirs = homogeneous ? std::max(1, dim_) : 12;
    const int n_radii = 32;

    Sobol csob(dim_);
    std::vector<Vec> centers;
    for (int c = 0; c < n_centers; ++c) {
        std::vector<double> u = csob.point(c + 1);
        Vec q(dim_);
        if (kind_ == ManifoldKind::RoundSphere) {
            q = Vec::Zero(dim_);
        } else if (kind_ == ManifoldKind::Revolution) {
            q[0] = u[0] * z_period_;
            q[1] = u[1] * theta_period_;
        } else {
            for (int i = 0; i < dim_; ++i) q[i] = box_[i][0] + u[i] * (box_[i][1] - box_[i][0]);
        }
        centers.push_back(q);
    }
    Sobol dsob(dim_);
    std::vector<Vec> dirs;
    std::uint64_t didx = 0;
    for (int d = 0; d < n_dirs; ++d) dirs.push_back(sobol_direction(dsob, didx, dim_));

    double good = 0;
    for (int j = 1; j <= n_radii; ++j) {
        const double r = rmax * j / n_radii;
        double worst = 0;
        for (const Vec& c : centers) {
            for (const Vec& dir : dirs) {
                Mat gn;
                try {
                    gn = normal_metric(c, r * dir);
                } catch (const Error&) {
                    worst = 2;  // treat chart/singularity failures as a violation
                    break;
                }
                const Mat dev = gn.llt().solve(Mat::Identity(dim_, dim_)) -
                                Mat::Identity(dim_, dim_);
                worst = std::max(worst, operator_norm(dev) / r);
            }
            if (worst > 1) break;
        }
        if (worst > 1) break;
        good = r;
    }
    if (good == 0) good = rmax / n_radii / 2;
    cache_->delta0 = 0.9 * good;
    return *cache_->delta0;
}

// ---------------------------------------------------------------------------
// distance

DistanceResult Manifold::distance(const Vec& q0, const Vec& q1) const {
    switch (kind_) {
        case ManifoldKind::FlatTorus: {
            double s = 0;
            for (int i = 0; i < dim_; ++i) s += sq(wrap_centered(q1[i] - q0[i], periods_[i]));
            return {std::sqrt(s), DistanceResult::Method::ClosedForm};
        }
        case ManifoldKind::RoundSphere: {
            const Vec u0 = sphere_embed(q0), u1 = sphere_embed(q1);
            const double dot = u0.dot(u1);
            const double sp = (u1 - dot * u0).norm();
            return {radius_ * std::atan2(sp, dot), DistanceResult::Method::ClosedForm};
        }
        default: {
            std::vector<double> periods;
            if (kind_ == ManifoldKind::Revolution) periods = {z_period_, theta_period_};
            const Vec delta = chart_delta_impl(q0, q1, periods);
            if (delta.norm() < 1e-12) return {0.0, DistanceResult::Method::ClosedForm};
            GraphQuery gq = graph_distance(q0, q1);
            if (!std::isfinite(gq.value))
                fail(ErrorKind::Numeric, "metric graph is disconnected; increase the graph size");
            if (dim_ == 2) {
                std::optional<double> best;
                for (const Vec& seed : {gq.first_leg_dir, delta}) {
                    if (seed.norm() < 1e-12) continue;
                    auto r = shoot_distance(q0, q1, gq.value, seed);
                    if (r && (!best || *r < *best)) best = r;
                }
                if (best) return {*best, DistanceResult::Method::Shooting};
            }
            return {gq.value, DistanceResult::Method::GraphOnly};
        }
    }
}

Manifold::GraphQuery Manifold::graph_distance(const Vec& q0, const Vec& q1) const {
    std::vector<double> periods;
    if (kind_ == ManifoldKind::Revolution) periods = {z_period_, theta_period_};

    std::shared_ptr<const Cache::Graph> graph;
    {
        std::lock_guard<std::mutex> lock(cache_->mu);
        if (!cache_->graph || cache_->graph->size != graph_size_hint_) {
            auto g = std::make_shared<Cache::Graph>();
            g->size = graph_size_hint_;
            const int n_nodes = graph_size_hint_;
            Sobol sob(dim_);
            for (int i = 0; i < n_nodes; ++i) {
                std::vector<double> u = sob.point(i + 1);
                Vec q(dim_);
                if (kind_ == ManifoldKind::Revolution) {
                    q[0] = u[0] * z_period_;
                    q[1] = u[1] * theta_period_;
                } else {
                    for (int d = 0; d < dim_; ++d)
                        q[d] = box_[d][0] + u[d] * (box_[d][1] - box_[d][0]);
                }
                g->nodes.push_back(q);
            }
            const int k = 12;
            GaussRule rule(4);
            auto seg_len = [&](const Vec& a, const Vec& b) {
                const Vec d = chart_delta_impl(a, b, periods);
                return integrate(
                    [&](double u) {
                        const Vec p = wrap(a + u * d);
                        return std::sqrt(d.dot(metric_at(p) * d));
                    },
                    0, 1, rule);
            };
            auto sqdist = [&](const Vec& a, const Vec& b) {
                double s = 0;
                for (int d = 0; d < dim_; ++d) {
                    double dd = b[d] - a[d];
                    if (d < static_cast<int>(periods.size()))
                        dd = wrap_centered(dd, periods[d]);
                    s += dd * dd;
                }
                return s;
            };
            g->adj.resize(n_nodes);
            std::vector<std::pair<double, int>> cand(n_nodes);
            for (int i = 0; i < n_nodes; ++i) {
                for (int j = 0; j < n_nodes; ++j)
                    cand[j] = {j == i ? std::numeric_limits<double>::infinity()
                                      : sqdist(g->nodes[i], g->nodes[j]),
                               j};
                std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
                for (int t = 0; t < k; ++t) {
                    const int j = cand[t].second;
                    const double w = seg_len(g->nodes[i], g->nodes[j]);
                    g->adj[i].push_back({j, w});
                    g->adj[j].push_back({i, w});
                }
            }
            cache_->graph = g;
        }
        graph = cache_->graph;
    }
    if (q0.size() == 0) return {0, false, Vec()};  // build-only call

    const int n = static_cast<int>(graph->nodes.size());
    const int kq = 12;
    GaussRule rule(4);
    auto seg_len = [&](const Vec& a, const Vec& b) {
        const Vec d = chart_delta_impl(a, b, periods);
        return integrate(
            [&](double u) {
                const Vec p = wrap(a + u * d);
                return std::sqrt(d.dot(metric_at(p) * d));
            },
            0, 1, rule);
    };
    auto attach = [&](const Vec& q) {
        std::vector<std::pair<double, int>> cand(n);
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int d = 0; d < dim_; ++d) {
                double dd = graph->nodes[j][d] - q[d];
                if (d < static_cast<int>(periods.size())) dd = wrap_centered(dd, periods[d]);
                s += dd * dd;
            }
            cand[j] = {s, j};
        }
        std::partial_sort(cand.begin(), cand.begin() + kq, cand.end());
        std::vector<std::pair<int, double>> out;
        for (int t = 0; t < kq; ++t)
            out.push_back({cand[t].second, seg_len(q, graph->nodes[cand[t].second])});
        return out;
    };
    const auto e0 = attach(q0), e1 = attach(q1);
    const int id0 = n, id1 = n + 1;
    std::vector<double> dist(n + 2, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n + 2, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[id0] = 0;
    pq.push({0, id0});
    auto relax = [&](int from, int to, double w) {
        if (dist[from] + w < dist[to]) {
            dist[to] = dist[from] + w;
            parent[to] = from;
            pq.push({dist[to], to});
        }
    };
    const double direct = seg_len(q0, q1);
    while (!pq.empty()) {
        auto [d, i] = pq.top();
        pq.pop();
        if (d > dist[i]) continue;
        if (i == id1) break;
        if (i == id0) {
            for (auto [j, w] : e0) relax(id0, j, w);
            relax(id0, id1, direct);
        } else if (i != id1) {
            for (auto [j, w] : graph->adj[i]) relax(i, j, w);
            for (auto [j, w] : e1)
                if (j == i) relax(i, id1, w);
        }
    }
    // First leg direction of the shortest path out of q0.
    Vec dir = Vec::Zero(dim_);
    int cur = id1;
    while (cur != -1 && parent[cur] != id0) cur = parent[cur];
    if (cur == id1) {
        dir = chart_delta_impl(q0, q1, periods);
    } else if (cur != -1) {
        dir = chart_delta_impl(q0, graph->nodes[cur], periods);
    }
    if (dir.norm() > 0) dir /= dir.norm();
    return {dist[id1], false, dir};
}

std::optional<double> Manifold::shoot_distance(const Vec& q0, const Vec& q1, double d_graph,
                                               const Vec& seed_dir) const {
    if (dim_ != 2) return std::nullopt;
    std::vector<double> periods;
    if (kind_ == ManifoldKind::Revolution) periods = {z_period_, theta_period_};
    const Mat g1 = metric_at(wrap(q1));
    const Mat e = gs_frame(q0);
    const Vec sf = e.triangularView<Eigen::Upper>().solve(seed_dir);
    const double phi0 = std::atan2(sf[1], sf[0]);
    const double tmax = 1.3 * d_graph + 1e-9;
    const int steps = 600;

    auto launch = [&](double phi) {
        Vec dirf(2);
        dirf << std::cos(phi), std::sin(phi);
        return Vec(e * dirf);  // unit g-speed
    };
    auto miss = [&](double phi) -> std::pair<double, double> {
        GeodesicPath p = integrate_rk4(q0, launch(phi), tmax, steps);
        double best = std::numeric_limits<double>::infinity();
        int ibest = 0;
        for (size_t i = 0; i < p.q.size(); ++i) {
            const Vec d = chart_delta_impl(p.q[i], q1, periods);
            const double m2 = d.dot(g1 * d);
            if (m2 < best) {
                best = m2;
                ibest = static_cast<int>(i);
            }
        }
        double tbest = p.t[ibest];
        // Near a hit the miss is a hyperbola in t, so fit the squared miss.
        if (ibest > 0 && ibest + 1 < static_cast<int>(p.q.size())) {
            auto mm2 = [&](int i) {
                const Vec d = chart_delta_impl(p.q[i], q1, periods);
                return d.dot(g1 * d);
            };
            const double m0 = mm2(ibest - 1), m1 = best, m2 = mm2(ibest + 1);
            const double denom = m0 - 2 * m1 + m2;
            if (std::abs(denom) > 1e-300) {
                const double sh = 0.5 * (m0 - m2) / denom;
                tbest += sh * (p.t[1] - p.t[0]);
                best = m1 - 0.125 * (m0 - m2) * (m0 - m2) / denom;
            }
        }
        return {std::sqrt(std::max(0.0, best)), tbest};
    };
    auto endpoint = [&](double phi, double tt) {
        GeodesicPath p = integrate_rk4(q0, launch(phi), tt, steps);
        return std::pair<Vec, Vec>{p.q.back(), p.dq.back()};
    };

    try {
        // Golden-section bracket on the launch direction seeds a Newton solve
        // on (direction, time).
        double lo = phi0 - 0.6, hi = phi0 + 0.6;
        const double gr = (std::sqrt(5.0) - 1) / 2;
        double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
        double fc, tc, fd, td;
        std::tie(fc, tc) = miss(c);
        std::tie(fd, td) = miss(d);
        for (int it = 0; it < 28; ++it) {
            if (fc < fd) {
                hi = d;
                d = c;
                fd = fc;
                td = tc;
                c = hi - gr * (hi - lo);
                std::tie(fc, tc) = miss(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                tc = td;
                d = lo + gr * (hi - lo);
                std::tie(fd, td) = miss(d);
            }
        }
        double phi = fc < fd ? c : d;
        double tt = fc < fd ? tc : td;
        if (std::min(fc, fd) > 0.05 * (1 + d_graph)) return std::nullopt;

        const double hphi = 1e-7;
        for (int it = 0; it < 8; ++it) {
            if (!(tt > 0) || tt > 2 * d_graph + 1) return std::nullopt;
            auto [y, vy] = endpoint(phi, tt);
            const Vec r = chart_delta_impl(q1, y, periods);
            if (std::sqrt(r.dot(g1 * r)) < 1e-10 * (1 + d_graph)) break;
            auto [yp, vp] = endpoint(phi + hphi, tt);
            Mat j(2, 2);
            j.col(0) = chart_delta_impl(y, yp, periods) / hphi;
            j.col(1) = vy;
            const Vec delta = j.partialPivLu().solve(-r);
            phi += delta[0];
            tt += delta[1];
        }
        auto [y, vy] = endpoint(phi, tt);
        const Vec r = chart_delta_impl(q1, y, periods);
        if (std::sqrt(r.dot(g1 * r)) < 1e-9 * (1 + d_graph) && tt > 0) return tt;
        return std::nullopt;
    } catch (const Error&) {
        return std::nullopt;  // left the chart while probing directions
    }
}

// ---------------------------------------------------------------------------
// curves

double Manifold::curve_length(const Curve& c, int order, int panels) const {
    GaussRule rule(order);
    return integrate([&](double t) { return tangent_norm(wrap(c.pos(t)), c.vel(t)); }, c.t0,
                     c.t1, rule, panels);
}

Curve Manifold::geodesic_curve(const Vec& q, const Vec& v, double length) const {
    const double s = tangent_norm(q, v);
    if (!(s > 0)) fail(ErrorKind::InvalidArgument, "geodesic curve needs a nonzero direction");
    const Vec vh = v / s;
    switch (kind_) {
        case ManifoldKind::FlatTorus: {
            Manifold self = *this;
            Vec q0 = q, dir = vh;
            return Curve{[self, q0, dir, length](double t) { return self.wrap(q0 + t * length * dir); },
                         [dir, length](double) { return Vec(length * dir); }, 0, 1};
        }
        case ManifoldKind::RoundSphere: {
            Manifold self = *this;
            const Vec u = sphere_embed(q);
            const Vec vemb = sphere_embed_jac(q) * vh;
            const Vec vhat = vemb / vemb.norm();
            const double rr = radius_;
            auto pos = [self, u, vhat, length, rr](double t) {
                const double sig = t * length / rr;
                return self.sphere_chart(std::cos(sig) * u + std::sin(sig) * vhat);
            };
            auto vel = [self, u, vhat, length, rr, pos](double t) {
                const double sig = t * length / rr;
                const Vec vt = length * (std::cos(sig) * vhat - std::sin(sig) * u);
                const Vec x = pos(t);
                const Mat j = self.sphere_embed_jac(x);
                return Vec((j.transpose() * j).llt().solve(j.transpose() * vt));
            };
            return Curve{pos, vel, 0, 1};
        }
        default: {
            const int n_steps = std::max(1024, 2 * static_cast<int>(length / 1e-3));
            auto path = std::make_shared<GeodesicPath>(integrate_rk4(q, vh, length, n_steps));
            auto locate = [path](double t) {
                const double tt = std::clamp(t, 0.0, 1.0) * path->t.back();
                const double h = path->t[1] - path->t[0];
                int i = std::min(static_cast<int>(tt / h),
                                 static_cast<int>(path->t.size()) - 2);
                return std::pair<int, double>{i, (tt - path->t[i]) / h};
            };
            std::vector<double> periods;
            if (kind_ == ManifoldKind::Revolution) periods = {z_period_, theta_period_};
            auto pos = [path, locate, periods](double t) {
                auto [i, u] = locate(t);
                // Hermite interpolation in chart coordinates, wrap-aware.
                const double h = path->t[1] - path->t[0];
                const Vec d = chart_delta_impl(path->q[i], path->q[i + 1], periods);
                const Vec m0 = h * path->dq[i], m1 = h * path->dq[i + 1];
                const double u2 = u * u, u3 = u2 * u;
                return Vec(path->q[i] + (3 * u2 - 2 * u3) * d + (u3 - 2 * u2 + u) * m0 +
                           (u3 - u2) * m1);
            };
            const double total = path->t.back();
            auto vel = [path, locate, total](double t) {
                auto [i, u] = locate(t);
                return Vec(total * ((1 - u) * path->dq[i] + u * path->dq[i + 1]));
            };
            return Curve{pos, vel, 0, 1};
        }
    }
}

}  // namespace sml
