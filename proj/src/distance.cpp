#include "distance.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "sobol.hpp"

namespace sml {

NeighborhoodSpec NeighborhoodSpec::unit_disc_bundle() {
    NeighborhoodSpec s;
    s.kind = Kind::UnitDiscBundle;
    s.r = 1.0;
    return s;
}

NeighborhoodSpec NeighborhoodSpec::r_disc_bundle(double r) {
    if (!(r > 0)) fail(ErrorKind::InvalidArgument, "disc bundle radius must be positive");
    NeighborhoodSpec s;
    s.kind = Kind::RDiscBundle;
    s.r = r;
    return s;
}

NeighborhoodSpec NeighborhoodSpec::sandwich(double r_min, double r_max) {
    if (!(r_min > 0) || !(r_min <= r_max))
        fail(ErrorKind::InvalidArgument, "sandwich needs 0 < r_min <= r_max");
    NeighborhoodSpec s;
    s.kind = Kind::Sandwich;
    s.r_min = r_min;
    s.r_max = r_max;
    s.r = r_max;
    return s;
}

NeighborhoodSpec NeighborhoodSpec::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "unit-disc-bundle") return unit_disc_bundle();
    if (kind == "r-disc-bundle") return r_disc_bundle(j.at("r").get<double>());
    if (kind == "sandwich")
        return sandwich(j.at("r_min").get<double>(), j.at("r_max").get<double>());
    fail(ErrorKind::InvalidArgument, "unknown neighborhood kind '" + kind + "'");
}

nlohmann::json NeighborhoodSpec::to_json() const {
    switch (kind) {
        case Kind::UnitDiscBundle:
            return {{"kind", "unit-disc-bundle"}};
        case Kind::RDiscBundle:
            return {{"kind", "r-disc-bundle"}, {"r", r}};
        case Kind::Sandwich:
            return {{"kind", "sandwich"}, {"r_min", r_min}, {"r_max", r_max}};
    }
    fail(ErrorKind::Numeric, "unreachable");
}

// ---------------------------------------------------------------------------

DistanceEngine::DistanceEngine(std::shared_ptr<const Manifold> model, NeighborhoodSpec spec,
                               double eps, long cert_samples, double cert_tol)
    : model_(std::move(model)),
      spec_(spec),
      eps_(eps),
      cert_samples_(cert_samples),
      cert_tol_(cert_tol) {
    if (!(eps_ > 0) || !(eps_ < 1)) fail(ErrorKind::InvalidArgument, "eps must be in (0,1)");
}

double DistanceEngine::admissibility_threshold() const { return 0.9 * model_->delta0(); }

double DistanceEngine::effective_A() const {
    std::lock_guard<std::mutex> lock(mu_);
    if (!a_eff_) {
        const Bound a = model_->constant_A();
        // Sampled estimates upper-bound the true min; shrink by the declared 1%.
        a_eff_ = a.assumed ? 0.99 * a.value : a.value;
    }
    return *a_eff_;
}

double DistanceEngine::rho_upper(const Vec& q0, const Vec& q1) const {
    return spec_.rmax() * model_->distance(q0, q1).value;
}

RhoBound DistanceEngine::rho_bracket(const Vec& q0, const Vec& q1) const {
    RhoBound out;
    const DistanceResult dist = model_->distance(q0, q1);
    const double d = dist.value;
    out.upper = spec_.rmax() * d;
    out.upper_provenance = spec_.kind == NeighborhoodSpec::Kind::UnitDiscBundle
                               ? "MainProp"
                               : "rescaled-MainProp";
    if (d < 1e-12) {
        out.lower = 0;
        out.lower_provenance = "coincident points";
        return out;
    }

    // Distance estimates from shooting or graphs carry numeric slack; the
    // construction radius absorbs it so the base tubes stay disjoint.
    const double shrink = dist.method == DistanceResult::Method::ClosedForm ? 1.0 : 0.99;
    const double inj = model_->injectivity_radius().value;
    const bool near = spec_.kind != NeighborhoodSpec::Kind::Sandwich &&
                      d < std::min(admissibility_threshold(), inj / 2);

    double d_c, rho_p;
    if (near) {
        d_c = d * shrink;
        rho_p = spec_.r * std::sqrt(1.0 / (1.0 + d));
    } else {
        d_c = std::min(d, inj) * shrink;
        rho_p = effective_A() * spec_.rmin();
    }
    const double target_r = near ? spec_.r : spec_.rmin();

    SymplecticMapSpec ball0, ball1;
    try {
        ball0 = local_ball_embedding(model_, q0, d_c, rho_p, target_r, eps_);
        ball1 = local_ball_embedding(model_, q1, d_c, rho_p, target_r, eps_);
    } catch (const Error& e) {
        out.lower = 0;
        out.diagnostic = std::string("construction failed: ") + e.what();
        return out;
    }

    const std::vector<CheckKind> kinds = {CheckKind::Symplectic, CheckKind::Liouville,
                                          CheckKind::Containment, CheckKind::Relative};
    CertifyOptions opt;
    opt.samples = cert_samples_;
    opt.tol = cert_tol_;
    EmbeddingCertificate c0 = certify(ball0, kinds, opt);
    EmbeddingCertificate c1 = certify(ball1, kinds, opt);
    CheckResult dis = check_disjoint(ball0, ball1, cert_samples_, 0.0);
    c0.checks.push_back(dis);
    c0.pass = c0.pass && dis.pass;

    const std::string id0 = store_.add(c0);
    const std::string id1 = store_.add(c1);
    out.certificate_ids = {id0, id1};

    if (!c0.pass || !c1.pass) {
        out.lower = 0;
        for (const auto* cert : {&c0, &c1})
            for (const auto& chk : cert->checks)
                if (!chk.pass)
                    out.diagnostic += (out.diagnostic.empty() ? "" : "; ") + cert->map_name +
                                      ":" + chk.name + " failed";
        return out;
    }

    // Each ball has capacity 2 d_c rho_p (1-eps)^2; rho_W >= pi r^2 / 2.
    out.lower = d_c * rho_p * sq(1 - eps_);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "local-ball P_L(%.9g, %.9g) %s [%s,%s]", d_c / 2, rho_p,
                  near ? "near" : "A-route", id0.c_str(), id1.c_str());
    out.lower_provenance = buf;

    {
        std::lock_guard<std::mutex> lock(mu_);
        packing_.push_back(
            {ball0.domain_capacity, ball1.domain_capacity, spec_.rmax(), d, id0, id1});
    }
    return out;
}

std::pair<double, double> DistanceEngine::length_rho(const Curve& curve,
                                                     const std::vector<double>& times) const {
    if (times.size() < 2) fail(ErrorKind::InvalidArgument, "partition needs at least two times");
    const double threshold = admissibility_threshold();
    double lower = 0, upper = 0;
    for (size_t i = 0; i + 1 < times.size(); ++i) {
        if (!(times[i + 1] > times[i]))
            fail(ErrorKind::InvalidArgument, "partition times must be strictly increasing");
        const Vec a = model_->wrap(curve.pos(times[i]));
        const Vec b = model_->wrap(curve.pos(times[i + 1]));
        const double gap = model_->distance(a, b).value;
        if (gap >= threshold)
            fail(ErrorKind::InvalidArgument,
                 "partition not admissible: gap at index " + std::to_string(i) + " is " +
                     fmt_double(gap) + " >= " + fmt_double(threshold));
        const RhoBound rb = rho_bracket(a, b);
        lower += rb.lower;
        upper += rb.upper;
    }
    return {lower, upper};
}

ConvergenceTable DistanceEngine::converge_length(const Curve& curve, int k_min,
                                                 int k_max) const {
    if (k_min < 1 || k_max < k_min) fail(ErrorKind::InvalidArgument, "bad refinement schedule");
    ConvergenceTable table;
    const double riem = model_->curve_length(curve, 16, 256);
    const double threshold = admissibility_threshold();
    for (int k = k_min; k <= k_max; ++k) {
        ConvergenceRow row;
        row.k = k;
        row.riem_length = riem;
        const int m = 1 << k;
        std::vector<Vec> pts(m + 1);
        for (int j = 0; j <= m; ++j)
            pts[j] = model_->wrap(curve.pos(curve.t0 + (curve.t1 - curve.t0) * j / m));
        double mesh = 0, sum = 0;
        bool admissible = true;
        for (int j = 0; j < m; ++j) {
            const double gap = model_->distance(pts[j], pts[j + 1]).value;
            mesh = std::max(mesh, gap);
            sum += gap;
            admissible = admissible && gap < threshold;
        }
        row.mesh = mesh;
        row.sum_dg = sum;
        row.squeeze_factor = std::sqrt(1.0 / (1.0 + mesh)) * sq(1 - eps_);
        row.admissible = admissible;
        if (admissible) {
            double lower = 0, upper = 0;
            for (int j = 0; j < m; ++j) {
                const RhoBound rb = rho_bracket(pts[j], pts[j + 1]);
                lower += rb.lower;
                upper += rb.upper;
            }
            row.lower = lower;
            row.upper = upper;
        } else {
            row.lower = std::numeric_limits<double>::quiet_NaN();
            row.upper = std::numeric_limits<double>::quiet_NaN();
        }
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// chain pseudo-metric

struct DistanceEngine::DwGraph {
    int requested = 0;
    int neighbors = 0;
    std::vector<Vec> nodes;
    std::vector<std::vector<std::pair<int, double>>> adj;  // weights are d_g
};

std::shared_ptr<const DistanceEngine::DwGraph> DistanceEngine::dw_graph(int graph_size,
                                                                        int neighbors) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (dw_cache_ && dw_cache_->requested == graph_size && dw_cache_->neighbors == neighbors)
            return dw_cache_;
    }
    auto g = std::make_shared<DwGraph>();
    g->requested = graph_size;
    g->neighbors = neighbors;
    for (int i = 0; i < graph_size; ++i)
        g->nodes.push_back(model_->wrap(model_->sample_point(i)));
    const int total = static_cast<int>(g->nodes.size());
    g->adj.resize(total);
    const double threshold = admissibility_threshold();
    std::vector<std::pair<double, int>> cand(total);
    for (int i = 0; i < total; ++i) {
        for (int j = 0; j < total; ++j)
            cand[j] = {j == i ? std::numeric_limits<double>::infinity()
                              : (g->nodes[j] - g->nodes[i]).squaredNorm(),
                       j};
        const int kk = std::min(neighbors, total - 1);
        std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
        for (int t = 0; t < kk; ++t) {
            const int j = cand[t].second;
            const double dg = model_->distance(g->nodes[i], g->nodes[j]).value;
            if (dg < threshold) {
                g->adj[i].push_back({j, dg});
                g->adj[j].push_back({i, dg});
            }
        }
    }
    std::lock_guard<std::mutex> lock(mu_);
    dw_cache_ = g;
    return dw_cache_;
}

DwBracket DistanceEngine::chain_metric_dw(const Vec& q0, const Vec& q1, int graph_size,
                                          int neighbors) const {
    DwBracket out;
    out.nodes = graph_size;
    out.neighbors = neighbors;
    if (model_->distance(q0, q1).value < 1e-12) {
        out.bound.lower = out.bound.upper = 0;
        out.bound.lower_provenance = out.bound.upper_provenance = "coincident points";
        return out;
    }
    auto g = dw_graph(graph_size, neighbors);
    const double threshold = admissibility_threshold();
    const double a_eff = effective_A();

    // Formula-level edge weights; the same construction family is certified
    // sample-by-sample in rho_bracket and audited by the packing report.
    auto w_upper = [&](double dg) { return spec_.rmax() * dg; };
    auto w_lower = [&](double dg) {
        if (spec_.kind != NeighborhoodSpec::Kind::Sandwich)
            return spec_.r * dg * std::sqrt(1.0 / (1.0 + dg)) * sq(1 - eps_);
        return a_eff * spec_.rmin() * dg * sq(1 - eps_);
    };

    const int n_nodes = static_cast<int>(g->nodes.size());
    const int id0 = n_nodes, id1 = n_nodes + 1;
    auto attach = [&](const Vec& q) {
        std::vector<std::pair<double, int>> cand(n_nodes);
        for (int j = 0; j < n_nodes; ++j) cand[j] = {(g->nodes[j] - q).squaredNorm(), j};
        const int kk = std::min(neighbors, n_nodes);
        std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
        std::vector<std::pair<int, double>> out_edges;
        for (int t = 0; t < kk; ++t) {
            const double dg = model_->distance(q, g->nodes[cand[t].second]).value;
            if (dg < threshold) out_edges.push_back({cand[t].second, dg});
        }
        return out_edges;
    };
    const auto e0 = attach(model_->wrap(q0)), e1 = attach(model_->wrap(q1));
    const double d01 = model_->distance(q0, q1).value;

    auto dijkstra = [&](const std::function<double(double)>& weight) {
        std::vector<double> dist(n_nodes + 2, std::numeric_limits<double>::infinity());
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        dist[id0] = 0;
        pq.push({0, id0});
        while (!pq.empty()) {
            auto [d, i] = pq.top();
            pq.pop();
            if (d > dist[i]) continue;
            if (i == id1) break;
            auto relax = [&](int to, double dg) {
                const double w = weight(dg);
                if (d + w < dist[to]) {
                    dist[to] = d + w;
                    pq.push({dist[to], to});
                }
            };
            if (i == id0) {
                for (auto [j, dg] : e0) relax(j, dg);
                if (d01 < threshold) relax(id1, d01);
            } else {
                for (auto [j, dg] : g->adj[i]) relax(j, dg);
                for (auto [j, dg] : e1)
                    if (j == i) relax(id1, dg);
            }
        }
        return dist[id1];
    };

    const double up = dijkstra(w_upper);
    const double lo = dijkstra(w_lower);
    if (!std::isfinite(up))
        fail(ErrorKind::Numeric, "D_W graph is disconnected; increase the graph size");
    out.bound.lower = lo;
    out.bound.upper = up;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "chain-graph(%d nodes, k=%d)", graph_size, neighbors);
    out.bound.lower_provenance = out.bound.upper_provenance = buf;
    return out;
}

DistanceEngine::Constants DistanceEngine::equivalence_constants() const {
    Constants c;
    c.c2 = spec_.rmax();
    const Bound diam = model_->diameter();
    const double inj = model_->injectivity_radius().value;
    c.c1 = effective_A() * spec_.rmin() * inj / diam.value;
    c.c1_certified = !diam.assumed;
    return c;
}

std::vector<PackingRecord> DistanceEngine::packing_records() const {
    std::lock_guard<std::mutex> lock(mu_);
    return packing_;
}

}  // namespace sml
