#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"
#include "num.hpp"

#include "json.hpp"

namespace sml {

enum class ManifoldKind { FlatTorus, RoundSphere, Revolution, ChartMetric };

struct DistanceResult {
    enum class Method { ClosedForm, Shooting, GraphOnly };
    double value = 0;
    Method method = Method::ClosedForm;
};

struct GeodesicPath {
    std::vector<double> t;
    std::vector<Vec> q;
    std::vector<Vec> dq;
    double length = 0;
};

// Parametrized path in chart coordinates with derivative access.
struct Curve {
    std::function<Vec(double)> pos;
    std::function<Vec(double)> vel;
    double t0 = 0, t1 = 1;
};

// Value that may be a user-supplied assumption rather than a computed fact.
struct Bound {
    double value = 0;
    bool assumed = false;
};

struct PointAndCovector {
    Vec q;
    Vec p;
};

// Closed Riemannian manifold given analytically in a single working chart.
// Torus: fundamental domain, re-centered at the query point where needed.
// Sphere: normal coordinates at a pole; re-centered normal charts are exposed
// through to_normal/from_normal. Revolution surfaces use the (z, theta) chart
// with both coordinates periodic; chart-metric models live on a box.
class Manifold {
  public:
    static Manifold flat_torus(std::vector<double> periods);
    static Manifold round_sphere(int dim, double radius);
    static Manifold surface_of_revolution(const std::string& profile, double z_period,
                                          double theta_period, double injectivity_bound);
    static Manifold chart_metric(std::vector<std::array<double, 2>> domain,
                                 std::vector<std::vector<std::string>> g,
                                 double injectivity_bound);

    static Manifold from_json(const nlohmann::json& doc);
    static Manifold from_json_text(const std::string& text);
    nlohmann::json to_json() const;

    ManifoldKind kind() const { return kind_; }
    int dim() const { return dim_; }

    bool in_chart(const Vec& q) const;
    Vec wrap(const Vec& q) const;

    Mat metric_at(const Vec& q) const;
    Mat metric_inv_at(const Vec& q) const;
    double cometric_norm(const Vec& q, const Vec& p) const;
    double tangent_norm(const Vec& q, const Vec& v) const;

    // Geodesic from (q, v) over parameter time T. steps == 0 picks the step
    // count by doubling until the length changes by less than 1e-8.
    GeodesicPath geodesic(const Vec& q, const Vec& v, double T, int steps = 0) const;
    Vec exp_map(const Vec& q, const Vec& v) const;

    // Derivative of exp_q at v, written in the Gram-Schmidt frame of the chart
    // basis at q and its parallel transport along the geodesic to the endpoint.
    Mat d_exp(const Vec& q, const Vec& v) const;

    // Columns: g-orthonormal frame obtained from the chart basis at q.
    Mat gs_frame(const Vec& q) const;

    // Parallel transport of w (chart components at q) along exp_q(t v) to t=1.
    Vec parallel_transport(const Vec& q, const Vec& v, const Vec& w) const;

    DistanceResult distance(const Vec& q0, const Vec& q1) const;

    double curve_length(const Curve& c, int order = 8, int panels = 64) const;
    Curve geodesic_curve(const Vec& q, const Vec& v, double length) const;

    Bound injectivity_radius() const;
    Bound diameter() const;
    double riemannian_volume() const;

    // min over (q, |v|_g <= rho_inj/2) of the smallest singular value of
    // d_exp; exact for the torus (1) and sphere (2/pi). Sampled estimates are
    // upper bounds of the true min and are marked assumed.
    Bound constant_A(int sample_budget = 10000) const;

    // Largest radius (times 0.9) below which |G^-1 - I| <= |x| holds in
    // normal coordinates; equals rho_inj for the flat torus.
    double delta0() const;

    // Normal chart at center c.
    Vec to_normal(const Vec& c, const Vec& q) const;
    Vec from_normal(const Vec& c, const Vec& x) const;
    Mat normal_metric(const Vec& c, const Vec& x) const;

    // Nodes of the background metric graph (built lazily; numeric models).
    int graph_size_hint() const { return graph_size_hint_; }
    void set_graph_size_hint(int n);

    // Deterministic quasi-random chart point (Sobol index-addressed).
    Vec sample_point(std::uint64_t index) const;

  private:
    Manifold() = default;
    void validate() const;

    ManifoldKind kind_ = ManifoldKind::FlatTorus;
    int dim_ = 0;

    std::vector<double> periods_;  // FlatTorus
    double radius_ = 0;            // RoundSphere

    Expr profile_;  // Revolution: r(z)
    double z_period_ = 0, theta_period_ = 0;

    std::vector<std::array<double, 2>> box_;  // ChartMetric
    std::vector<std::vector<Expr>> gexpr_;

    double injectivity_bound_ = 0;  // user-provided where required
    int graph_size_hint_ = 10000;

    struct Cache;
    std::shared_ptr<Cache> cache_;

    // Revolution helpers.
    double profile_r(double z, double* dr = nullptr, double* ddr = nullptr) const;
    double gauss_curvature(double z) const;
    Vec geodesic_accel(const Vec& q, const Vec& v) const;
    Vec christoffel_apply(const Vec& q, const Vec& v, const Vec& w) const;  // Gamma(v, w)

    // Sphere helpers (unit-vector embedding).
    Vec sphere_embed(const Vec& q) const;
    Mat sphere_embed_jac(const Vec& q) const;
    Vec sphere_chart(const Vec& u) const;

    GeodesicPath integrate_rk4(const Vec& q, const Vec& v, double T, int steps) const;

    struct GraphQuery {
        double value;
        bool converged_shooting;
        Vec first_leg_dir;
    };
    GraphQuery graph_distance(const Vec& q0, const Vec& q1) const;
    std::optional<double> shoot_distance(const Vec& q0, const Vec& q1, double d_graph,
                                         const Vec& seed_dir) const;
};

}  // namespace sml
