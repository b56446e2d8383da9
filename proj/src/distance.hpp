#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "manifold.hpp"
#include "symplectic.hpp"

namespace sml {

struct NeighborhoodSpec {
    enum class Kind { UnitDiscBundle, RDiscBundle, Sandwich };
    Kind kind = Kind::UnitDiscBundle;
    double r = 1.0;
    double r_min = 1.0, r_max = 1.0;

    static NeighborhoodSpec unit_disc_bundle();
    static NeighborhoodSpec r_disc_bundle(double r);
    static NeighborhoodSpec sandwich(double r_min, double r_max);
    static NeighborhoodSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    double rmin() const { return kind == Kind::Sandwich ? r_min : r; }
    double rmax() const { return kind == Kind::Sandwich ? r_max : r; }
};

// Two-sided bracket for rho_W with the provenance of each side.
struct RhoBound {
    double lower = 0;
    double upper = 0;
    std::string lower_provenance;
    std::string upper_provenance;
    std::vector<std::string> certificate_ids;
    std::string diagnostic;  // set when certification failed and lower is 0
};

struct ConvergenceRow {
    int k = 0;
    double mesh = 0;      // delta(P) = max_i d_g(gamma_i, gamma_{i+1})
    double sum_dg = 0;
    double lower = 0;
    double upper = 0;
    double squeeze_factor = 0;  // sqrt(1/(1+mesh)) (1-eps)^2
    double riem_length = 0;
    bool admissible = true;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
};

// One certified two-ball construction, kept for the packing audit.
struct PackingRecord {
    double pi_r0_sq = 0;  // ball capacities pi r^2
    double pi_r1_sq = 0;
    double bundle_r = 1;
    double d_g = 0;
    std::string cert0, cert1;
};

struct DwBracket {
    RhoBound bound;
    int nodes = 0;
    int neighbors = 0;
};

// Certified brackets for rho_W over one model and neighborhood, with the
// partition length functional and the chain pseudo-metric on top.
class DistanceEngine {
  public:
    DistanceEngine(std::shared_ptr<const Manifold> model, NeighborhoodSpec spec,
                   double eps = 1e-3, long cert_samples = 400, double cert_tol = 1e-8);

    const Manifold& model() const { return *model_; }
    const NeighborhoodSpec& spec() const { return spec_; }
    double eps() const { return eps_; }

    // Theorem-backed upper side: r d_g (rescaled for r-bundles, r_max for a
    // sandwich); never computed from embeddings.
    double rho_upper(const Vec& q0, const Vec& q1) const;

    RhoBound rho_bracket(const Vec& q0, const Vec& q1) const;

    // Componentwise sums of the rho brackets over consecutive partition
    // points. Throws when a gap reaches the admissibility threshold.
    std::pair<double, double> length_rho(const Curve& curve,
                                         const std::vector<double>& times) const;

    // Dyadic refinement rows k = k_min..k_max; rows whose partition is not
    // admissible are flagged instead of failing the whole table.
    ConvergenceTable converge_length(const Curve& curve, int k_min, int k_max) const;

    DwBracket chain_metric_dw(const Vec& q0, const Vec& q1, int graph_size = 10000,
                              int neighbors = 16) const;

    // (C1, C2) with C1 = A r_min rho_inj / diam and C2 = r_max; the bool is
    // false when diam is only a graph estimate and C1 is informational.
    struct Constants {
        double c1 = 0;
        double c2 = 0;
        bool c1_certified = true;
    };
    Constants equivalence_constants() const;

    double admissibility_threshold() const;  // 0.9 x estimated delta0

    const CertificateStore& store() const { return store_; }
    std::vector<PackingRecord> packing_records() const;

  private:
    struct DwGraph;
    std::shared_ptr<const DwGraph> dw_graph(int graph_size, int neighbors) const;
    double effective_A() const;

    std::shared_ptr<const Manifold> model_;
    NeighborhoodSpec spec_;
    double eps_;
    long cert_samples_;
    double cert_tol_;

    mutable CertificateStore store_;
    mutable std::mutex mu_;
    mutable std::vector<PackingRecord> packing_;
    mutable std::shared_ptr<const DwGraph> dw_cache_;
    mutable std::optional<double> a_eff_;
};

}  // namespace sml
