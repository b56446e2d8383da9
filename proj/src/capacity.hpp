#pragma once

#include <string>

#include "distance.hpp"
#include "symplectic.hpp"

namespace sml {

// Euclidean volume of the n-dimensional ball of radius r.
double ball_volume(int n, double r);

// Closed-form volumes: B^{2n}(r), P_L(a,b), D*_r N (Liouville volume), boxes.
double euclidean_volume(const RegionDescriptor& region);

// Volume-obstruction bound on the Gromov width of a 2n-dimensional region:
// the capacity of the ball of equal volume, (n! Vol)^(1/n).
double gromov_width_volume_bound(const RegionDescriptor& region);

struct CapacityReport {
    RegionDescriptor region;
    double gromov_lower = 0;
    std::string gromov_certificate;
    double cyl_upper = 0;
    std::string cyl_method;
    double volume = 0;
    bool conformality_ok = false;
    bool monotonicity_ok = false;
    nlohmann::json to_json() const;
};

// 4ab(1-eps)^2, linked to a fresh certificate of the explicit embedding.
// Throws when certification fails.
double bidisc_gromov_lower(double a, double b, double eps, int n, CertificateStore& store,
                           std::string* cert_id = nullptr, long samples = 2000,
                           double tol = 1e-8);

// 4ab: the projection (q,p) -> (q1,p1) lands in a 2a x 2b square.
double bidisc_cyl_upper(double a, double b);

// Monte-Carlo bounding box of the projection shadow over `samples` points
// of P_L(a,b); always <= 4ab, approaching it from below.
double bidisc_shadow_box_area(double a, double b, int n, long samples);

CapacityReport bidisc_capacity_report(double a, double b, int n, double eps,
                                      CertificateStore& store, long samples = 2000);

struct SpherePackingReport {
    int n = 0;
    double ball_capacity = 0;      // pi r^2 of each of the two balls
    double packing_number = 0;     // 2 pi r^2
    double two_ball_volume = 0;
    double bundle_volume = 0;
    double volume_gap = 0;         // |2 Vol(ball) - Vol(D*S^n)|
    double four_diam = 0;
    nlohmann::json to_json() const;
};

// Standard sphere scaled so diam = 1/2: two balls B^{2n}(1/sqrt(pi)) fill the
// unit disc bundle exactly and realize packing number 2 = 4 diam.
SpherePackingReport sphere_packing_example(int n);

struct RpPackingReport {
    int n = 0;
    bool modeled = false;  // only the circle double cover (n = 1) is modeled
    double ball_capacity = 0;
    double ball_volume = 0;
    double bundle_volume = 0;
    double volume_gap = 0;
    double four_diam = 0;
    nlohmann::json to_json() const;
};

// Projective space with the metric induced from the sphere, scaled so
// diam = 1/4. Reduced to its volume identity at n = 1, where the double
// cover is a circle of circumference 1/2; larger n are reported unmodeled.
RpPackingReport rp_packing_example(int n);

struct PackingAuditReport {
    long pairs = 0;
    long violations = 0;
    double worst_excess = 0;    // max of (pi r0^2 + pi r1^2) - 4 r d_g
    double tightest_ratio = 0;  // max of (pi r0^2 + pi r1^2) / (4 r d_g)
    bool ok = true;
    nlohmann::json to_json() const;
};

PackingAuditReport packing_audit(const std::vector<PackingRecord>& records,
                                 double tolerance = 1e-9);

}  // namespace sml
