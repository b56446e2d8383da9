#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "manifold.hpp"
#include "num.hpp"

namespace sml {

// Closed-form profile of the bi-disc embedding: f odd and increasing with
// f' = sqrt(4ab/pi - q^2) and f(2 sqrt(ab/pi)) = ab.
struct BidiscProfile {
    double c;     // 4ab/pi
    double qmax;  // 2 sqrt(ab/pi)
    BidiscProfile(double a, double b);
    double f(double q) const;
    double fp(double q) const;
};

std::pair<double, double> bidisc_profile(double a, double b, double q);

// phi(q) = f(|q|) q / |q| and its derivative.
struct RadialExtension {
    Vec phi;
    Mat dphi;
};
RadialExtension radial_extension(double a, double b, const Vec& q);

struct RegionDescriptor {
    enum class Kind { Ball, BiDisc, DiscBundle, Box };
    Kind kind = Kind::Ball;
    int n = 0;          // base dimension; phase points have 2n coordinates
    double radius = 0;  // Ball / DiscBundle
    double a = 0, b = 0;
    std::vector<std::array<double, 2>> box;
    std::shared_ptr<const Manifold> model;  // DiscBundle
    Vec center;                             // DiscBundle: normal chart center

    static RegionDescriptor ball(int n, double r);
    static RegionDescriptor bi_disc(int n, double a, double b);
    static RegionDescriptor disc_bundle(std::shared_ptr<const Manifold> m, double r, Vec center);
    static RegionDescriptor product_box(std::vector<std::array<double, 2>> intervals);

    // Signed margin to the boundary, positive inside. For disc bundles this is
    // r minus the fiber norm in the normal chart at `center`.
    double margin(const Vec& x) const;
    bool contains(const Vec& x) const { return margin(x) >= 0; }
    nlohmann::json to_json() const;
};

struct SymplecticMapSpec {
    std::string name;
    nlohmann::json params;
    int n = 0;
    RegionDescriptor domain;
    RegionDescriptor target;
    std::function<Vec(const Vec&)> map;
    std::function<Mat(const Vec&)> jacobian;
    bool analytic_jacobian = false;
    double sampling_shrink = 1.0;  // certificates sample the domain scaled by this

    // Ball capacity of the domain when it is a ball, else 0.
    double domain_capacity = 0;

    // Certified bound on the base displacement of the image (disc bundles).
    double base_tube = 0;

    Vec apply(const Vec& x) const { return map(x); }
};

// FD recipe used when no closed-form Jacobian is supplied; central
// differences with step 1e-6 x domain scale.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double scale);

// e(q,p) = (phi(q), (Dphi(q)^-1)^T p) into P_L(ab,1), then the linear
// symplectomorphism onto P_L(a,b). Domain ball is shrunk by (1-eps).
SymplecticMapSpec bidisc_embedding(double a, double b, int n, double eps);

// psi(q,p) = (exp_q0(q), (d exp^-1)^T p) realized in the normal chart at q0,
// where it is the identity on coordinates; the chart metric carries the
// geometry. Domain P_L(d, rho_p), target D*_r N.
SymplecticMapSpec fiber_frame_embedding(std::shared_ptr<const Manifold> model, const Vec& q0,
                                        double d, double rho_p, double target_r, double eps);

// Composition psi . e with bi-disc factor P_L(d/2, rho_p): a ball of capacity
// 2 d rho_p (1-eps)^2 into D*_r N, centered at q0, real part on the zero
// section, imaginary part in the fiber, base image inside the open tube of
// radius d/2.
SymplecticMapSpec local_ball_embedding(std::shared_ptr<const Manifold> model, const Vec& q0,
                                       double d, double rho_p, double target_r, double eps);

struct CheckResult {
    std::string name;
    long samples = 0;
    double tol = 0;
    double worst = 0;  // worst violation; <= tol passes
    bool pass = false;
    std::string notes;
    nlohmann::json to_json() const;
};

CheckResult check_symplectic(const SymplecticMapSpec& m, long samples, double tol);
CheckResult check_liouville(const SymplecticMapSpec& m, long samples, double tol);
CheckResult check_containment(const SymplecticMapSpec& m, long samples, double required_margin);
CheckResult check_relative_boundary(const SymplecticMapSpec& m, long samples, double tol);

// Disjointness: by disjoint base tubes when both maps carry the geometric
// data, otherwise by sampled image separation with a Lipschitz margin.
CheckResult check_disjoint(const SymplecticMapSpec& a, const SymplecticMapSpec& b, long samples,
                           double margin);

enum class CheckKind { Symplectic, Liouville, Containment, Relative };

struct EmbeddingCertificate {
    std::string id;
    std::string map_name;
    nlohmann::json params;
    std::vector<CheckResult> checks;
    bool pass = false;
    std::string note;
    nlohmann::json to_json() const;
};

struct CertifyOptions {
    long samples = 10000;
    double tol = 1e-8;
    double containment_margin = 0;
    double relative_tol = 1e-10;
};

EmbeddingCertificate certify(const SymplecticMapSpec& m, const std::vector<CheckKind>& checks,
                             const CertifyOptions& opt = {});

// Append-only certificate store with process-unique ids.
class CertificateStore {
  public:
    std::string add(EmbeddingCertificate cert);
    std::optional<EmbeddingCertificate> find(const std::string& id) const;
    size_t size() const;

  private:
    mutable std::mutex mu_;
    std::vector<EmbeddingCertificate> items_;
};

}  // namespace sml
