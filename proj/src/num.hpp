#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sml {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind {
    InvalidArgument,
    ChartDomain,
    SingularJacobian,
    Numeric,
    CheckFailed,
};

struct Error : std::runtime_error {
    ErrorKind kind;
    Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline double clamp_acos(double c) { return std::acos(std::min(1.0, std::max(-1.0, c))); }

// Wrap x into [0, period).
inline double wrap_period(double x, double period) {
    double y = std::fmod(x, period);
    if (y < 0) y += period;
    // fmod can return `period` after the += when x is a tiny negative number
    if (y >= period) y -= period;
    return y;
}

// Signed representative of x in (-period/2, period/2].
inline double wrap_centered(double x, double period) {
    double y = wrap_period(x, period);
    if (y > period / 2) y -= period;
    return y;
}

inline double sq(double x) { return x * x; }

// sin(x)/x with the removable singularity handled by series.
inline double sinc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
    return std::sin(x) / x;
}

// Spectral norm of a (not necessarily symmetric) matrix.
inline double operator_norm(const Mat& m) {
    return m.jacobiSvd().singularValues()(0);
}

inline double smallest_singular_value(const Mat& m) {
    auto sv = m.jacobiSvd().singularValues();
    return sv(sv.size() - 1);
}

// Gauss-Legendre nodes/weights on [-1,1], computed by Newton iteration.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    explicit GaussRule(int order);
};

// Integrate f over [a,b] with `panels` panels of the given Gauss rule.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const GaussRule& rule, int panels = 1);

// Adaptive Simpson, used where a self-refining oracle-grade quadrature is wanted.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-12, int max_depth = 40);

// Fixed formatting so serialized output is byte-stable across runs.
std::string fmt_double(double x);

// Number of worker threads: min(SML_THREADS, hint), at least 1.
int thread_budget(int hint);

// Chunked parallel max-reduction: fn(i) for i in [0,count), result = max.
// Chunk boundaries are fixed so the result does not depend on thread count.
double parallel_max(std::int64_t count, const std::function<double(std::int64_t)>& fn);

}  // namespace sml
