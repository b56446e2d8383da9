#include "num.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace sml {

GaussRule::GaussRule(int order) {
    if (order < 1) fail(ErrorKind::InvalidArgument, "quadrature order must be >= 1");
    nodes.resize(order);
    weights.resize(order);
    const int n = order;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const GaussRule& rule, int panels) {
    if (panels < 1) panels = 1;
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + h / 2, half = h / 2;
        double s = 0.0;
        for (size_t i = 0; i < rule.nodes.size(); ++i)
            s += rule.weights[i] * f(mid + half * rule.nodes[i]);
        total += s * half;
    }
    return total;
}

namespace {
double simpson(const std::function<double(double)>& f, double a, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
    const double m = (a + b) / 2;
    const double lm = (a + m) / 2, rm = (m + b) / 2;
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6 * (fm + 4 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
    return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth) {
    const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
    const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

int thread_budget(int hint) {
    int cap = hint > 0 ? hint : 1;
    if (const char* env = std::getenv("SML_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) cap = std::min(cap, v);
    } else {
        cap = 1;  // single-threaded unless explicitly allowed
    }
    return std::max(1, cap);
}

double parallel_max(std::int64_t count, const std::function<double(std::int64_t)>& fn) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    if (count <= 0) return neg_inf;
    const int workers = thread_budget(static_cast<int>(std::thread::hardware_concurrency()));
    if (workers == 1 || count < 256) {
        double worst = neg_inf;
        for (std::int64_t i = 0; i < count; ++i) worst = std::max(worst, fn(i));
        return worst;
    }
    const std::int64_t chunk = 256;  // fixed: results independent of worker count
    const std::int64_t nchunks = (count + chunk - 1) / chunk;
    std::vector<double> chunk_max(nchunks, neg_inf);
    std::atomic<std::int64_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::int64_t c = next.fetch_add(1);
            if (c >= nchunks) return;
            double worst = neg_inf;
            const std::int64_t lo = c * chunk, hi = std::min(count, lo + chunk);
            for (std::int64_t i = lo; i < hi; ++i) worst = std::max(worst, fn(i));
            chunk_max[c] = worst;
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    double worst = neg_inf;
    for (double v : chunk_max) worst = std::max(worst, v);
    return worst;
}

}  // namespace sml
