#pragma once

// Test-only oracles, independent of the library implementation paths they check.

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "num.hpp"

namespace oracle {

using sml::Mat;
using sml::Vec;

// Dense-stencil Dijkstra on a uniform grid over a doubly periodic chart.
// Edge weights integrate the metric along straight chart segments; the wide
// coprime stencil keeps the angular dilation well under 1e-3.
class PeriodicGridDijkstra {
  public:
    PeriodicGridDijkstra(std::function<Mat(const Vec&)> metric, double period0, double period1,
                         int grid, int window)
        : metric_(std::move(metric)), p0_(period0), p1_(period1), n_(grid) {
        for (int i = -window; i <= window; ++i)
            for (int j = -window; j <= window; ++j) {
                if (i == 0 && j == 0) continue;
                if (std::gcd(std::abs(i), std::abs(j)) != 1) continue;
                stencil_.push_back({i, j});
            }
    }

    double distance(const Vec& a, const Vec& b) const {
        // Endpoints attach to every grid node inside the stencil window, so no
        // snapping detour enters the estimate.
        const int n2 = n_ * n_, src = n2, dst = n2 + 1;
        std::vector<std::pair<int, double>> ea = attach(a), eb = attach(b);
        std::vector<double> dist(n2 + 2, std::numeric_limits<double>::infinity());
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        dist[src] = 0;
        pq.push({0, src});
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            if (u == dst) break;
            if (u == src) {
                for (auto [v, w] : ea)
                    if (d + w < dist[v]) {
                        dist[v] = d + w;
                        pq.push({dist[v], v});
                    }
                const double w = seg_len(a, b);
                if (w < dist[dst]) {
                    dist[dst] = w;
                    pq.push({dist[dst], dst});
                }
                continue;
            }
            const int ui = u / n_, uj = u % n_;
            for (auto [di, dj] : stencil_) {
                const int vi = (ui + di % n_ + n_) % n_;
                const int vj = (uj + dj % n_ + n_) % n_;
                const int v = vi * n_ + vj;
                const double w = edge_len(u, di, dj);
                if (d + w < dist[v]) {
                    dist[v] = d + w;
                    pq.push({dist[v], v});
                }
            }
            for (auto [v, w] : eb)
                if (v == u && d + w < dist[dst]) {
                    dist[dst] = d + w;
                    pq.push({dist[dst], dst});
                }
        }
        return dist[dst];
    }

  private:
    Vec node(int id) const {
        Vec q(2);
        q << (id / n_) * p0_ / n_, (id % n_) * p1_ / n_;
        return q;
    }

    // Edges from a free point to every grid node within the stencil window.
    std::vector<std::pair<int, double>> attach(const Vec& q) const {
        const int ci = static_cast<int>(std::floor(q[0] / p0_ * n_));
        const int cj = static_cast<int>(std::floor(q[1] / p1_ * n_));
        const int w = 8;
        std::vector<std::pair<int, double>> out;
        for (int i = ci - w; i <= ci + w; ++i)
            for (int j = cj - w; j <= cj + w; ++j) {
                const int id = ((i % n_ + n_) % n_) * n_ + ((j % n_ + n_) % n_);
                out.push_back({id, seg_len(q, node(id))});
            }
        return out;
    }

    double seg_len(const Vec& a, const Vec& b) const {
        Vec d(2);
        d << sml::wrap_centered(b[0] - a[0], p0_), sml::wrap_centered(b[1] - a[1], p1_);
        // two-point Gauss on the straight chart segment
        const double x1 = 0.5 - 0.5 / std::sqrt(3.0), x2 = 0.5 + 0.5 / std::sqrt(3.0);
        double s = 0;
        for (double u : {x1, x2}) {
            Vec q(2);
            q << sml::wrap_period(a[0] + u * d[0], p0_), sml::wrap_period(a[1] + u * d[1], p1_);
            s += 0.5 * std::sqrt(d.dot(metric_(q) * d));
        }
        return s;
    }

    double edge_len(int u, int di, int dj) const {
        const Vec a = node(u);
        Vec b(2);
        b << a[0] + di * p0_ / n_, a[1] + dj * p1_ / n_;
        return seg_len(a, b);
    }

    std::function<Mat(const Vec&)> metric_;
    double p0_, p1_;
    int n_;
    std::vector<std::pair<int, int>> stencil_;
};

// Normal-coordinate embedding of the round n-sphere of radius R, written from
// the definition; used only to pull the metric back by finite differences.
inline Vec sphere_embedding(const Vec& x, double R) {
    const int n = static_cast<int>(x.size());
    Vec p = Vec::Zero(n + 1);
    const double r = x.norm();
    if (r < 1e-300) {
        p[n] = R;
        return p;
    }
    p.head(n) = R * std::sin(r / R) * x / r;
    p[n] = R * std::cos(r / R);
    return p;
}

inline Mat sphere_pullback_fd(const Vec& x, double R, double h = 1e-6) {
    const int n = static_cast<int>(x.size());
    Mat j(n + 1, n);
    for (int k = 0; k < n; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        j.col(k) = (sphere_embedding(xp, R) - sphere_embedding(xm, R)) / (2 * h);
    }
    return j.transpose() * j;
}

// d_exp by central finite differences of exp_map in the transported frame.
template <typename Model>
Mat fd_dexp(const Model& m, const Vec& q, const Vec& v, double h,
            const std::vector<double>& periods = {}) {
    const int n = m.dim();
    const Mat e = m.gs_frame(q);
    Mat jc(n, n);
    for (int j = 0; j < n; ++j) {
        const Vec fj = e.col(j);
        const Vec yp = m.exp_map(q, v + h * fj);
        const Vec ym = m.exp_map(q, v - h * fj);
        Vec d = yp - ym;
        for (int i = 0; i < n && i < static_cast<int>(periods.size()); ++i)
            d[i] = sml::wrap_centered(d[i], periods[i]);
        jc.col(j) = d / (2 * h);
    }
    Mat f(n, n);
    for (int j = 0; j < n; ++j) f.col(j) = m.parallel_transport(q, v, e.col(j));
    return f.partialPivLu().solve(jc);
}

}  // namespace oracle
