#pragma once

// Exact min-cost transport between two finite atom lists on the line, each
// topped up to a common mass with cemetery atoms. d(x, y) = |x - y|,
// d(x, cemetery) = |x - x0| + 1, d(cemetery, cemetery) = 0.
// Solved with successive shortest paths (Bellman-Ford on the residual graph).

#include "bmfg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Node {
    bool cemetery = false;
    double x = 0.0;
    double mass = 0.0;
};

inline double ground(const Node& a, const Node& b, double x0) {
    if (a.cemetery && b.cemetery) return 0.0;
    if (a.cemetery) return std::abs(b.x - x0) + 1.0;
    if (b.cemetery) return std::abs(a.x - x0) + 1.0;
    return std::abs(a.x - b.x);
}

/// Minimum of sum c(i, j) pi(i, j) over couplings of equal-mass marginals.
inline double min_cost_flow(const std::vector<Node>& src, const std::vector<Node>& dst, double x0) {
    const std::size_t n = src.size(), m = dst.size();
    // nodes: 0 = source, 1..n supply, n+1..n+m demand, n+m+1 = sink
    const std::size_t V = n + m + 2, S = 0, T = n + m + 1;
    struct Edge {
        std::size_t to, rev;
        double cap, cost;
    };
    std::vector<std::vector<Edge>> g(V);
    auto add = [&](std::size_t u, std::size_t v, double cap, double cost) {
        g[u].push_back({v, g[v].size(), cap, cost});
        g[v].push_back({u, g[u].size() - 1, 0.0, -cost});
    };
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) add(S, 1 + i, src[i].mass, 0.0);
    for (std::size_t j = 0; j < m; ++j) add(1 + n + j, T, dst[j].mass, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) add(1 + i, 1 + n + j, inf, ground(src[i], dst[j], x0));

    double total = 0.0, cost = 0.0, need = 0.0;
    for (const auto& s : src) need += s.mass;
    const double eps = 1e-15 * std::max(1.0, need);
    while (need - total > eps) {
        std::vector<double> dist(V, inf);
        std::vector<std::size_t> pv(V), pe(V);
        dist[S] = 0.0;
        for (std::size_t iter = 0; iter < V; ++iter) {
            bool changed = false;
            for (std::size_t u = 0; u < V; ++u) {
                if (dist[u] == inf) continue;
                for (std::size_t k = 0; k < g[u].size(); ++k) {
                    const auto& e = g[u][k];
                    if (e.cap > eps && dist[u] + e.cost < dist[e.to] - 1e-14) {
                        dist[e.to] = dist[u] + e.cost;
                        pv[e.to] = u;
                        pe[e.to] = k;
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }
        if (dist[T] == inf) break;
        double push = inf;
        for (std::size_t v = T; v != S; v = pv[v]) push = std::min(push, g[pv[v]][pe[v]].cap);
        for (std::size_t v = T; v != S; v = pv[v]) {
            auto& e = g[pv[v]][pe[v]];
            e.cap -= push;
            g[v][e.rev].cap += push;
        }
        total += push;
        cost += push * dist[T];
    }
    return cost;
}

/// Cemetery-augmented optimum; both sides are topped up to max(mass) + extra.
inline double w1_primal(const bmfg::FiniteMeasure& mu, const bmfg::FiniteMeasure& nu, double extra = 0.0) {
    if (mu.base_point() != nu.base_point()) throw std::invalid_argument("base points differ");
    const double x0 = mu.base_point();
    std::vector<Node> a, b;
    double ma = 0.0, mb = 0.0;
    for (const auto& at : mu.to_atoms())
        if (at.weight > 0.0) a.push_back({false, at.position, at.weight}), ma += at.weight;
    for (const auto& at : nu.to_atoms())
        if (at.weight > 0.0) b.push_back({false, at.position, at.weight}), mb += at.weight;
    const double level = std::max(ma, mb) + extra;
    if (level - ma > 0.0) a.push_back({true, 0.0, level - ma});
    if (level - mb > 0.0) b.push_back({true, 0.0, level - mb});
    if (a.empty() || b.empty()) return 0.0;
    return min_cost_flow(a, b, x0);
}

} // namespace oracle
