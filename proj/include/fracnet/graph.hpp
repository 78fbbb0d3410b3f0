#pragma once

#include <limits>
#include <queue>
#include <vector>

#include "fracnet/core.hpp"

namespace fracnet {

struct ShortestPathResult {
    double weight = std::numeric_limits<double>::infinity();
    std::vector<int> nodes;  // node ids from src to dst, inclusive
};

namespace detail {

// Lexicographic comparison of node-id sequences (shorter prefix wins ties).
inline bool seq_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Dijkstra from src to every node; exact-tie distances are broken by the
/// lexicographically smallest node-id sequence.
inline std::vector<ShortestPathResult> dijkstra_all(const CrackGraph& g, int src) {
    const auto adj = g.adjacency();
    const int n = static_cast<int>(g.nodes.size());
    std::vector<ShortestPathResult> best(n);
    best[src].weight = 0.0;
    best[src].nodes = {src};

    // Label-correcting variant: nodes are re-relaxed when an equal-weight
    // path with a lexicographically smaller id sequence is found.
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > best[u].weight) continue;
        for (auto [v, w] : adj[u]) {
            const double nd = best[u].weight + w;
            auto cand = best[u].nodes;
            cand.push_back(v);
            if (nd < best[v].weight ||
                (nd == best[v].weight && detail::seq_less(cand, best[v].nodes))) {
                best[v].weight = nd;
                best[v].nodes = std::move(cand);
                pq.push({nd, v});
            }
        }
    }
    return best;
}

inline ShortestPathResult dijkstra(const CrackGraph& g, int src, int dst) {
    return dijkstra_all(g, src)[dst];
}

/// Disjoint-set union with path compression.
class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<int>(i);
    }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Returns true if x and y were in different components.
    bool unite(int x, int y) {
        int rx = find(x), ry = find(y);
        if (rx == ry) return false;
        parent_[ry] = rx;
        return true;
    }

    bool connected(int x, int y) { return find(x) == find(y); }

private:
    std::vector<int> parent_;
};

}  // namespace fracnet
