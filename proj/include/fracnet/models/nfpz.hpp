#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "fracnet/core.hpp"
#include "fracnet/graph.hpp"

namespace fracnet::nfpz {

constexpr double kCrackEdgeWeight = 1e-6;  // m, along preexisting crack surfaces

/// PZ size for a crack pair: 30% of the summed lengths.
inline double pz_size(const Crack& a, const Crack& b) {
    return 0.3 * (a.length + b.length);
}

/// Minimum tip-to-tip distance between two interior cracks.
inline double tip_gap(const Crack& a, const Crack& b) {
    auto [a0, a1] = tip_positions(a);
    auto [b0, b1] = tip_positions(b);
    return std::min({distance(a0, b0), distance(a0, b1), distance(a1, b0), distance(a1, b1)});
}

struct PzPair {
    int i = 0, j = 0;       // crack ids
    double d12 = 0.0;       // m, PZ size
    double gap = 0.0;       // m, minimum tip-to-tip distance
    bool coalesces = false;
};

struct FailureZone {
    std::vector<int> members;  // crack ids
    double y_lo = 0.0, y_hi = 0.0;
    double total_length = 0.0;
};

/// Horizontal seed cracks paired with the nearest neighboring crack per tip.
inline std::vector<std::pair<int, int>> seed_and_neighbors(const Scenario& scenario,
                                                           double theta_tol = 1.0) {
    const auto interior = scenario.interior_cracks();
    std::vector<std::pair<int, int>> out;
    for (const auto& seed : interior) {
        const double t = std::fmod(seed.theta_deg, 180.0);
        if (std::min(t, 180.0 - t) > theta_tol) continue;
        auto [tip0, tip1] = tip_positions(seed);
        for (const Vec2& tip : {tip0, tip1}) {
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity();
            for (const auto& other : interior) {
                if (other.id == seed.id) continue;
                const double d = tip_to_body_distance(tip, other, scenario.geometry);
                if (d < best_d || (d == best_d && other.id < best)) {
                    best_d = d;
                    best = other.id;
                }
            }
            if (best >= 0) out.push_back({seed.id, best});
        }
    }
    return out;
}

/// Connected components of PZ-overlap links, ranked by merged length descending.
inline std::vector<FailureZone> coalescence_clusters(const Scenario& scenario) {
    const auto interior = scenario.interior_cracks();
    std::vector<int> ids;
    for (const auto& c : interior) ids.push_back(c.id);

    auto index_of = [&](int id) {
        return static_cast<int>(std::find(ids.begin(), ids.end(), id) - ids.begin());
    };

    DisjointSet dsu(interior.size());
    std::set<int> linked;
    for (const auto& [seed_id, nb_id] : seed_and_neighbors(scenario)) {
        const Crack& a = scenario.crack_by_id(seed_id);
        const Crack& b = scenario.crack_by_id(nb_id);
        if (tip_gap(a, b) <= pz_size(a, b)) {
            dsu.unite(index_of(seed_id), index_of(nb_id));
            linked.insert(index_of(seed_id));
            linked.insert(index_of(nb_id));
        }
    }

    std::vector<FailureZone> zones;
    for (int root = 0; root < static_cast<int>(interior.size()); ++root) {
        if (!linked.count(root) || dsu.find(root) != root) continue;
        FailureZone z;
        double longest_half = 0.0;
        double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
        for (int i = 0; i < static_cast<int>(interior.size()); ++i) {
            if (!linked.count(i) || dsu.find(i) != root) continue;
            z.members.push_back(ids[i]);
            z.total_length += interior[i].length;
            y_min = std::min(y_min, interior[i].center.y);
            y_max = std::max(y_max, interior[i].center.y);
            longest_half = std::max(longest_half, interior[i].length / 2);
        }
        std::sort(z.members.begin(), z.members.end());
        z.y_lo = y_min - longest_half;
        z.y_hi = y_max + longest_half;
        zones.push_back(std::move(z));
    }
    std::sort(zones.begin(), zones.end(), [](const FailureZone& a, const FailureZone& b) {
        if (a.total_length != b.total_length) return a.total_length > b.total_length;
        return a.members < b.members;
    });
    return zones;
}

/// Tip-node graph: two nodes per interior crack joined by a low-weight edge,
/// Euclidean tip-to-tip edges across cracks, and two boundary nodes.
struct TipGraph {
    CrackGraph graph;  // payload = interior crack id, -1 for boundary nodes
    int left = 0;
    int right = 0;
    std::vector<std::pair<int, int>> crack_tip_nodes;  // (crack id, first node index)
};

inline TipGraph build_tip_graph(const Scenario& scenario) {
    const auto interior = scenario.interior_cracks();
    const auto& geom = scenario.geometry;
    TipGraph tg;
    for (const auto& c : interior) {
        auto [a, b] = tip_positions(c);
        const int base = static_cast<int>(tg.graph.nodes.size());
        tg.graph.nodes.push_back({base, a, c.id});
        tg.graph.nodes.push_back({base + 1, b, c.id});
        tg.crack_tip_nodes.push_back({c.id, base});
        tg.graph.add_edge(base, base + 1, kCrackEdgeWeight);
    }
    tg.left = static_cast<int>(tg.graph.nodes.size());
    tg.right = tg.left + 1;
    tg.graph.nodes.push_back({tg.left, {0.0, geom.h / 2}, -1});
    tg.graph.nodes.push_back({tg.right, {geom.w, geom.h / 2}, -1});

    const int n_tips = tg.left;
    for (int u = 0; u < n_tips; ++u) {
        for (int v = u + 1; v < n_tips; ++v) {
            if (tg.graph.nodes[u].payload == tg.graph.nodes[v].payload) continue;
            tg.graph.add_edge(u, v, distance(tg.graph.nodes[u].pos, tg.graph.nodes[v].pos));
        }
        tg.graph.add_edge(u, tg.left, std::abs(tg.graph.nodes[u].pos.x));
        tg.graph.add_edge(u, tg.right, std::abs(tg.graph.nodes[u].pos.x - geom.w));
    }
    tg.graph.add_edge(tg.left, tg.right, geom.w);
    return tg;
}

inline FailurePath node_path_to_cracks(const TipGraph& tg, const std::vector<int>& nodes) {
    FailurePath p;
    p.spanning = true;
    for (int u : nodes) {
        const int id = tg.graph.nodes[u].payload;
        if (id >= 0 && (p.crack_ids.empty() || p.crack_ids.back() != id))
            p.crack_ids.push_back(id);
    }
    return p;
}

struct NfpzPrediction {
    std::vector<FailurePath> paths;  // ranked by weight ascending
    std::vector<double> weights;
    bool fallback = false;  // no zone existed; unconstrained shortest path
};

/// Weighted shortest boundary-to-boundary paths constrained to pass through
/// the top-ranked failure zone (waypoint per zone crack, best of).
inline NfpzPrediction likely_failure_paths(const Scenario& scenario,
                                           const std::vector<FailureZone>& zones,
                                           int k = 1) {
    TipGraph tg = build_tip_graph(scenario);
    NfpzPrediction out;

    if (zones.empty()) {
        auto sp = dijkstra(tg.graph, tg.left, tg.right);
        out.fallback = true;
        out.paths.push_back(node_path_to_cracks(tg, sp.nodes));
        out.weights.push_back(sp.weight);
        return out;
    }

    const auto from_left = dijkstra_all(tg.graph, tg.left);
    const auto from_right = dijkstra_all(tg.graph, tg.right);

    struct Candidate {
        double weight;
        std::vector<int> nodes;
    };
    std::vector<Candidate> cands;
    for (int member : zones.front().members) {
        for (const auto& [crack_id, base] : tg.crack_tip_nodes) {
            if (crack_id != member) continue;
            for (int u : {base, base + 1}) {
                Candidate c;
                c.weight = from_left[u].weight + from_right[u].weight;
                c.nodes = from_left[u].nodes;
                auto back = from_right[u].nodes;  // right -> u; reverse and skip u
                for (auto it = back.rbegin() + 1; it != back.rend(); ++it)
                    c.nodes.push_back(*it);
                cands.push_back(std::move(c));
            }
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return a.weight < b.weight || (a.weight == b.weight && a.nodes < b.nodes);
    });

    std::set<std::vector<int>> seen;
    for (const auto& c : cands) {
        FailurePath p = node_path_to_cracks(tg, c.nodes);
        if (!seen.insert(p.crack_ids).second) continue;
        out.paths.push_back(std::move(p));
        out.weights.push_back(c.weight);
        if (static_cast<int>(out.paths.size()) >= k) break;
    }
    return out;
}

inline NfpzPrediction predict(const Scenario& scenario, int k = 1) {
    return likely_failure_paths(scenario, coalescence_clusters(scenario), k);
}

}  // namespace fracnet::nfpz
