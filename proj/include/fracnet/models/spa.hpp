#pragma once

#include <algorithm>
#include <vector>

#include "fracnet/core.hpp"
#include "fracnet/graph.hpp"

namespace fracnet::spa {

/// Complete graph over interior cracks plus the two lateral boundary nodes.
/// Node n is the left boundary, node n+1 the right; payload carries crack ids.
struct SpaGraph {
    CrackGraph graph;
    int left = 0;
    int right = 0;
};

inline double crack_pair_weight(const Crack& a, const Crack& b, const SampleGeometry& geom) {
    auto [a0, a1] = tip_positions(a);
    auto [b0, b1] = tip_positions(b);
    return std::min({tip_to_body_distance(a0, b, geom), tip_to_body_distance(a1, b, geom),
                     tip_to_body_distance(b0, a, geom), tip_to_body_distance(b1, a, geom)});
}

inline SpaGraph build_spa_graph(const Scenario& scenario) {
    const auto interior = scenario.interior_cracks();
    const int n = static_cast<int>(interior.size());
    const auto& geom = scenario.geometry;

    SpaGraph g;
    g.left = n;
    g.right = n + 1;
    for (int i = 0; i < n; ++i)
        g.graph.nodes.push_back({i, interior[i].center, interior[i].id});
    g.graph.nodes.push_back({g.left, {0.0, geom.h / 2}, -1});
    g.graph.nodes.push_back({g.right, {geom.w, geom.h / 2}, -1});

    Crack left_crack, right_crack;
    left_crack.kind = CrackKind::BoundaryLeft;
    right_crack.kind = CrackKind::BoundaryRight;
    left_crack.theta_deg = right_crack.theta_deg = 90.0;

    for (int i = 0; i < n; ++i) {
        auto [t0, t1] = tip_positions(interior[i]);
        for (int j = i + 1; j < n; ++j)
            g.graph.add_edge(i, j, crack_pair_weight(interior[i], interior[j], geom));
        g.graph.add_edge(i, g.left,
                         std::min(tip_to_body_distance(t0, left_crack, geom),
                                  tip_to_body_distance(t1, left_crack, geom)));
        g.graph.add_edge(i, g.right,
                         std::min(tip_to_body_distance(t0, right_crack, geom),
                                  tip_to_body_distance(t1, right_crack, geom)));
    }
    g.graph.add_edge(g.left, g.right, geom.w);
    return g;
}

struct SpaPrediction {
    FailurePath path;
    double weight = 0.0;
};

/// Minimum-weight left-to-right boundary path; interior nodes in path order.
inline SpaPrediction shortest_failure_path(const SpaGraph& g) {
    auto result = dijkstra(g.graph, g.left, g.right);
    SpaPrediction out;
    out.weight = result.weight;
    out.path.spanning = true;
    for (int node : result.nodes)
        if (node != g.left && node != g.right)
            out.path.crack_ids.push_back(g.graph.nodes[node].payload);
    return out;
}

inline SpaPrediction predict(const Scenario& scenario) {
    return shortest_failure_path(build_spa_graph(scenario));
}

}  // namespace fracnet::spa
