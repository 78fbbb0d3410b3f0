#include "catch2/catch_amalgamated.hpp"

#include <random>

#include "fracnet/models/spa.hpp"
#include "fracnet/oracle.hpp"

using namespace fracnet;
using Catch::Approx;

namespace {

Crack make_crack(int id, double cx, double cy, double len, double theta) {
    Crack c;
    c.id = id;
    c.center = {cx, cy};
    c.length = len;
    c.theta_deg = theta;
    c.kind = CrackKind::Interior;
    return c;
}

Scenario with_boundaries(std::vector<Crack> cracks) {
    Scenario s;
    int next = 0;
    for (auto& c : cracks) next = std::max(next, c.id + 1);
    Crack left, right;
    left.id = next;
    left.kind = CrackKind::BoundaryLeft;
    left.center = {0.0, s.geometry.h / 2};
    left.theta_deg = 90.0;
    right = left;
    right.id = next + 1;
    right.kind = CrackKind::BoundaryRight;
    right.center = {s.geometry.w, s.geometry.h / 2};
    s.cracks = std::move(cracks);
    s.cracks.push_back(left);
    s.cracks.push_back(right);
    return s;
}

/// Exhaustive minimum over all simple left-to-right paths in the SPA graph.
double brute_force_weight(const spa::SpaGraph& g) {
    const int n = g.left;  // interior node count
    std::vector<std::vector<double>> w(n + 2, std::vector<double>(n + 2, 0.0));
    for (const auto& e : g.graph.edges) w[e.a][e.b] = w[e.b][e.a] = e.weight;

    double best = w[g.left][g.right];
    std::vector<int> path;
    std::vector<bool> used(n, false);
    auto dfs = [&](auto&& self, int last, double acc) -> void {
        if (acc >= best) return;  // weights are nonnegative
        best = std::min(best, acc + w[last][g.right]);
        for (int v = 0; v < n; ++v) {
            if (used[v]) continue;
            used[v] = true;
            self(self, v, acc + w[last][v]);
            used[v] = false;
        }
    };
    dfs(dfs, g.left, 0.0);
    return best;
}

}  // namespace

TEST_CASE("spa graph with no interior cracks") {
    auto s = with_boundaries({});
    auto g = spa::build_spa_graph(s);
    CHECK(g.graph.nodes.size() == 2);
    auto pred = spa::shortest_failure_path(g);
    CHECK(pred.path.crack_ids.empty());
    CHECK(pred.weight == Approx(s.geometry.w));
}

TEST_CASE("spa single-crack weights") {
    auto s = with_boundaries({make_crack(0, 1.0, 1.5, 0.3, 0.0)});
    auto g = spa::build_spa_graph(s);
    auto pred = spa::shortest_failure_path(g);
    CHECK(pred.path.crack_ids == std::vector<int>{0});
    CHECK(pred.weight == Approx(1.7));  // 0.85 + 0.85
}

TEST_CASE("spa collinear crack pair weight") {
    // tips at x = 1.0 and x = 1.2 face each other
    auto s = with_boundaries(
        {make_crack(0, 0.85, 1.5, 0.3, 0.0), make_crack(1, 1.35, 1.5, 0.3, 0.0)});
    CHECK(spa::crack_pair_weight(s.cracks[0], s.cracks[1], s.geometry) == Approx(0.2));
}

TEST_CASE("spa path weight never exceeds the sample width") {
    for (unsigned long seed = 0; seed < 20; ++seed) {
        auto s = oracle::generate_scenario(seed, 10, 0.3, {0.0, 60.0, 120.0});
        auto pred = spa::predict(s);
        CHECK(pred.weight <= s.geometry.w + 1e-12);
    }
}

TEST_CASE("spa weight is monotone under crack addition") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ux(0.3, 1.7), uy(0.3, 2.7), ut(0.0, 180.0);
    std::vector<Crack> cracks;
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 12; ++i) {
        cracks.push_back(make_crack(i, ux(rng), uy(rng), 0.3, ut(rng)));
        auto pred = spa::predict(with_boundaries(cracks));
        CHECK(pred.weight <= prev + 1e-12);
        prev = pred.weight;
    }
}

TEST_CASE("spa agrees with brute-force enumeration") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ux(0.3, 1.7), uy(0.3, 2.7), ut(0.0, 180.0);
    std::uniform_int_distribution<int> un(1, 8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Crack> cracks;
        const int n = un(rng);
        for (int i = 0; i < n; ++i) cracks.push_back(make_crack(i, ux(rng), uy(rng), 0.3, ut(rng)));
        auto g = spa::build_spa_graph(with_boundaries(cracks));
        auto pred = spa::shortest_failure_path(g);
        CHECK(pred.weight == Approx(brute_force_weight(g)).margin(1e-12));
    }
}

TEST_CASE("spa tie-break picks the lexicographically smallest id sequence") {
    // two identical cracks mirrored about the horizontal midline: equal weight
    auto s = with_boundaries(
        {make_crack(0, 1.0, 1.0, 0.3, 0.0), make_crack(1, 1.0, 2.0, 0.3, 0.0)});
    auto pred = spa::predict(s);
    CHECK(pred.path.crack_ids == std::vector<int>{0});
}
