#include "catch2/catch_amalgamated.hpp"

#include <set>

#include "fracnet/models/nfpz.hpp"
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

// Exhaustive minimum-weight simple path from left to right over the tip graph,
// optionally required to touch a tip of any crack in `required`.
double brute_force_path_weight(const nfpz::TipGraph& tg, const std::set<int>& required) {
    const int n = static_cast<int>(tg.graph.nodes.size());
    std::vector<std::vector<double>> w(n, std::vector<double>(n, -1.0));
    for (const auto& e : tg.graph.edges) w[e.a][e.b] = w[e.b][e.a] = e.weight;

    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> used(n, false);
    auto satisfied = [&](int u) { return required.empty() || required.count(tg.graph.nodes[u].payload); };
    auto dfs = [&](auto&& self, int u, double acc, bool ok) -> void {
        if (acc >= best) return;
        if (u == tg.right) {
            if (ok) best = acc;
            return;
        }
        for (int v = 0; v < n; ++v) {
            if (used[v] || w[u][v] < 0) continue;
            used[v] = true;
            self(self, v, acc + w[u][v], ok || satisfied(v));
            used[v] = false;
        }
    };
    used[tg.left] = true;
    dfs(dfs, tg.left, 0.0, false);
    return best;
}

}  // namespace

TEST_CASE("pz_size is 30 percent of the combined length") {
    auto a = make_crack(0, 0.5, 1.0, 0.3, 0.0);
    auto b = make_crack(1, 1.5, 1.0, 0.3, 60.0);
    CHECK(nfpz::pz_size(a, b) == Approx(0.18).margin(1e-12));
    a.length = 0.0;
    CHECK(nfpz::pz_size(a, b) == Approx(0.09).margin(1e-12));
    b.length = 0.0;
    CHECK(nfpz::pz_size(a, b) == 0.0);
    // symmetry
    a.length = 0.2;
    b.length = 0.5;
    CHECK(nfpz::pz_size(a, b) == Approx(nfpz::pz_size(b, a)).margin(1e-15));
}

TEST_CASE("seed_and_neighbors: no horizontal cracks, no seeds") {
    auto s = with_boundaries(
        {make_crack(0, 0.5, 1.0, 0.3, 60.0), make_crack(1, 1.5, 1.0, 0.3, 120.0)});
    CHECK(nfpz::seed_and_neighbors(s).empty());
}

TEST_CASE("seed_and_neighbors picks the closer crack") {
    // seed tips at x = 0.85 and 1.15; the 60-degree crack sits 0.1 past the
    // right tip, the 120-degree one 0.5 past it
    auto near = make_crack(1, 1.25 + 0.15 * std::cos(M_PI / 3), 1.0 + 0.15 * std::sin(M_PI / 3),
                           0.3, 60.0);
    auto far = make_crack(2, 1.65 - 0.15 * std::cos(M_PI / 3), 1.0 + 0.15 * std::sin(M_PI / 3),
                          0.3, 120.0);
    auto s = with_boundaries({make_crack(0, 1.0, 1.0, 0.3, 0.0), near, far});
    auto pairs = nfpz::seed_and_neighbors(s);
    REQUIRE(pairs.size() == 2);  // one entry per seed tip
    for (const auto& [seed, neighbor] : pairs) {
        CHECK(seed == 0);
        CHECK(neighbor == 1);
    }
}

TEST_CASE("seed_and_neighbors emits at most two entries per seed") {
    auto s = oracle::generate_scenario(5, 20, 0.3, {0.0, 60.0, 120.0});
    int n_seeds = 0;
    for (const auto& c : s.interior_cracks()) n_seeds += c.theta_deg == 0.0;
    auto pairs = nfpz::seed_and_neighbors(s);
    CHECK(pairs.size() <= static_cast<std::size_t>(2 * n_seeds));
    for (const auto& [seed, neighbor] : pairs) CHECK(s.crack_by_id(seed).theta_deg == 0.0);
}

TEST_CASE("coalescence_clusters: PZ overlap forms a zone, clearance does not") {
    // two horizontal 0.3 m cracks, facing tip gap 0.15 <= pz 0.18
    auto close_s = with_boundaries(
        {make_crack(0, 0.5, 1.5, 0.3, 0.0), make_crack(1, 0.95, 1.5, 0.3, 0.0)});
    auto zones = nfpz::coalescence_clusters(close_s);
    REQUIRE(zones.size() == 1);
    CHECK(zones[0].members == std::vector<int>{0, 1});
    CHECK(zones[0].total_length == Approx(0.6).margin(1e-12));
    CHECK(zones[0].y_lo <= 1.5);
    CHECK(zones[0].y_hi >= 1.5);

    // gap 0.25 > 0.18: no link
    auto far_s = with_boundaries(
        {make_crack(0, 0.5, 1.5, 0.3, 0.0), make_crack(1, 1.05, 1.5, 0.3, 0.0)});
    CHECK(nfpz::coalescence_clusters(far_s).empty());
}

TEST_CASE("coalescence_clusters: links chain into a single zone") {
    auto s = with_boundaries({make_crack(0, 0.4, 1.5, 0.3, 0.0),
                              make_crack(1, 0.85, 1.5, 0.3, 0.0),
                              make_crack(2, 1.3, 1.5, 0.3, 0.0)});
    auto zones = nfpz::coalescence_clusters(s);
    REQUIRE(zones.size() == 1);
    CHECK(zones[0].members == std::vector<int>{0, 1, 2});
}

TEST_CASE("zones partition their members") {
    for (unsigned long seed = 40; seed < 48; ++seed) {
        auto s = oracle::generate_scenario(seed, 20, 0.3, {0.0, 60.0, 120.0});
        std::set<int> seen;
        for (const auto& z : nfpz::coalescence_clusters(s)) {
            CHECK(!z.members.empty());
            for (int id : z.members) CHECK(seen.insert(id).second);  // disjoint
            // band contains every member center
            for (int id : z.members) {
                const auto& c = s.crack_by_id(id);
                CHECK(c.center.y >= z.y_lo);
                CHECK(c.center.y <= z.y_hi);
            }
        }
    }
}

TEST_CASE("zones are ranked by merged length descending") {
    for (unsigned long seed = 60; seed < 70; ++seed) {
        auto s = oracle::generate_scenario(seed, 20, 0.3, {0.0, 60.0, 120.0});
        auto zones = nfpz::coalescence_clusters(s);
        for (std::size_t i = 1; i < zones.size(); ++i)
            CHECK(zones[i - 1].total_length >= zones[i].total_length);
    }
}

TEST_CASE("likely_failure_paths without zones falls back to the plain shortest path") {
    auto s = with_boundaries(
        {make_crack(0, 0.5, 1.5, 0.3, 0.0), make_crack(1, 1.5, 1.5, 0.3, 0.0)});
    REQUIRE(nfpz::coalescence_clusters(s).empty());
    auto pred = nfpz::likely_failure_paths(s, {}, 1);
    CHECK(pred.fallback);
    REQUIRE(pred.paths.size() == 1);
    auto tg = nfpz::build_tip_graph(s);
    CHECK(pred.weights[0] == Approx(brute_force_path_weight(tg, {})).margin(1e-12));
    // the two collinear cracks are the obvious corridor; spa agrees on the ids
    CHECK(pred.paths[0].crack_ids == spa::predict(s).path.crack_ids);
}

TEST_CASE("a zone on the shortest corridor appears in the constrained path") {
    auto s = with_boundaries({make_crack(0, 0.7, 1.5, 0.3, 0.0),
                              make_crack(1, 1.15, 1.5, 0.3, 0.0)});
    auto zones = nfpz::coalescence_clusters(s);
    REQUIRE(zones.size() == 1);
    auto pred = nfpz::likely_failure_paths(s, zones, 1);
    REQUIRE(pred.paths.size() == 1);
    CHECK_FALSE(pred.fallback);
    std::set<int> ids(pred.paths[0].crack_ids.begin(), pred.paths[0].crack_ids.end());
    CHECK(ids.count(0) == 1);
    CHECK(ids.count(1) == 1);
}

TEST_CASE("constrained weight never beats the unconstrained optimum") {
    for (unsigned long seed = 80; seed < 90; ++seed) {
        auto s = oracle::generate_scenario(seed, 12, 0.3, {0.0, 60.0, 120.0});
        auto zones = nfpz::coalescence_clusters(s);
        if (zones.empty()) continue;
        auto constrained = nfpz::likely_failure_paths(s, zones, 1);
        auto unconstrained = nfpz::likely_failure_paths(s, {}, 1);
        REQUIRE(!constrained.paths.empty());
        CHECK(constrained.weights[0] >= unconstrained.weights[0] - 1e-12);
        // every returned path intersects the top zone
        std::set<int> zone_ids(zones[0].members.begin(), zones[0].members.end());
        bool touches = false;
        for (int id : constrained.paths[0].crack_ids) touches |= zone_ids.count(id) > 0;
        CHECK(touches);
    }
}

TEST_CASE("constrained paths match exhaustive enumeration on small instances") {
    int compared = 0;
    for (unsigned long seed = 200; compared < 25; ++seed) {
        Scenario s;
        try {
            s = oracle::generate_scenario(seed, 6, 0.3, {0.0, 60.0, 120.0});
        } catch (const std::exception&) {
            continue;
        }
        auto zones = nfpz::coalescence_clusters(s);
        auto tg = nfpz::build_tip_graph(s);
        std::set<int> required;
        if (!zones.empty())
            required.insert(zones[0].members.begin(), zones[0].members.end());
        auto pred = nfpz::likely_failure_paths(s, zones, 1);
        REQUIRE(!pred.paths.empty());
        CHECK(pred.weights[0] == Approx(brute_force_path_weight(tg, required)).margin(1e-12));
        ++compared;
    }
}

TEST_CASE("predict returns at most k distinct ranked paths") {
    auto s = oracle::generate_scenario(91, 20, 0.3, {0.0, 60.0, 120.0});
    auto pred = nfpz::predict(s, 3);
    CHECK(pred.paths.size() <= 3);
    std::set<std::vector<int>> distinct;
    for (const auto& p : pred.paths) CHECK(distinct.insert(p.crack_ids).second);
    for (std::size_t i = 1; i < pred.weights.size(); ++i)
        CHECK(pred.weights[i - 1] <= pred.weights[i]);
}
