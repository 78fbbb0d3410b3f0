#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracnet/geometry.hpp"

namespace fracnet {

using json = nlohmann::json;

struct MaterialParams {
    double rho = 2500.0;        // kg/m^3
    double E = 22.6e9;          // Pa
    double G = 9.1e9;           // Pa
    double nu = 0.24166;        // dimensionless
    double sigma_u = 4.0e6;     // Pa
    double v = 0.1;             // m/s, applied velocity at y = h

    void validate() const {
        if (rho <= 0 || E <= 0 || G <= 0 || sigma_u <= 0 || v <= 0)
            throw std::invalid_argument("material parameters must be strictly positive");
        if (nu <= 0 || nu >= 0.5)
            throw std::invalid_argument("poisson ratio must be in (0, 0.5)");
    }
};

struct SampleGeometry {
    double w = 2.0;  // m, x-extent; failure spans this direction
    double h = 3.0;  // m, y-extent; load applied at y = h

    void validate() const {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("sample dimensions must be positive");
    }
};

enum class CrackKind { Interior, BoundaryLeft, BoundaryRight };

struct Crack {
    int id = 0;
    Vec2 center;
    double length = 0.0;      // m, full tip-to-tip length
    double theta_deg = 0.0;   // [0, 180) from the +x axis
    CrackKind kind = CrackKind::Interior;

    bool interior() const { return kind == CrackKind::Interior; }
};

struct Scenario {
    SampleGeometry geometry;
    MaterialParams material;
    std::vector<Crack> cracks;
    long seed = 0;

    std::vector<Crack> interior_cracks() const {
        std::vector<Crack> out;
        for (const auto& c : cracks)
            if (c.interior()) out.push_back(c);
        return out;
    }

    const Crack& crack_by_id(int id) const {
        for (const auto& c : cracks)
            if (c.id == id) return c;
        throw std::out_of_range("no crack with id " + std::to_string(id));
    }
};

struct GraphNode {
    int id = 0;
    Vec2 pos;
    int payload = -1;  // crack id or tip id; -1 for boundary nodes
};

struct GraphEdge {
    int a = 0;
    int b = 0;
    double weight = 0.0;
};

/// Weighted undirected graph over 2D-positioned nodes.
struct CrackGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;

    void add_edge(int a, int b, double weight) {
        if (a == b) throw std::invalid_argument("self-loop");
        if (weight < 0) throw std::invalid_argument("negative edge weight");
        edges.push_back({a, b, weight});
    }

    std::vector<std::vector<std::pair<int, double>>> adjacency() const {
        std::vector<std::vector<std::pair<int, double>>> adj(nodes.size());
        for (const auto& e : edges) {
            adj[e.a].push_back({e.b, e.weight});
            adj[e.b].push_back({e.a, e.weight});
        }
        return adj;
    }
};

struct FailurePath {
    std::vector<int> crack_ids;  // interior cracks, left to right
    bool spanning = false;
};

/// Tip endpoints of an interior crack, center +- (l/2)(cos t, sin t).
/// First tip has the smaller x (tie: smaller y).
inline std::pair<Vec2, Vec2> tip_positions(const Crack& crack) {
    if (!crack.interior()) throw std::invalid_argument("no tips");
    const double t = deg2rad(crack.theta_deg);
    const Vec2 half{0.5 * crack.length * std::cos(t), 0.5 * crack.length * std::sin(t)};
    Vec2 a = crack.center - half;
    Vec2 b = crack.center + half;
    if (a.x > b.x || (a.x == b.x && a.y > b.y)) std::swap(a, b);
    return {a, b};
}

/// Shortest Euclidean distance from a tip to the body of a target crack.
/// Boundary targets measure horizontal distance to the lateral edge.
inline double tip_to_body_distance(const Vec2& tip, const Crack& target,
                                   const SampleGeometry& geometry) {
    switch (target.kind) {
        case CrackKind::BoundaryLeft:
            return std::abs(tip.x);
        case CrackKind::BoundaryRight:
            return std::abs(tip.x - geometry.w);
        case CrackKind::Interior: {
            auto [a, b] = tip_positions(target);
            return point_segment_distance(tip, a, b);
        }
    }
    throw std::logic_error("unknown crack kind");
}

/// Horizontal projection of an interior crack onto the x axis.
inline Interval horizontal_projection(const Crack& crack) {
    if (!crack.interior()) throw std::invalid_argument("no projection for boundary crack");
    const double half = 0.5 * crack.length * std::abs(std::cos(deg2rad(crack.theta_deg)));
    return {crack.center.x - half, crack.center.x + half};
}

/// True iff the merged intervals cover [0, w].
inline bool spans_width(const std::vector<Interval>& intervals, const SampleGeometry& geometry) {
    auto merged = merge_intervals(intervals);
    for (const auto& iv : merged)
        if (iv.lo <= 0.0 && iv.hi >= geometry.w) return true;
    return false;
}

// ---- serialization (shared scenario schema) ----

inline json to_json(const Scenario& s) {
    json cracks = json::array();
    for (const auto& c : s.cracks) {
        json jc = {{"id", c.id},
                   {"cx", c.center.x},
                   {"cy", c.center.y},
                   {"length", c.length},
                   {"theta_deg", c.theta_deg}};
        if (c.kind == CrackKind::BoundaryLeft) jc["kind"] = "boundary_left";
        else if (c.kind == CrackKind::BoundaryRight) jc["kind"] = "boundary_right";
        cracks.push_back(jc);
    }
    return json{{"seed", s.seed},
                {"geometry", {{"w", s.geometry.w}, {"h", s.geometry.h}}},
                {"material",
                 {{"rho", s.material.rho},
                  {"E", s.material.E},
                  {"G", s.material.G},
                  {"nu", s.material.nu},
                  {"sigma_u", s.material.sigma_u},
                  {"v", s.material.v}}},
                {"cracks", cracks}};
}

inline Scenario scenario_from_json(const json& j) {
    Scenario s;
    s.seed = j.at("seed").get<long>();
    s.geometry.w = j.at("geometry").at("w").get<double>();
    s.geometry.h = j.at("geometry").at("h").get<double>();
    const auto& m = j.at("material");
    s.material.rho = m.at("rho").get<double>();
    s.material.E = m.at("E").get<double>();
    s.material.G = m.at("G").get<double>();
    s.material.nu = m.at("nu").get<double>();
    s.material.sigma_u = m.at("sigma_u").get<double>();
    s.material.v = m.at("v").get<double>();
    for (const auto& jc : j.at("cracks")) {
        Crack c;
        c.id = jc.at("id").get<int>();
        c.center = {jc.at("cx").get<double>(), jc.at("cy").get<double>()};
        c.length = jc.at("length").get<double>();
        c.theta_deg = jc.at("theta_deg").get<double>();
        if (jc.contains("kind")) {
            const std::string k = jc["kind"].get<std::string>();
            if (k == "boundary_left") c.kind = CrackKind::BoundaryLeft;
            else if (k == "boundary_right") c.kind = CrackKind::BoundaryRight;
        }
        s.cracks.push_back(c);
    }
    s.geometry.validate();
    s.material.validate();
    return s;
}

}  // namespace fracnet
