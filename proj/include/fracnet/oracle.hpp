#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracnet/core.hpp"
#include "fracnet/graph.hpp"

namespace fracnet::oracle {

struct OracleConfig {
    double dt = 2e-5;              // s, macro step
    int n_steps = 350;             // horizon = dt * n_steps
    double onset_c0 = 0.2825;      // activation calibration (first growth near 0.0015 s)
    double growth_rate = 100.0;    // m^(1/2)/s
    double capture_factor = 0.3;   // kappa; capture radius = kappa * (l1 + l2), initial lengths
    int snapshot_stride = 1;
    unsigned long seed = 0;
    double placement_margin = 0.1;     // m, cracks stay this far inside the sample
    double min_separation = 0.2;       // m, minimum tip-to-body gap between cracks

    double horizon() const { return dt * n_steps; }

    void validate() const {
        if (dt <= 0 || n_steps <= 0 || capture_factor <= 0)
            throw std::invalid_argument("invalid oracle config");
    }
};

struct CrackSnap {
    int id = 0;
    Vec2 tip_a, tip_b;          // current positions of the two advancing ends
    double length = 0.0;        // m, total polyline length
    double x_lo = 0.0, x_hi = 0.0;  // horizontal extent of the crack body
};

struct Snapshot {
    double t = 0.0;
    std::vector<CrackSnap> cracks;
};

struct CoalescenceEvent {
    int a = 0;
    int b = 0;
    double t = 0.0;
};

struct SimulationTrace {
    long scenario_seed = 0;
    double horizon = 0.0;
    std::vector<Snapshot> snapshots;
    std::vector<CoalescenceEvent> events;
    std::optional<double> failure_time;
    std::optional<FailurePath> failure_path;
};

/// Accumulated damage: total new crack length at each snapshot time.
inline std::vector<std::pair<double, double>> accumulated_damage(const SimulationTrace& trace) {
    std::vector<std::pair<double, double>> out;
    if (trace.snapshots.empty()) return out;
    std::vector<double> initial;
    for (const auto& c : trace.snapshots.front().cracks) initial.push_back(c.length);
    for (const auto& snap : trace.snapshots) {
        double total = 0.0;
        for (std::size_t i = 0; i < snap.cracks.size(); ++i)
            total += snap.cracks[i].length - initial[i];
        out.push_back({snap.t, total});
    }
    return out;
}

inline Scenario generate_scenario(unsigned long seed, int n_cracks, double crack_length,
                                  const std::vector<double>& orientations,
                                  const SampleGeometry& geometry = {},
                                  const MaterialParams& material = {},
                                  double margin = 0.1, double min_separation = 0.05) {
    if (n_cracks < 0) throw std::invalid_argument("n_cracks must be >= 0");
    if (orientations.empty()) throw std::invalid_argument("orientation set empty");
    geometry.validate();
    material.validate();

    Scenario s;
    s.seed = static_cast<long>(seed);
    s.geometry = geometry;
    s.material = material;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, geometry.w);
    std::uniform_real_distribution<double> uy(0.0, geometry.h);
    std::uniform_int_distribution<std::size_t> uo(0, orientations.size() - 1);

    auto inside = [&](const Vec2& p) {
        return p.x >= margin && p.x <= geometry.w - margin && p.y >= margin &&
               p.y <= geometry.h - margin;
    };

    for (int i = 0; i < n_cracks; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000; ++attempt) {
            Crack c;
            c.id = i;
            c.center = {ux(rng), uy(rng)};
            c.length = crack_length;
            c.theta_deg = orientations[uo(rng)];
            auto [ta, tb] = tip_positions(c);
            if (!inside(ta) || !inside(tb)) continue;
            bool ok = true;
            for (const auto& other : s.cracks) {
                auto [oa, ob] = tip_positions(other);
                const double gap =
                    std::min({tip_to_body_distance(ta, other, geometry),
                              tip_to_body_distance(tb, other, geometry),
                              tip_to_body_distance(oa, c, geometry),
                              tip_to_body_distance(ob, c, geometry)});
                if (gap < min_separation) { ok = false; break; }
            }
            if (!ok) continue;
            s.cracks.push_back(c);
            placed = true;
            break;
        }
        if (!placed) throw std::runtime_error("cannot place cracks");
    }

    Crack left;
    left.id = n_cracks;
    left.center = {0.0, geometry.h / 2};
    left.theta_deg = 90.0;
    left.kind = CrackKind::BoundaryLeft;
    Crack right = left;
    right.id = n_cracks + 1;
    right.center.x = geometry.w;
    right.kind = CrackKind::BoundaryRight;
    s.cracks.push_back(left);
    s.cracks.push_back(right);
    return s;
}

namespace detail {

struct TipState {
    Vec2 pos;
    bool active = false;   // past the activation threshold
    bool alive = true;     // still advancing (false once captured by an edge)
    int carrier = -1;      // last crack this tip merged with (serial chaining)
};

struct CrackState {
    std::vector<Vec2> body;  // polyline; tip A extends the front, tip B the back
    TipState tips[2];
    double theta_deg = 0.0;
    double length = 0.0;
    double init_length = 0.0;  // capture radii stay tied to the seeded flaw size
    Vec2 center;

    double x_lo() const {
        double lo = body.front().x;
        for (const auto& p : body) lo = std::min(lo, p.x);
        return lo;
    }
    double x_hi() const {
        double hi = body.front().x;
        for (const auto& p : body) hi = std::max(hi, p.x);
        return hi;
    }

    double body_distance(const Vec2& p) const {
        double best = distance(p, body.front());
        for (std::size_t i = 0; i + 1 < body.size(); ++i)
            best = std::min(best, point_segment_distance(p, body[i], body[i + 1]));
        return best;
    }

    Vec2 body_closest(const Vec2& p) const {
        Vec2 best = body.front();
        double bd = distance(p, best);
        for (std::size_t i = 0; i + 1 < body.size(); ++i) {
            Vec2 q = closest_point_on_segment(p, body[i], body[i + 1]);
            const double d = distance(p, q);
            if (d < bd) { bd = d; best = q; }
        }
        return best;
    }
};

}  // namespace detail

/// Rule-based quasi-static Mode I reference evolution of a crack network.
/// Pure function of (scenario, config); stands in for the high-fidelity code
/// as the source of training labels and validation ground truth.
inline SimulationTrace run_reference(const Scenario& scenario, const OracleConfig& config) {
    config.validate();
    constexpr double kRefLength = 0.3;  // m, activation reference length

    const auto interior = scenario.interior_cracks();
    const int n = static_cast<int>(interior.size());
    const int left_id = n, right_id = n + 1;  // component slots for the lateral edges
    const auto& geom = scenario.geometry;
    const auto& mat = scenario.material;

    std::vector<detail::CrackState> cracks(n);
    for (int i = 0; i < n; ++i) {
        auto [a, b] = tip_positions(interior[i]);
        cracks[i].body = {a, b};
        cracks[i].tips[0].pos = a;
        cracks[i].tips[1].pos = b;
        cracks[i].tips[0].carrier = i;
        cracks[i].tips[1].carrier = i;
        cracks[i].theta_deg = interior[i].theta_deg;
        cracks[i].length = interior[i].length;
        cracks[i].init_length = interior[i].length;
        cracks[i].center = interior[i].center;
    }

    DisjointSet components(n + 2);
    std::vector<std::vector<bool>> paired(n + 2, std::vector<bool>(n + 2, false));

    SimulationTrace trace;
    trace.scenario_seed = scenario.seed;
    trace.horizon = config.horizon();

    auto record_snapshot = [&](double t) {
        Snapshot snap;
        snap.t = t;
        for (int i = 0; i < n; ++i) {
            const auto& c = cracks[i];
            snap.cracks.push_back({interior[i].id, c.tips[0].pos, c.tips[1].pos,
                                   c.length, c.x_lo(), c.x_hi()});
        }
        trace.snapshots.push_back(std::move(snap));
    };

    auto slot_id = [&](int slot) {
        if (slot < n) return interior[slot].id;
        for (const auto& c : scenario.cracks) {
            if (slot == left_id && c.kind == CrackKind::BoundaryLeft) return c.id;
            if (slot == right_id && c.kind == CrackKind::BoundaryRight) return c.id;
        }
        return slot;  // scenario without boundary pseudo-cracks
    };

    auto record_event = [&](int i, int j, double t) {
        if (paired[i][j]) return;
        paired[i][j] = paired[j][i] = true;
        const int a = slot_id(i), b = slot_id(j);
        trace.events.push_back({std::min(a, b), std::max(a, b), t});
        components.unite(i, j);
    };

    auto check_spanning = [&](double t) {
        if (trace.failure_time || !components.connected(left_id, right_id)) return;
        // Coalesced tips are snapped onto the partner body (or the edge), so
        // the x-intervals of an edge-to-edge component cover [0, w].
        std::vector<Interval> intervals{{0.0, 0.0}, {geom.w, geom.w}};
        const int root = components.find(left_id);
        for (int i = 0; i < n; ++i)
            if (components.find(i) == root)
                intervals.push_back({cracks[i].x_lo(), cracks[i].x_hi()});
        if (!spans_width(intervals, geom)) return;

        trace.failure_time = t;
        // Canonical event assembly: replay the recorded events sorted by
        // (t, a, b), keeping uniting links as forest edges; the failure path
        // is the tree path between the edge nodes.  Models assembling their
        // own predicted events use the same convention.
        std::map<int, int> id_slot;
        for (int i = 0; i < n; ++i) id_slot[interior[i].id] = i;
        id_slot[slot_id(left_id)] = left_id;
        id_slot[slot_id(right_id)] = right_id;
        auto evs = trace.events;
        std::sort(evs.begin(), evs.end(),
                  [](const CoalescenceEvent& a, const CoalescenceEvent& b) {
                      return std::tie(a.t, a.a, a.b) < std::tie(b.t, b.a, b.b);
                  });
        DisjointSet replay(n + 2);
        std::vector<std::vector<int>> forest(n + 2);
        for (const auto& e : evs) {
            const int a = id_slot.at(e.a), b = id_slot.at(e.b);
            if (replay.connected(a, b)) continue;
            replay.unite(a, b);
            forest[a].push_back(b);
            forest[b].push_back(a);
            if (replay.connected(left_id, right_id)) break;
        }
        std::vector<int> prev(n + 2, -1);
        std::vector<int> queue{left_id};
        prev[left_id] = left_id;
        for (std::size_t q = 0; q < queue.size() && prev[right_id] < 0; ++q)
            for (int nb : forest[queue[q]])
                if (prev[nb] < 0) {
                    prev[nb] = queue[q];
                    queue.push_back(nb);
                }
        FailurePath path;
        path.spanning = true;
        std::vector<std::pair<double, int>> members;
        for (int u = prev[right_id]; u != left_id && u >= 0; u = prev[u])
            if (u < n) members.push_back({interior[u].center.x, interior[u].id});
        std::sort(members.begin(), members.end());
        for (auto& [x, id] : members) path.crack_ids.push_back(id);
        trace.failure_path = path;
    };

    record_snapshot(0.0);
    check_spanning(0.0);

    // The run continues past a declared failure: later coalescences still
    // label crack pairs, mirroring a high-fidelity run that plays out fully.
    for (int step = 1; step <= config.n_steps; ++step) {
        const double t = step * config.dt;
        const double sigma = mat.E * mat.v * t / geom.h;

        for (int i = 0; i < n; ++i) {
            auto& c = cracks[i];
            const double cos2 = std::pow(std::cos(deg2rad(c.theta_deg)), 2);
            // Both tips grow from the length at the start of the step; updating
            // in between would let the second tip outrun the first.
            const double step_length = c.length;
            for (int e = 0; e < 2; ++e) {
                auto& tip = c.tips[e];
                if (!tip.alive) continue;
                if (!tip.active) {
                    if (sigma * cos2 * std::sqrt(step_length / kRefLength) >=
                        config.onset_c0 * mat.sigma_u)
                        tip.active = true;
                    else
                        continue;
                }

                // Steering: nearest attractor tip within the capture radius,
                // otherwise horizontally away from the crack center. Cracks
                // already merged into this component no longer attract.
                Vec2 dir{tip.pos.x >= c.center.x ? 1.0 : -1.0, 0.0};
                int target = -1;
                double best_d = std::numeric_limits<double>::infinity();
                for (int j = 0; j < n; ++j) {
                    if (j == i || components.connected(i, j)) continue;
                    for (int f = 0; f < 2; ++f) {
                        const double d = distance(tip.pos, cracks[j].tips[f].pos);
                        if (d < best_d - 1e-15 ||
                            (std::abs(d - best_d) <= 1e-15 && j < target)) {
                            best_d = d;
                            target = j;
                        }
                    }
                }
                if (target >= 0 &&
                    best_d <= config.capture_factor *
                                  (c.init_length + cracks[target].init_length)) {
                    Vec2 v = cracks[target].body_closest(tip.pos) - tip.pos;
                    if (v.norm() > 0) dir = v.normalized();
                }

                const double theta_eff = std::atan2(dir.y, dir.x);
                const double dl = config.growth_rate * std::pow(std::cos(theta_eff), 2) *
                                  std::sqrt(step_length) * config.dt;
                if (dl <= 0) continue;

                Vec2 next = tip.pos + dir * dl;
                next.y = std::clamp(next.y, 0.0, geom.h);
                tip.pos = next;
                if (e == 0) c.body.insert(c.body.begin(), next);
                else c.body.push_back(next);
                c.length += dl;

                // Boundary capture: the lateral edges act as zero-length
                // crack bodies; a captured tip snaps onto the edge.  The
                // junction is attributed to the tip's carrier — the last
                // crack it merged with — so serial sweeps record chains.
                if (tip.pos.x <= config.capture_factor * c.init_length) {
                    Vec2 snap_pt{0.0, tip.pos.y};
                    c.length += tip.pos.x;
                    if (e == 0) c.body.insert(c.body.begin(), snap_pt);
                    else c.body.push_back(snap_pt);
                    tip.pos = snap_pt;
                    tip.alive = false;
                    if (!components.connected(i, left_id))
                        record_event(tip.carrier, left_id, t);
                    continue;
                }
                if (geom.w - tip.pos.x <= config.capture_factor * c.init_length) {
                    Vec2 snap_pt{geom.w, tip.pos.y};
                    c.length += geom.w - tip.pos.x;
                    if (e == 0) c.body.insert(c.body.begin(), snap_pt);
                    else c.body.push_back(snap_pt);
                    tip.pos = snap_pt;
                    tip.alive = false;
                    if (!components.connected(i, right_id))
                        record_event(tip.carrier, right_id, t);
                    continue;
                }

                // Coalescence: tip within capture radius of another body.
                // Junctions with a new component snap the tip onto the
                // partner and pass the carrier on; touches within the tip's
                // own component still record the pair as coalesced.
                for (int j = 0; j < n; ++j) {
                    if (j == i || j == tip.carrier || paired[tip.carrier][j]) continue;
                    const double d = cracks[j].body_distance(tip.pos);
                    if (d > config.capture_factor *
                                (c.init_length + cracks[j].init_length))
                        continue;
                    if (!components.connected(i, j)) {
                        Vec2 snap_pt = cracks[j].body_closest(tip.pos);
                        if (e == 0) c.body.insert(c.body.begin(), snap_pt);
                        else c.body.push_back(snap_pt);
                        c.length += distance(tip.pos, snap_pt);
                        tip.pos = snap_pt;
                        record_event(tip.carrier, j, t);
                        tip.carrier = j;
                    } else {
                        record_event(tip.carrier, j, t);
                    }
                    break;
                }
            }
        }

        const bool had_failed = trace.failure_time.has_value();
        check_spanning(t);
        const bool just_failed = !had_failed && trace.failure_time.has_value();
        if (step % config.snapshot_stride == 0 || just_failed || step == config.n_steps)
            record_snapshot(t);
    }

    std::sort(trace.events.begin(), trace.events.end(),
              [](const CoalescenceEvent& a, const CoalescenceEvent& b) {
                  return a.t < b.t || (a.t == b.t && std::tie(a.a, a.b) < std::tie(b.a, b.b));
              });
    return trace;
}

// ---- trace serialization (JSON lines) ----

inline std::string trace_to_jsonl(const SimulationTrace& trace) {
    std::ostringstream os;
    json header = {{"type", "header"},
                   {"scenario_seed", trace.scenario_seed},
                   {"horizon", trace.horizon}};
    if (trace.failure_time) header["failure_time"] = *trace.failure_time;
    if (trace.failure_path) {
        header["failure_path"] = trace.failure_path->crack_ids;
        header["spanning"] = trace.failure_path->spanning;
    }
    os << header.dump() << '\n';
    for (const auto& e : trace.events)
        os << json{{"type", "event"}, {"a", e.a}, {"b", e.b}, {"t", e.t}}.dump() << '\n';
    for (const auto& s : trace.snapshots) {
        json cracks = json::array();
        for (const auto& c : s.cracks)
            cracks.push_back({{"id", c.id},
                              {"ax", c.tip_a.x}, {"ay", c.tip_a.y},
                              {"bx", c.tip_b.x}, {"by", c.tip_b.y},
                              {"len", c.length},
                              {"xlo", c.x_lo}, {"xhi", c.x_hi}});
        os << json{{"type", "snapshot"}, {"t", s.t}, {"cracks", cracks}}.dump() << '\n';
    }
    return os.str();
}

inline SimulationTrace trace_from_jsonl(const std::string& text) {
    SimulationTrace trace;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "header") {
            trace.scenario_seed = j.at("scenario_seed").get<long>();
            trace.horizon = j.at("horizon").get<double>();
            if (j.contains("failure_time"))
                trace.failure_time = j["failure_time"].get<double>();
            if (j.contains("failure_path")) {
                FailurePath p;
                p.crack_ids = j["failure_path"].get<std::vector<int>>();
                p.spanning = j.value("spanning", true);
                trace.failure_path = p;
            }
        } else if (type == "event") {
            trace.events.push_back({j.at("a").get<int>(), j.at("b").get<int>(),
                                    j.at("t").get<double>()});
        } else if (type == "snapshot") {
            Snapshot s;
            s.t = j.at("t").get<double>();
            for (const auto& jc : j.at("cracks"))
                s.cracks.push_back({jc.at("id").get<int>(),
                                    {jc.at("ax").get<double>(), jc.at("ay").get<double>()},
                                    {jc.at("bx").get<double>(), jc.at("by").get<double>()},
                                    jc.at("len").get<double>(),
                                    jc.at("xlo").get<double>(), jc.at("xhi").get<double>()});
            trace.snapshots.push_back(std::move(s));
        }
    }
    return trace;
}

}  // namespace fracnet::oracle
