#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "fracnet/core.hpp"
#include "fracnet/graph.hpp"
#include "fracnet/ml/net.hpp"
#include "fracnet/oracle.hpp"

namespace fracnet::mcpic {

constexpr int kFeatureDim = 9;

struct PairFeatures {
    int id1 = 0, id2 = 0;  // canonical: id1 < id2
    double a1 = 0, a2 = 0;        // m
    double th1 = 0, th2 = 0;      // degrees
    double dx = 0, dy = 0;        // m, center-to-center axis distances
    double k1 = 0, k2 = 0;        // Pa sqrt(m)
    double db = 0;                // m, minimum distance to a lateral boundary

    std::vector<double> vector() const { return {a1, a2, th1, th2, dx, dy, k1, k2, db}; }
};

struct PairLabel {
    bool coalesced = false;
    double t_coal = 0.0;  // s, defined only when coalesced
};

/// Mode I stress intensity proxy; zero for load-parallel and boundary cracks.
inline double stress_intensity(const Crack& crack, const MaterialParams& material) {
    if (!crack.interior()) return 0.0;
    const double c = std::cos(deg2rad(crack.theta_deg));
    return material.sigma_u * c * c * std::sqrt(kPi * crack.length / 2.0);
}

namespace detail {

inline double crack_boundary_distance(const Crack& c, const SampleGeometry& geom, bool left) {
    auto [t0, t1] = tip_positions(c);
    Crack boundary;
    boundary.kind = left ? CrackKind::BoundaryLeft : CrackKind::BoundaryRight;
    return std::min(tip_to_body_distance(t0, boundary, geom),
                    tip_to_body_distance(t1, boundary, geom));
}

}  // namespace detail

/// All unordered interior pairs plus one pair per (interior crack, boundary
/// pseudo-crack). Set include_boundary = false for the interior-only count.
inline std::vector<PairFeatures> enumerate_pairs(const Scenario& scenario,
                                                 bool include_boundary = true) {
    const auto interior = scenario.interior_cracks();
    const auto& geom = scenario.geometry;
    const auto& mat = scenario.material;

    auto features = [&](const Crack& c1, const Crack& c2) {
        PairFeatures f;
        f.id1 = c1.id;
        f.id2 = c2.id;
        f.a1 = c1.length;
        f.a2 = c2.length;
        f.th1 = c1.theta_deg;
        f.th2 = c2.theta_deg;
        f.dx = std::abs(c1.center.x - c2.center.x);
        f.dy = std::abs(c1.center.y - c2.center.y);
        f.k1 = stress_intensity(c1, mat);
        f.k2 = stress_intensity(c2, mat);
        return f;
    };

    std::vector<PairFeatures> out;
    for (std::size_t i = 0; i < interior.size(); ++i) {
        for (std::size_t j = i + 1; j < interior.size(); ++j) {
            const Crack& c1 = interior[i].id < interior[j].id ? interior[i] : interior[j];
            const Crack& c2 = interior[i].id < interior[j].id ? interior[j] : interior[i];
            PairFeatures f = features(c1, c2);
            f.db = std::min({detail::crack_boundary_distance(c1, geom, true),
                             detail::crack_boundary_distance(c1, geom, false),
                             detail::crack_boundary_distance(c2, geom, true),
                             detail::crack_boundary_distance(c2, geom, false)});
            out.push_back(f);
        }
    }
    if (include_boundary) {
        for (const auto& b : scenario.cracks) {
            if (b.interior()) continue;
            const bool left = b.kind == CrackKind::BoundaryLeft;
            for (const auto& c : interior) {
                const Crack& c1 = c.id < b.id ? c : b;
                const Crack& c2 = c.id < b.id ? b : c;
                PairFeatures f = features(c1, c2);
                f.db = detail::crack_boundary_distance(c, geom, left);
                out.push_back(f);
            }
        }
    }
    return out;
}

/// Labels from the oracle trace: a pair coalesces iff the trace holds an
/// event for it, with that event's time.  Boundary pairs are labeled by the
/// boundary-capture event of that crack specifically; spreading a single
/// touch over the whole fracture component would hand every member an
/// identical timestamp, which carries no signal a pairwise model could
/// learn and makes the assembled path depend on tie-breaking alone.
inline std::vector<PairLabel> label_pairs(const Scenario& scenario,
                                          const std::vector<PairFeatures>& pairs,
                                          const oracle::SimulationTrace& trace) {
    if (trace.scenario_seed != scenario.seed)
        throw std::invalid_argument("pair/scenario mismatch");

    std::map<std::pair<int, int>, double> event_time;
    for (const auto& e : trace.events) {
        const auto a = std::minmax(e.a, e.b);
        event_time.emplace(std::make_pair(a.first, a.second), e.t);
    }

    std::vector<PairLabel> labels;
    labels.reserve(pairs.size());
    for (const auto& p : pairs) {
        PairLabel l;
        auto it = event_time.find({std::min(p.id1, p.id2), std::max(p.id1, p.id2)});
        if (it != event_time.end()) l = {true, it->second};
        labels.push_back(l);
    }
    return labels;
}

struct McpicConfig {
    ml::TrainSchedule clf_schedule{0.05, 0.9, 32, 300, 0.1, 25, 11};
    ml::TrainSchedule reg_schedule{0.05, 0.9, 32, 300, 0.1, 25, 12};
    double holdout_fraction = 0.2;  // for choosing the decision threshold
    unsigned long seed = 7;
};

struct McpicModel {
    ml::FeedforwardNet classifier;  // logistic output
    ml::FeedforwardNet regressor;   // identity output
    double tau = 0.5;
    std::vector<double> feat_mean = std::vector<double>(kFeatureDim, 0.0);
    std::vector<double> feat_std = std::vector<double>(kFeatureDim, 1.0);
    double t_mean = 0.0, t_std = 1.0;
    double horizon = 0.0;

    std::vector<double> standardize(const std::vector<double>& raw) const {
        std::vector<double> z(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            z[i] = (raw[i] - feat_mean[i]) / feat_std[i];
        return z;
    }

    double classify(const PairFeatures& f) const {
        return classifier.forward(standardize(f.vector()));
    }

    double predict_time(const PairFeatures& f) const {
        const double t = regressor.forward(standardize(f.vector())) * t_std + t_mean;
        return std::clamp(t, 1e-12, horizon);
    }

    json to_json() const {
        return {{"format", "fracnet-mcpic-v1"},
                {"classifier", classifier.to_json()},
                {"regressor", regressor.to_json()},
                {"tau", tau},
                {"feat_mean", feat_mean},
                {"feat_std", feat_std},
                {"t_mean", t_mean},
                {"t_std", t_std},
                {"horizon", horizon}};
    }

    static McpicModel from_json(const json& j) {
        McpicModel m;
        m.classifier = ml::FeedforwardNet::from_json(j.at("classifier"));
        m.regressor = ml::FeedforwardNet::from_json(j.at("regressor"));
        m.tau = j.at("tau").get<double>();
        m.feat_mean = j.at("feat_mean").get<std::vector<double>>();
        m.feat_std = j.at("feat_std").get<std::vector<double>>();
        m.t_mean = j.at("t_mean").get<double>();
        m.t_std = j.at("t_std").get<double>();
        m.horizon = j.at("horizon").get<double>();
        return m;
    }
};

inline McpicModel train_mcpic(
    const std::vector<std::pair<Scenario, oracle::SimulationTrace>>& dataset,
    const McpicConfig& cfg = {}) {
    std::vector<std::vector<double>> feats;
    std::vector<PairLabel> labels;
    double horizon = 0.0;
    for (const auto& [scenario, trace] : dataset) {
        auto pairs = enumerate_pairs(scenario);
        auto pl = label_pairs(scenario, pairs, trace);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            feats.push_back(pairs[i].vector());
            labels.push_back(pl[i]);
        }
        horizon = std::max(horizon, trace.horizon);
    }

    std::size_t n_pos = 0;
    for (const auto& l : labels) n_pos += l.coalesced ? 1 : 0;
    if (n_pos == 0 || n_pos == labels.size())
        throw std::invalid_argument("degenerate labels");

    McpicModel model;
    model.horizon = horizon;

    for (int c = 0; c < kFeatureDim; ++c) {
        double s = 0;
        for (const auto& f : feats) s += f[c];
        model.feat_mean[c] = s / feats.size();
        double v = 0;
        for (const auto& f : feats) v += std::pow(f[c] - model.feat_mean[c], 2);
        model.feat_std[c] = v > 0 ? std::sqrt(v / feats.size()) : 1.0;
    }

    std::vector<std::pair<std::vector<double>, double>> clf_rows;
    std::vector<std::pair<std::vector<double>, double>> reg_rows_raw;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        auto z = model.standardize(feats[i]);
        clf_rows.push_back({z, labels[i].coalesced ? 1.0 : 0.0});
        if (labels[i].coalesced) reg_rows_raw.push_back({z, labels[i].t_coal});
    }

    double ts = 0;
    for (const auto& [z, t] : reg_rows_raw) ts += t;
    model.t_mean = ts / reg_rows_raw.size();
    double tv = 0;
    for (const auto& [z, t] : reg_rows_raw) tv += std::pow(t - model.t_mean, 2);
    model.t_std = tv > 0 ? std::sqrt(tv / reg_rows_raw.size()) : 1.0;
    std::vector<std::pair<std::vector<double>, double>> reg_rows;
    for (const auto& [z, t] : reg_rows_raw)
        reg_rows.push_back({z, (t - model.t_mean) / model.t_std});

    // threshold holdout split (deterministic)
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(clf_rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_hold = static_cast<std::size_t>(cfg.holdout_fraction * order.size());
    std::vector<std::pair<std::vector<double>, double>> clf_train, clf_hold;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_hold ? clf_hold : clf_train).push_back(clf_rows[order[i]]);

    model.classifier = ml::FeedforwardNet(kFeatureDim, ml::OutputKind::Logistic,
                                          cfg.clf_schedule.seed);
    model.classifier.train(clf_train, ml::LossKind::CrossEntropy, cfg.clf_schedule);

    model.regressor = ml::FeedforwardNet(kFeatureDim, ml::OutputKind::Identity,
                                         cfg.reg_schedule.seed);
    model.regressor.train(reg_rows, ml::LossKind::Squared, cfg.reg_schedule);

    // pick tau maximizing balanced accuracy on the held-out fold
    double best_tau = 0.5, best_bal = -1.0;
    const auto& fold = clf_hold.empty() ? clf_train : clf_hold;
    std::vector<double> scores;
    for (const auto& [z, y] : fold) scores.push_back(model.classifier.forward(z));
    for (int k = 5; k <= 95; ++k) {
        const double tau = k / 100.0;
        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < fold.size(); ++i) {
            const bool pred = scores[i] >= tau;
            const bool truth = fold[i].second > 0.5;
            if (pred && truth) ++tp;
            else if (pred) ++fp;
            else if (truth) ++fn;
            else ++tn;
        }
        const double sens = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double spec = tn + fp > 0 ? tn / (tn + fp) : 0.0;
        const double bal = 0.5 * (sens + spec);
        if (bal > best_bal) {
            best_bal = bal;
            best_tau = tau;
        }
    }
    model.tau = best_tau;
    return model;
}

struct McpicPrediction {
    std::optional<double> failure_time;
    FailurePath path;
    std::vector<oracle::CoalescenceEvent> events;  // accepted pair events
};

/// Union-find assembly over a set of pair events: process in time order
/// until the two boundary components join; the failure path is the interior
/// portion of the forest path between the boundaries.
inline McpicPrediction assemble_events(const Scenario& scenario,
                                       std::vector<oracle::CoalescenceEvent> events) {
    int left_id = -1, right_id = -1;
    std::map<int, int> slot;
    for (const auto& c : scenario.cracks) {
        slot[c.id] = static_cast<int>(slot.size());
        if (c.kind == CrackKind::BoundaryLeft) left_id = c.id;
        if (c.kind == CrackKind::BoundaryRight) right_id = c.id;
    }

    McpicPrediction out;
    out.events = std::move(events);
    std::sort(out.events.begin(), out.events.end(),
              [](const auto& a, const auto& b) {
                  return a.t < b.t || (a.t == b.t && std::tie(a.a, a.b) < std::tie(b.a, b.b));
              });

    if (left_id < 0 || right_id < 0) return out;

    DisjointSet dsu(slot.size());
    std::vector<std::vector<int>> forest(slot.size());
    for (const auto& e : out.events) {
        const int sa = slot.at(e.a), sb = slot.at(e.b);
        if (dsu.unite(sa, sb)) {
            forest[sa].push_back(sb);
            forest[sb].push_back(sa);
        }
        if (dsu.connected(slot.at(left_id), slot.at(right_id))) {
            out.failure_time = e.t;
            break;
        }
    }
    if (!out.failure_time) return out;

    // interior cracks on the forest path between the two boundary nodes
    const int src = slot.at(left_id), dst = slot.at(right_id);
    std::vector<int> parent(slot.size(), -1);
    std::queue<int> q;
    q.push(src);
    parent[src] = src;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == dst) break;
        for (int v : forest[u])
            if (parent[v] < 0) {
                parent[v] = u;
                q.push(v);
            }
    }
    std::vector<int> path_ids;
    for (int u = dst; u != src; u = parent[u]) {
        for (const auto& [id, s] : slot)
            if (s == u && id != left_id && id != right_id) path_ids.push_back(id);
    }
    std::sort(path_ids.begin(), path_ids.end(), [&](int i, int j) {
        return scenario.crack_by_id(i).center.x < scenario.crack_by_id(j).center.x;
    });
    out.path.crack_ids = path_ids;
    out.path.spanning = true;
    return out;
}

/// Classify every pair, predict times for accepted ones, then assemble.
inline McpicPrediction predict_failure(const Scenario& scenario, const McpicModel& model) {
    std::vector<oracle::CoalescenceEvent> events;
    for (const auto& p : enumerate_pairs(scenario))
        if (model.classify(p) >= model.tau)
            events.push_back({p.id1, p.id2, model.predict_time(p)});
    return assemble_events(scenario, std::move(events));
}

}  // namespace fracnet::mcpic
