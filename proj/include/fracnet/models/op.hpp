#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "fracnet/core.hpp"
#include "fracnet/ml/ridge.hpp"
#include "fracnet/oracle.hpp"

namespace fracnet::op {

constexpr double kMinProjectedLength = 1e-6;  // m, floor for theta = 90 cracks

struct GrowthSample {
    double a = 0.0;   // m, current horizontal projected length
    double da = 0.0;  // m, horizontal tip advance over one snapshot interval
};

struct OpModel {
    ml::PolyRidgeModel pir;
    double t0 = 0.0;       // s, learned onset delay
    double dt_snap = 0.0;  // s, snapshot interval the samples were taken at
    // Largest projected length seen in training; merged intervals grow well past
    // it, where an unconstrained polynomial is meaningless, so evaluation clamps.
    double a_max = std::numeric_limits<double>::infinity();

    double predict_da(double a) const { return std::max(0.0, pir.predict(std::min(a, a_max))); }

    json to_json() const {
        return {{"format", "fracnet-op-v1"},
                {"pir", pir.to_json()},
                {"t0", t0},
                {"dt_snap", dt_snap},
                {"a_max", a_max}};
    }

    static OpModel from_json(const json& j) {
        OpModel m;
        m.pir = ml::PolyRidgeModel::from_json(j.at("pir"));
        m.t0 = j.at("t0").get<double>();
        m.dt_snap = j.at("dt_snap").get<double>();
        if (j.contains("a_max") && j.at("a_max").is_number()) m.a_max = j.at("a_max").get<double>();
        return m;
    }
};

/// One sample per (tip, consecutive snapshot pair). Zero-growth samples before
/// the trace's first growth are excluded (elastic delay, captured by t0);
/// zeros after onset stay in so the fit reflects that most tips sit idle.
/// Coalescence snaps a tip onto the partner crack's body in a single step,
/// which shows up as a displacement orders of magnitude above real growth;
/// those samples describe the junction geometry, not da(a), so a robust
/// median cut over the nonzero das drops them before fitting.
inline std::vector<GrowthSample> extract_growth_samples(
    const std::vector<oracle::SimulationTrace>& traces) {
    std::vector<GrowthSample> out;
    for (const auto& trace : traces) {
        bool onset_seen = false;
        for (std::size_t s = 0; s + 1 < trace.snapshots.size(); ++s) {
            const auto& cur = trace.snapshots[s];
            const auto& nxt = trace.snapshots[s + 1];
            std::vector<GrowthSample> step;
            bool any_growth = false;
            for (std::size_t c = 0; c < cur.cracks.size(); ++c) {
                const double a =
                    std::max(kMinProjectedLength, cur.cracks[c].x_hi - cur.cracks[c].x_lo);
                const double da_a = std::abs(nxt.cracks[c].tip_a.x - cur.cracks[c].tip_a.x);
                const double da_b = std::abs(nxt.cracks[c].tip_b.x - cur.cracks[c].tip_b.x);
                any_growth |= da_a > 0.0 || da_b > 0.0;
                step.push_back({a, da_a});
                step.push_back({a, da_b});
            }
            onset_seen |= any_growth;
            if (!onset_seen) continue;
            out.insert(out.end(), step.begin(), step.end());
        }
    }
    std::vector<double> das;
    for (const auto& s : out)
        if (s.da > 0.0) das.push_back(s.da);
    if (das.size() >= 3) {
        std::nth_element(das.begin(), das.begin() + das.size() / 2, das.end());
        const double cutoff = 8.0 * das[das.size() / 2];
        std::erase_if(out, [&](const GrowthSample& s) { return s.da > cutoff; });
    }
    return out;
}

/// Mean over traces of the first snapshot time with nonzero accumulated damage.
inline double estimate_onset(const std::vector<oracle::SimulationTrace>& traces) {
    double sum = 0.0;
    int count = 0;
    for (const auto& trace : traces) {
        for (const auto& [t, damage] : oracle::accumulated_damage(trace)) {
            if (damage > 0.0) {
                sum += t;
                ++count;
                break;
            }
        }
    }
    return count > 0 ? sum / count : 0.0;
}

inline OpModel fit_op(const std::vector<oracle::SimulationTrace>& traces, int degree = 3,
                      double lambda = 1e-3) {
    auto samples = extract_growth_samples(traces);
    if (samples.empty()) throw std::invalid_argument("no growth samples in traces");
    std::vector<std::pair<double, double>> xy;
    xy.reserve(samples.size());
    for (const auto& s : samples) xy.push_back({s.a, s.da});

    OpModel model;
    model.pir = ml::fit_poly_ridge(xy, degree, lambda);
    model.t0 = estimate_onset(traces);
    model.a_max = 0.0;
    for (const auto& [a, da] : xy) model.a_max = std::max(model.a_max, a);
    for (const auto& trace : traces)
        if (trace.snapshots.size() >= 2) {
            model.dt_snap = trace.snapshots[1].t - trace.snapshots[0].t;
            break;
        }
    return model;
}

struct OpPrediction {
    std::optional<double> failure_time;
    FailurePath path;
    double band_y = 0.0;  // m, length-weighted mean center height of the path
};

/// Horizontal-interval growth simulation. Endpoints advance by the learned
/// da(a) each snapshot interval after the onset delay; overlapping intervals
/// merge and union their source-crack id sets.
inline OpPrediction simulate_op(const Scenario& scenario, const OpModel& model,
                                double horizon) {
    struct Band {
        Interval iv;
        std::set<int> ids;
    };
    std::vector<Band> bands;
    for (const auto& c : scenario.interior_cracks()) {
        Interval iv = horizontal_projection(c);
        if (iv.length() < kMinProjectedLength) {
            const double mid = 0.5 * (iv.lo + iv.hi);
            iv = {mid - kMinProjectedLength / 2, mid + kMinProjectedLength / 2};
        }
        bands.push_back({iv, {c.id}});
    }

    auto merge = [&]() {
        std::sort(bands.begin(), bands.end(),
                  [](const Band& a, const Band& b) { return a.iv.lo < b.iv.lo; });
        std::vector<Band> merged;
        for (auto& b : bands) {
            if (!merged.empty() && b.iv.lo <= merged.back().iv.hi) {
                merged.back().iv.hi = std::max(merged.back().iv.hi, b.iv.hi);
                merged.back().ids.insert(b.ids.begin(), b.ids.end());
            } else {
                merged.push_back(std::move(b));
            }
        }
        bands = std::move(merged);
    };

    auto spanning_band = [&]() -> const Band* {
        for (const auto& b : bands)
            if (b.iv.lo <= 0.0 && b.iv.hi >= scenario.geometry.w) return &b;
        return nullptr;
    };

    auto finish = [&](const Band& b, double t) {
        OpPrediction out;
        out.failure_time = t;
        out.path.spanning = true;
        out.path.crack_ids.assign(b.ids.begin(), b.ids.end());
        std::sort(out.path.crack_ids.begin(), out.path.crack_ids.end(),
                  [&](int i, int j) {
                      return scenario.crack_by_id(i).center.x < scenario.crack_by_id(j).center.x;
                  });
        double wsum = 0.0, ysum = 0.0;
        for (int id : b.ids) {
            const auto& c = scenario.crack_by_id(id);
            const double w = std::max(kMinProjectedLength, horizontal_projection(c).length());
            wsum += w;
            ysum += w * c.center.y;
        }
        out.band_y = wsum > 0 ? ysum / wsum : 0.0;
        return out;
    };

    merge();
    const double dt = model.dt_snap > 0 ? model.dt_snap : horizon;
    for (double t = model.t0; t <= horizon + 1e-15; t += dt) {
        if (const Band* b = spanning_band()) return finish(*b, t);
        bool advanced = false;
        for (auto& b : bands) {
            const double da = model.predict_da(b.iv.length());
            if (da > 0.0) {
                b.iv.lo -= da;
                b.iv.hi += da;
                advanced = true;
            }
        }
        merge();
        if (!advanced) break;  // da = 0 everywhere; no failure possible
    }
    return {};
}

}  // namespace fracnet::op
