#include "catch2/catch_amalgamated.hpp"

#include <cmath>

#include "fracnet/models/op.hpp"
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

oracle::CrackSnap snap_for(int id, Vec2 tip_a, Vec2 tip_b) {
    oracle::CrackSnap c;
    c.id = id;
    c.tip_a = tip_a;
    c.tip_b = tip_b;
    c.length = std::hypot(tip_b.x - tip_a.x, tip_b.y - tip_a.y);
    c.x_lo = std::min(tip_a.x, tip_b.x);
    c.x_hi = std::max(tip_a.x, tip_b.x);
    return c;
}

// Trace of a single horizontal crack whose tips both advance by `per_tip` in x
// each snapshot, starting from the first snapshot pair.
oracle::SimulationTrace horizontal_growth_trace(double a0, double per_tip, int n_snaps,
                                                double dt) {
    oracle::SimulationTrace tr;
    tr.horizon = dt * n_snaps;
    double lo = 1.0 - a0 / 2, hi = 1.0 + a0 / 2;
    for (int s = 0; s < n_snaps; ++s) {
        oracle::Snapshot snap;
        snap.t = s * dt;
        snap.cracks.push_back(snap_for(0, {lo, 1.0}, {hi, 1.0}));
        tr.snapshots.push_back(snap);
        lo -= per_tip;
        hi += per_tip;
    }
    return tr;
}

}  // namespace

TEST_CASE("extract_growth_samples: trace with no growth yields nothing") {
    oracle::SimulationTrace tr;
    tr.horizon = 1.0;
    for (int s = 0; s < 5; ++s) {
        oracle::Snapshot snap;
        snap.t = 0.1 * s;
        snap.cracks.push_back(snap_for(0, {0.8, 1.0}, {1.2, 1.0}));
        tr.snapshots.push_back(snap);
    }
    CHECK(op::extract_growth_samples({tr}).empty());
}

TEST_CASE("extract_growth_samples: horizontal tip advance maps straight to da") {
    auto tr = horizontal_growth_trace(0.4, 0.01, 4, 0.1);
    auto samples = op::extract_growth_samples({tr});
    REQUIRE(samples.size() == 6);  // 2 tips x 3 snapshot pairs
    for (const auto& s : samples) CHECK(s.da == Approx(0.01).margin(1e-12));
    CHECK(samples.front().a == Approx(0.4).margin(1e-12));
}

TEST_CASE("extract_growth_samples: 60-degree advance projects by cos") {
    // Tip moves 0.02 m along a 60-degree axis; horizontal component is 0.01.
    const double rad = 60.0 * std::acos(-1.0) / 180.0;
    const Vec2 dir{std::cos(rad), std::sin(rad)};
    oracle::SimulationTrace tr;
    tr.horizon = 0.2;
    Vec2 a{1.0 - 0.2 * dir.x, 1.0 - 0.2 * dir.y};
    Vec2 b{1.0 + 0.2 * dir.x, 1.0 + 0.2 * dir.y};
    for (int s = 0; s < 3; ++s) {
        oracle::Snapshot snap;
        snap.t = 0.1 * s;
        snap.cracks.push_back(snap_for(0, a, b));
        tr.snapshots.push_back(snap);
        b = {b.x + 0.02 * dir.x, b.y + 0.02 * dir.y};
    }
    auto samples = op::extract_growth_samples({tr});
    REQUIRE(samples.size() == 4);
    // tip_a stays put, tip_b advances; one zero and one cos-projected da per pair
    int moving = 0;
    for (const auto& s : samples)
        if (s.da > 0) {
            CHECK(s.da == Approx(0.01).margin(1e-12));
            ++moving;
        }
    CHECK(moving == 2);
}

TEST_CASE("extract_growth_samples: quiet steps before onset drop, after onset stay") {
    oracle::SimulationTrace tr;
    tr.horizon = 0.5;
    double hi = 1.2;
    for (int s = 0; s < 5; ++s) {
        oracle::Snapshot snap;
        snap.t = 0.1 * s;
        snap.cracks.push_back(snap_for(0, {0.8, 1.0}, {hi, 1.0}));
        tr.snapshots.push_back(snap);
        if (s == 1) hi += 0.01;  // growth only in the pair (1, 2)
    }
    auto samples = op::extract_growth_samples({tr});
    // pair (0,1) is pre-onset and excluded; pairs (1,2), (2,3), (3,4) all kept
    REQUIRE(samples.size() == 6);
    int nonzero = 0;
    for (const auto& s : samples) nonzero += s.da > 0;
    CHECK(nonzero == 1);
}

TEST_CASE("extract_growth_samples: junction-scale jumps are cut, normal growth kept") {
    auto tr = horizontal_growth_trace(0.4, 0.01, 12, 0.01);
    // Splice in a coalescence-style snap: one tip jumps 0.3 m in a single pair.
    tr.snapshots[6].cracks[0].tip_b.x += 0.3;
    for (std::size_t s = 7; s < tr.snapshots.size(); ++s)
        tr.snapshots[s].cracks[0].tip_b.x += 0.3;
    auto samples = op::extract_growth_samples({tr});
    double max_da = 0.0;
    for (const auto& s : samples) max_da = std::max(max_da, s.da);
    CHECK(max_da == Approx(0.01).margin(1e-12));  // the 0.31 jump was dropped
}

TEST_CASE("fit_op recovers a linear growth law") {
    // Tips advance by 0.1 * (current projected length) each snapshot, so the
    // samples lie exactly on da = 0.1 a; the ridge fit must reproduce the line.
    std::vector<oracle::SimulationTrace> traces;
    for (double a0 : {0.1, 0.15, 0.2, 0.3, 0.4}) {
        oracle::SimulationTrace tr;
        tr.horizon = 1.0;
        double lo = 1.0 - a0 / 2, hi = 1.0 + a0 / 2;
        for (int s = 0; s < 8; ++s) {
            oracle::Snapshot snap;
            snap.t = 0.1 * s;
            snap.cracks.push_back(snap_for(0, {lo, 1.0}, {hi, 1.0}));
            tr.snapshots.push_back(snap);
            const double da = 0.1 * (hi - lo);
            lo -= da;
            hi += da;
        }
        traces.push_back(tr);
    }
    auto model = op::fit_op(traces, 3, 0.0);
    CHECK(model.predict_da(0.2) == Approx(0.02).margin(1e-6));
}

TEST_CASE("fit_op onset is the mean first nonzero-damage time") {
    std::vector<oracle::SimulationTrace> traces;
    for (int k = 0; k < 3; ++k) {
        oracle::SimulationTrace tr;
        tr.horizon = 0.006;
        double hi = 1.2;
        for (int s = 0; s < 10; ++s) {
            oracle::Snapshot snap;
            snap.t = 0.0005 * s;
            snap.cracks.push_back(snap_for(0, {0.8, 1.0}, {hi, 1.0}));
            tr.snapshots.push_back(snap);
            if (snap.t >= 0.001) hi += 0.01;  // first growth lands at t = 0.0015
        }
        traces.push_back(tr);
    }
    auto model = op::fit_op(traces, 1, 0.0);
    CHECK(model.t0 == Approx(0.0015).margin(1e-12));
}

TEST_CASE("predict_da clamps evaluation beyond the training range") {
    auto traces = std::vector<oracle::SimulationTrace>{horizontal_growth_trace(0.4, 0.01, 6, 0.1)};
    auto model = op::fit_op(traces, 3, 1e-3);
    CHECK(model.predict_da(50.0) == Approx(model.predict_da(model.a_max)).margin(1e-15));
}

TEST_CASE("simulate_op: a crack already spanning fails at the onset delay") {
    auto s = with_boundaries({make_crack(0, 1.0, 1.5, 2.2, 0.0)});
    op::OpModel m;
    m.pir = ml::fit_poly_ridge({{0.1, 0.0}, {0.2, 0.0}}, 1, 0.0);
    m.t0 = 0.0015;
    m.dt_snap = 2e-5;
    auto p = op::simulate_op(s, m, 0.007);
    REQUIRE(p.failure_time.has_value());
    CHECK(*p.failure_time == Approx(0.0015).margin(1e-12));
    CHECK(p.path.crack_ids == std::vector<int>{0});
}

TEST_CASE("simulate_op: zero growth everywhere never fails") {
    auto s = with_boundaries(
        {make_crack(0, 0.5, 1.5, 0.3, 0.0), make_crack(1, 1.5, 1.5, 0.3, 0.0)});
    op::OpModel m;
    m.pir = ml::fit_poly_ridge({{0.1, 0.0}, {0.2, 0.0}}, 1, 0.0);
    m.t0 = 0.0;
    m.dt_snap = 2e-5;
    auto p = op::simulate_op(s, m, 0.007);
    CHECK_FALSE(p.failure_time.has_value());
    CHECK(p.path.crack_ids.empty());
}

TEST_CASE("simulate_op: constant-rate gap closure, stepped by hand") {
    // Projections [0, 0.9] and [1.1, 2.0] in a 2 m sample; every endpoint moves
    // 0.05 per step. Step 1: [-0.05, 0.95], [1.05, 2.05] -- a 0.1 m gap remains.
    // Step 2: [-0.1, 1.0], [1.0, 2.1] -- the intervals touch, merge, and span,
    // so failure lands at exactly two macro steps.
    auto s = with_boundaries(
        {make_crack(0, 0.45, 1.5, 0.9, 0.0), make_crack(1, 1.55, 1.5, 0.9, 0.0)});
    op::OpModel m;
    m.pir = ml::fit_poly_ridge({{0.5, 0.05}, {1.0, 0.05}}, 1, 0.0);  // constant da
    m.t0 = 0.0;
    m.dt_snap = 1e-3;
    auto p = op::simulate_op(s, m, 0.1);
    REQUIRE(p.failure_time.has_value());
    CHECK(*p.failure_time == Approx(2e-3).margin(1e-12));
    CHECK(p.path.crack_ids == std::vector<int>{0, 1});
    CHECK(p.band_y == Approx(1.5).margin(1e-12));
}

TEST_CASE("simulate_op: failure time is never before the onset delay") {
    auto s = with_boundaries({make_crack(0, 1.0, 1.5, 2.2, 0.0)});
    op::OpModel m;
    m.pir = ml::fit_poly_ridge({{0.5, 0.01}, {1.0, 0.01}}, 1, 0.0);
    m.t0 = 0.003;
    m.dt_snap = 2e-5;
    auto p = op::simulate_op(s, m, 0.007);
    REQUIRE(p.failure_time.has_value());
    CHECK(*p.failure_time >= m.t0);
}

TEST_CASE("simulate_op: only horizontal projections matter") {
    // Two layouts whose cracks share horizontal projections but differ in angle
    // and height must produce the same failure time and path.
    auto sa = with_boundaries(
        {make_crack(0, 0.5, 1.0, 0.8, 0.0), make_crack(1, 1.5, 2.0, 0.8, 0.0)});
    // length 1.6 at 60 degrees projects to 0.8 as well
    auto sb = with_boundaries(
        {make_crack(0, 0.5, 1.2, 1.6, 60.0), make_crack(1, 1.5, 1.8, 1.6, 60.0)});
    op::OpModel m;
    m.pir = ml::fit_poly_ridge({{0.5, 0.02}, {1.0, 0.02}}, 1, 0.0);
    m.t0 = 0.001;
    m.dt_snap = 1e-4;
    auto pa = op::simulate_op(sa, m, 0.1);
    auto pb = op::simulate_op(sb, m, 0.1);
    REQUIRE(pa.failure_time.has_value());
    REQUIRE(pb.failure_time.has_value());
    CHECK(*pa.failure_time == Approx(*pb.failure_time).margin(1e-15));
    CHECK(pa.path.crack_ids == pb.path.crack_ids);
}

TEST_CASE("simulate_op: vertical cracks are retained with a floor projection") {
    auto s = with_boundaries({make_crack(0, 1.0, 1.5, 0.4, 90.0)});
    op::OpModel m;
    m.pir = ml::fit_poly_ridge({{0.5, 0.2}, {1.0, 0.2}}, 1, 0.0);
    m.t0 = 0.0;
    m.dt_snap = 1e-3;
    auto p = op::simulate_op(s, m, 0.1);  // grows 0.2/step from the floor interval
    REQUIRE(p.failure_time.has_value());
    CHECK(p.path.crack_ids == std::vector<int>{0});
}

TEST_CASE("OpModel json round trip") {
    auto traces = std::vector<oracle::SimulationTrace>{horizontal_growth_trace(0.4, 0.01, 6, 0.1)};
    auto model = op::fit_op(traces, 3, 1e-3);
    auto back = op::OpModel::from_json(model.to_json());
    CHECK(back.t0 == Approx(model.t0).margin(1e-15));
    CHECK(back.dt_snap == Approx(model.dt_snap).margin(1e-15));
    CHECK(back.a_max == Approx(model.a_max).margin(1e-15));
    for (double a : {0.1, 0.3, 0.5})
        CHECK(back.predict_da(a) == Approx(model.predict_da(a)).margin(1e-12));
}
