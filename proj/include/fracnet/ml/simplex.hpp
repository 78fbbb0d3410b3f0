#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace fracnet::ml {

struct LsqFitResult {
    std::vector<double> params;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Bounded derivative-free Nelder-Mead minimization. Points are clamped to
/// the box before every evaluation; `budget` caps function evaluations.
inline LsqFitResult lsq_minimize(const std::function<double(const std::vector<double>&)>& objective,
                                 std::vector<double> initial,
                                 const std::vector<std::pair<double, double>>& bounds,
                                 int budget, double tol = 1e-9) {
    const std::size_t n = initial.size();
    if (n == 0) throw std::invalid_argument("empty parameter vector");
    if (bounds.size() != n) throw std::invalid_argument("bounds size mismatch");

    auto clamp = [&](std::vector<double> p) {
        for (std::size_t i = 0; i < n; ++i)
            p[i] = std::clamp(p[i], bounds[i].first, bounds[i].second);
        return p;
    };

    int evals = 0;
    auto eval = [&](const std::vector<double>& p) {
        ++evals;
        return objective(p);
    };

    initial = clamp(std::move(initial));
    const double f0 = eval(initial);
    if (!std::isfinite(f0)) throw std::invalid_argument("objective not finite at initial point");

    // Initial simplex: perturb each coordinate by 5% of the box extent.
    struct Vertex { std::vector<double> p; double f; };
    std::vector<Vertex> simplex;
    simplex.push_back({initial, f0});
    for (std::size_t i = 0; i < n && evals < budget; ++i) {
        auto p = initial;
        const double span = bounds[i].second - bounds[i].first;
        double step = span > 0 ? 0.05 * span : 0.1;
        if (p[i] + step > bounds[i].second) step = -step;
        p[i] += step;
        p = clamp(std::move(p));
        simplex.push_back({p, eval(p)});
    }

    LsqFitResult result;
    result.params = initial;
    result.objective = f0;

    auto record_best = [&]() {
        for (const auto& v : simplex)
            if (v.f < result.objective) {
                result.objective = v.f;
                result.params = v.p;
            }
    };
    record_best();

    constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    while (evals < budget && simplex.size() == n + 1) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
        ++result.iterations;

        const double spread = std::abs(simplex.back().f - simplex.front().f);
        if (spread <= tol * (std::abs(simplex.front().f) + tol)) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].p[i] / n;

        auto& worst = simplex.back();
        auto reflect = centroid;
        for (std::size_t i = 0; i < n; ++i)
            reflect[i] = centroid[i] + alpha * (centroid[i] - worst.p[i]);
        reflect = clamp(std::move(reflect));
        const double fr = eval(reflect);

        if (fr < simplex.front().f && evals < budget) {
            auto expand = centroid;
            for (std::size_t i = 0; i < n; ++i)
                expand[i] = centroid[i] + gamma * (reflect[i] - centroid[i]);
            expand = clamp(std::move(expand));
            const double fe = eval(expand);
            worst = fe < fr ? Vertex{expand, fe} : Vertex{reflect, fr};
        } else if (fr < simplex[n - 1].f) {
            worst = {reflect, fr};
        } else if (evals < budget) {
            auto contract = centroid;
            const auto& base = fr < worst.f ? reflect : worst.p;
            const double fb = fr < worst.f ? fr : worst.f;
            for (std::size_t i = 0; i < n; ++i)
                contract[i] = centroid[i] + rho * (base[i] - centroid[i]);
            contract = clamp(std::move(contract));
            const double fc = eval(contract);
            if (fc < fb) {
                worst = {contract, fc};
            } else {
                // shrink toward the best vertex
                for (std::size_t v = 1; v < simplex.size() && evals < budget; ++v) {
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[v].p[i] = simplex[0].p[i] +
                                          sigma * (simplex[v].p[i] - simplex[0].p[i]);
                    simplex[v].f = eval(simplex[v].p);
                }
            }
        }
        record_best();
    }
    return result;
}

}  // namespace fracnet::ml
