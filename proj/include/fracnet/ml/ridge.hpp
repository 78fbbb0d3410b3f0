#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace fracnet::ml {

namespace detail {

/// Gaussian elimination with partial pivoting; throws on (near-)singular systems.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-12) throw std::runtime_error("rank deficient");
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace detail

/// Polynomial ridge regression on a standardized Vandermonde system.
/// The intercept is not penalized.
struct PolyRidgeModel {
    int degree = 0;
    double lambda = 0.0;
    std::vector<double> coeffs;  // on the standardized scale, length degree+1
    double x_mean = 0.0, x_std = 1.0;
    double y_mean = 0.0, y_std = 1.0;

    double predict(double x) const {
        const double z = (x - x_mean) / x_std;
        double p = 0.0;
        for (std::size_t k = coeffs.size(); k-- > 0;) p = p * z + coeffs[k];
        return p * y_std + y_mean;
    }

    nlohmann::json to_json() const {
        return {{"format", "fracnet-poly-ridge-v1"}, {"degree", degree},
                {"lambda", lambda},  {"coeffs", coeffs},
                {"x_mean", x_mean},  {"x_std", x_std},
                {"y_mean", y_mean},  {"y_std", y_std}};
    }

    static PolyRidgeModel from_json(const nlohmann::json& j) {
        PolyRidgeModel m;
        m.degree = j.at("degree").get<int>();
        m.lambda = j.at("lambda").get<double>();
        m.coeffs = j.at("coeffs").get<std::vector<double>>();
        m.x_mean = j.at("x_mean").get<double>();
        m.x_std = j.at("x_std").get<double>();
        m.y_mean = j.at("y_mean").get<double>();
        m.y_std = j.at("y_std").get<double>();
        return m;
    }
};

inline PolyRidgeModel fit_poly_ridge(const std::vector<std::pair<double, double>>& samples,
                                     int degree, double lambda) {
    if (degree < 0) throw std::invalid_argument("degree must be >= 0");
    if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
    const std::size_t n = samples.size();
    if (n < static_cast<std::size_t>(degree) + 1)
        throw std::invalid_argument("need at least degree+1 samples");
    for (const auto& [x, y] : samples)
        if (!std::isfinite(x) || !std::isfinite(y))
            throw std::invalid_argument("non-finite sample");

    PolyRidgeModel m;
    m.degree = degree;
    m.lambda = lambda;

    double sx = 0, sy = 0;
    for (const auto& [x, y] : samples) { sx += x; sy += y; }
    m.x_mean = sx / n;
    m.y_mean = sy / n;
    double vx = 0, vy = 0;
    for (const auto& [x, y] : samples) {
        vx += (x - m.x_mean) * (x - m.x_mean);
        vy += (y - m.y_mean) * (y - m.y_mean);
    }
    m.x_std = vx > 0 ? std::sqrt(vx / n) : 1.0;
    m.y_std = vy > 0 ? std::sqrt(vy / n) : 1.0;

    const int p = degree + 1;
    // Normal equations V'V + lambda*I (intercept row/col unpenalized).
    std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
    std::vector<double> atb(p, 0.0);
    for (const auto& [x, y] : samples) {
        const double z = (x - m.x_mean) / m.x_std;
        const double t = (y - m.y_mean) / m.y_std;
        std::vector<double> row(p);
        row[0] = 1.0;
        for (int k = 1; k < p; ++k) row[k] = row[k - 1] * z;
        for (int i = 0; i < p; ++i) {
            atb[i] += row[i] * t;
            for (int j = 0; j < p; ++j) ata[i][j] += row[i] * row[j];
        }
    }
    for (int k = 1; k < p; ++k) ata[k][k] += lambda;

    m.coeffs = detail::solve_linear(std::move(ata), std::move(atb));
    return m;
}

}  // namespace fracnet::ml
