#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include "tedemod/encoder.hpp"
#include "tedemod/model.hpp"
#include "tedemod/sampling_matrix.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace tedemod::testing {

inline FrameConfig default_frame(std::size_t m = 100)
{
    FrameConfig f;
    f.m = m;
    return f;
}

inline TemParams default_tem(const FrameConfig& f)
{
    return TemParams::for_frame(f);
}

inline ModulationFrame random_frame(const FrameConfig& f, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return ModulationFrame::random(f, rng);
}

// Gaussian upper tail by composite Simpson on [x, x + 40].
inline double q_function_quadrature(double x)
{
    const int n = 200000;
    const double h = 40.0 / n;
    auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
    double s = phi(x) + phi(x + 40.0);
    for (int j = 1; j < n; ++j) s += (j % 2 ? 4.0 : 2.0) * phi(x + j * h);
    return s * h / 3.0;
}

// Dense G straight from the overlap integrals, without the band builder.
inline std::vector<std::vector<double>> dense_g_oracle(const SpikeTrain& train, const FrameConfig& f,
                                                       std::size_t rows)
{
    std::vector<std::vector<double>> g(rows, std::vector<double>(f.m, 0.0));
    for (std::size_t k = 0; k < rows; ++k) {
        const double a = train.t(k), b = train.t(k + 1);
        for (std::size_t i = 0; i < f.m; ++i) {
            const double lo = std::max(a, i * f.Ts), hi = std::min(b, (i + 1) * f.Ts);
            if (hi > lo) g[k][i] = (hi - lo) / std::sqrt(f.Ts);
        }
    }
    return g;
}

// Least squares for sqrt(Es) G x = q via normal equations and Gaussian
// elimination with partial pivoting.
inline std::vector<double> dense_lsq_oracle(const std::vector<std::vector<double>>& g,
                                            const std::vector<double>& q, double Es)
{
    const std::size_t n = g.empty() ? 0 : g[0].size();
    const double s = std::sqrt(Es);
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) a[i][j] += s * g[k][i] * s * g[k][j];
            a[i][n] += s * g[k][i] * q[k];
        }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        std::swap(a[c], a[p]);
        if (a[c][c] == 0.0) throw std::runtime_error("singular");
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j <= n; ++j) a[r][j] -= f * a[c][j];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
    return x;
}

inline double rel_diff(double a, double b)
{
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

} // namespace tedemod::testing
