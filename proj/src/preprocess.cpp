#include "airdyn/preprocess.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace airdyn {

namespace {
const char* kModule = "preprocess";
}

SmoothingFactor::SmoothingFactor(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw DataError(kModule, "smoothing factor must lie in [0, 1], got " + std::to_string(alpha));
    }
}

NormalizedSeries standardize(std::span<const double> values) {
    const std::size_t m = values.size();
    if (m < 2) throw DataError(kModule, "standardization needs at least 2 points");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    if (!(sd > 0.0)) throw DataError(kModule, "zero variance: series is constant over the window");

    NormalizedSeries out;
    out.mu = mean;
    out.sigma = sd;
    out.values.reserve(m);
    for (double v : values) out.values.push_back((v - mean) / sd);
    return out;
}

NormalizedSeries standardize(const RawSeries& s) {
    auto values = s.dense();
    NormalizedSeries out = standardize(std::span<const double>(values));
    out.station = s.station;
    out.species = s.species;
    out.t0 = s.t0;
    out.dt_hours = s.dt_hours();
    return out;
}

int filter_window_length(double alpha, std::size_t m) {
    const int raw = 1 + 2 * static_cast<int>(std::lround(alpha * static_cast<double>(m - 1) / 4.0));
    const int cap = (m % 2 == 1) ? static_cast<int>(m) : static_cast<int>(m) - 1;
    return std::max(1, std::min(raw, cap));
}

std::vector<double> gaussian_kernel(int length) {
    if (length < 1 || length % 2 == 0) throw DataError(kModule, "kernel length must be odd and positive");
    const int half = length / 2;
    const double sd = static_cast<double>(length) / 5.0;
    std::vector<double> w(static_cast<std::size_t>(length));
    double total = 0.0;
    for (int k = -half; k <= half; ++k) {
        const double v = std::exp(-0.5 * (k / sd) * (k / sd));
        w[static_cast<std::size_t>(k + half)] = v;
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

std::vector<double> gaussian_filter_with_length(std::span<const double> values, int length) {
    const auto m = static_cast<long>(values.size());
    if (length > 1 && (length - 1) / 2 > m - 1) {
        throw DataError(kModule, "filter window longer than the series");
    }
    const auto kernel = gaussian_kernel(length);
    const long half = length / 2;
    auto reflect = [m](long i) {
        if (i < 0) return -i;
        if (i >= m) return 2 * (m - 1) - i;
        return i;
    };
    std::vector<double> out(values.size());
    for (long i = 0; i < m; ++i) {
        double acc = 0.0;
        for (long k = -half; k <= half; ++k) {
            acc += kernel[static_cast<std::size_t>(k + half)] * values[static_cast<std::size_t>(reflect(i + k))];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

std::vector<double> gaussian_filter(std::span<const double> values, SmoothingFactor alpha) {
    if (values.size() < 3) throw DataError(kModule, "filtering needs at least 3 points");
    return gaussian_filter_with_length(values, filter_window_length(alpha.value(), values.size()));
}

std::vector<double> makima_slopes(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DataError(kModule, "modified Akima needs at least 2 knots");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = x[i + 1] - x[i];
        if (!(h > 0.0)) throw DataError(kModule, "knots must be strictly increasing");
        delta[i] = (y[i + 1] - y[i]) / h;
    }
    // Secants beyond either end repeat the end secant, which makes the end
    // slopes equal to the one-sided secants.
    auto d = [&](long i) {
        if (i < 0) return delta.front();
        if (i >= static_cast<long>(delta.size())) return delta.back();
        return delta[static_cast<std::size_t>(i)];
    };
    std::vector<double> s(n);
    for (long i = 0; i < static_cast<long>(n); ++i) {
        const double w1 = std::abs(d(i + 1) - d(i)) + std::abs(d(i + 1) + d(i)) / 2.0;
        const double w2 = std::abs(d(i - 1) - d(i - 2)) + std::abs(d(i - 1) + d(i - 2)) / 2.0;
        s[static_cast<std::size_t>(i)] =
            (w1 + w2 > 0.0) ? (w1 * d(i - 1) + w2 * d(i)) / (w1 + w2) : 0.5 * (d(i - 1) + d(i));
    }
    return s;
}

SplineSamples makima_spline(std::span<const double> values, double dt, int refinement) {
    const std::size_t n = values.size();
    if (n < 2) throw DataError(kModule, "spline needs at least 2 knots");
    if (refinement < 1) throw DataError(kModule, "refinement must be a positive integer");
    if (!(dt > 0.0)) throw DataError(kModule, "knot spacing must be positive");

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) * dt;
    const auto slope = makima_slopes(x, values);

    const std::size_t r = static_cast<std::size_t>(refinement);
    SplineSamples out;
    out.grid.resize((n - 1) * r + 1);
    out.y.resize(out.grid.size());
    const double h = dt / static_cast<double>(refinement);
    for (std::size_t j = 0; j < out.grid.size(); ++j) out.grid[j] = static_cast<double>(j) * h;

    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double y0 = values[i], y1 = values[i + 1];
        const double m0 = slope[i] * dt, m1 = slope[i + 1] * dt;
        out.y[i * r] = y0;
        for (std::size_t k = 1; k < r; ++k) {
            const double u = static_cast<double>(k) / static_cast<double>(r);
            const double u2 = u * u, u3 = u2 * u;
            const double h00 = 2 * u3 - 3 * u2 + 1;
            const double h10 = u3 - 2 * u2 + u;
            const double h01 = -2 * u3 + 3 * u2;
            const double h11 = u3 - u2;
            out.y[i * r + k] = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        }
    }
    out.y.back() = values[n - 1];
    return out;
}

std::vector<double> differentiate(std::span<const double> y, double spacing) {
    if (y.size() < 2) throw DataError(kModule, "differentiation needs at least 2 grid points");
    if (!(spacing > 0.0)) throw DataError(kModule, "grid spacing must be positive");
    std::vector<double> dy(y.size() - 1);
    for (std::size_t j = 1; j < y.size(); ++j) dy[j - 1] = (y[j] - y[j - 1]) / spacing;
    return dy;
}

ProcessedSeries preprocess(const NormalizedSeries& ns, SmoothingFactor alpha, int refinement) {
    auto filtered = gaussian_filter(ns.values, alpha);
    auto spline = makima_spline(filtered, ns.dt_hours, refinement);
    ProcessedSeries out;
    out.alpha = alpha.value();
    out.refinement = refinement;
    out.grid = std::move(spline.grid);
    out.y = std::move(spline.y);
    out.dy = differentiate(out.y, ns.dt_hours / refinement);
    return out;
}

}  // namespace airdyn
