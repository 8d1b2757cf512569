#pragma once

#include <span>
#include <vector>

#include "airdyn/dataset.hpp"

namespace airdyn {

/// Standardized window (z-scores) plus the statistics needed to undo it.
struct NormalizedSeries {
    std::vector<double> values;
    double mu = 0.0;
    double sigma = 1.0;
    StationId station;
    SpeciesId species;
    Timestamp t0{};
    double dt_hours = 1.0;
};

/// Smoothing aggressiveness in [0, 1].
class SmoothingFactor {
public:
    explicit SmoothingFactor(double alpha);
    double value() const { return alpha_; }

private:
    double alpha_;
};

/// Filtered, splined series on the refined grid. `dy[j]` is the backward
/// difference ending at `grid[j + 1]`.
struct ProcessedSeries {
    std::vector<double> grid;  // hours since window start
    std::vector<double> y;
    std::vector<double> dy;    // per hour
    double alpha = 0.0;
    int refinement = 100;

    double spacing() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
};

inline constexpr int kDefaultRefinement = 100;

/// (x - mean) / sd with the sample (M-1) standard deviation.
NormalizedSeries standardize(const RawSeries& s);
NormalizedSeries standardize(std::span<const double> values);

/// Odd kernel length for a series of length m.
int filter_window_length(double alpha, std::size_t m);
/// Normalized Gaussian weights of odd length, standard deviation length/5.
std::vector<double> gaussian_kernel(int length);

/// Gaussian-weighted moving average with mirror-reflection boundaries.
std::vector<double> gaussian_filter(std::span<const double> values, SmoothingFactor alpha);
std::vector<double> gaussian_filter_with_length(std::span<const double> values, int length);

struct SplineSamples {
    std::vector<double> grid;
    std::vector<double> y;
};

/// Modified-Akima slopes for knots at x (strictly increasing).
std::vector<double> makima_slopes(std::span<const double> x, std::span<const double> y);

/// Modified-Akima interpolation of knots at 0, dt, 2dt, ... evaluated on
/// `refinement` equal subintervals per knot pair.
SplineSamples makima_spline(std::span<const double> values, double dt, int refinement = kDefaultRefinement);

/// Backward differences (y[j] - y[j-1]) / spacing, j >= 1.
std::vector<double> differentiate(std::span<const double> y, double spacing);

/// filter -> spline -> differentiate on an already standardized window.
ProcessedSeries preprocess(const NormalizedSeries& ns, SmoothingFactor alpha, int refinement = kDefaultRefinement);

}  // namespace airdyn
