#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "airdyn/preprocess.hpp"

using namespace airdyn;

namespace {

// Second implementation of modified Akima evaluated at an arbitrary x, written
// from the defining formulas (end secants repeated).
double makima_reference(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const int n = static_cast<int>(xs.size());
    std::vector<double> sec;
    for (int i = 0; i + 1 < n; ++i) sec.push_back((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
    auto at = [&](int i) { return sec[static_cast<std::size_t>(std::clamp(i, 0, n - 2))]; };
    auto slope = [&](int i) {
        const double a = at(i - 2), b = at(i - 1), c = at(i), d = at(i + 1);
        const double wl = std::abs(d - c) + 0.5 * std::abs(d + c);
        const double wr = std::abs(b - a) + 0.5 * std::abs(b + a);
        if (wl + wr == 0.0) return 0.5 * (b + c);
        return (wl * b + wr * c) / (wl + wr);
    };
    int i = 0;
    while (i < n - 2 && x > xs[i + 1]) ++i;
    const double h = xs[i + 1] - xs[i];
    const double t = (x - xs[i]) / h;
    // Cubic a + b t + c t^2 + d t^3 matching values and slopes at both ends.
    const double p0 = ys[i], p1 = ys[i + 1], m0 = slope(i) * h, m1 = slope(i + 1) * h;
    const double a = p0, b = m0;
    const double c = 3 * (p1 - p0) - 2 * m0 - m1;
    const double d = 2 * (p0 - p1) + m0 + m1;
    return a + t * (b + t * (c + t * d));
}

double total_variation(const std::vector<double>& v) {
    double tv = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
    return tv;
}

}  // namespace

TEST_CASE("standardize examples") {
    const auto a = standardize(std::vector<double>{1, 2, 3});
    CHECK(a.mu == doctest::Approx(2.0));
    CHECK(a.sigma == doctest::Approx(1.0));
    CHECK(a.values[0] == doctest::Approx(-1.0));
    CHECK(a.values[1] == doctest::Approx(0.0));
    CHECK(a.values[2] == doctest::Approx(1.0));

    const auto b = standardize(std::vector<double>{0, 10});
    CHECK(b.sigma == doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
    CHECK(b.values[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(b.values[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(standardize(std::vector<double>{5, 5, 5}), DataError);
    CHECK_THROWS_AS(standardize(std::vector<double>{5}), DataError);
}

TEST_CASE("standardized values have zero mean and unit sample deviation") {
    std::mt19937_64 rng(3);
    std::lognormal_distribution<double> g(3.0, 0.6);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(5 + rep);
        for (auto& x : v) x = g(rng);
        const auto ns = standardize(v);
        const double mean = std::accumulate(ns.values.begin(), ns.values.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : ns.values) ss += (x - mean) * (x - mean);
        CHECK(std::abs(mean) <= 1e-12);
        CHECK(std::abs(std::sqrt(ss / static_cast<double>(v.size() - 1)) - 1.0) <= 1e-9);
        CHECK(ns.sigma > 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(ns.mu + ns.sigma * ns.values[i] - v[i]) <= 1e-12 * v[i]);
    }
}

TEST_CASE("standardize keeps provenance of a raw series") {
    RawSeries s;
    s.station = "S";
    s.species = "O3";
    s.t0 = parse_timestamp("2018-04-01T08:00");
    s.values = {1.0, 3.0, 2.0};
    const auto ns = standardize(s);
    CHECK(ns.station == "S");
    CHECK(ns.species == "O3");
    CHECK(ns.dt_hours == 1.0);
    s.values[1].reset();
    CHECK_THROWS_AS(standardize(s), DataError);
}

TEST_CASE("smoothing factor range") {
    CHECK_NOTHROW(SmoothingFactor(0.0));
    CHECK_NOTHROW(SmoothingFactor(1.0));
    CHECK_THROWS_AS(SmoothingFactor(-0.01), DataError);
    CHECK_THROWS_AS(SmoothingFactor(1.5), DataError);
}

TEST_CASE("window length map") {
    CHECK(filter_window_length(0.01, 9) == 1);
    CHECK(filter_window_length(0.5, 9) == 3);
    CHECK(filter_window_length(1.0, 9) == 5);
    CHECK(filter_window_length(1.0, 100) == 51);
    CHECK(filter_window_length(1.0, 4) == 3);
    for (std::size_t m = 3; m < 40; ++m) {
        for (double a : {0.0, 0.1, 0.37, 0.8, 1.0}) {
            const int w = filter_window_length(a, m);
            CHECK(w % 2 == 1);
            CHECK(w <= static_cast<int>(m));
        }
    }
}

TEST_CASE("gaussian kernel") {
    for (int len : {1, 3, 5, 11, 51}) {
        const auto k = gaussian_kernel(len);
        CHECK(std::abs(std::accumulate(k.begin(), k.end(), 0.0) - 1.0) <= 1e-12);
        for (std::size_t i = 0; i < k.size(); ++i) {
            CHECK(k[i] > 0.0);
            CHECK(k[i] == k[k.size() - 1 - i]);
        }
    }
    CHECK_THROWS_AS(gaussian_kernel(4), DataError);
}

TEST_CASE("gaussian filter examples") {
    const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
    CHECK(gaussian_filter_with_length(v, 1) == v);
    CHECK(gaussian_filter(v, SmoothingFactor(0.01)) == v);

    const std::vector<double> c(12, 2.5);
    for (double a : {0.1, 0.5, 1.0}) {
        for (double x : gaussian_filter(c, SmoothingFactor(a))) CHECK(x == doctest::Approx(2.5).epsilon(1e-14));
    }

    std::vector<double> impulse(41, 0.0);
    impulse[20] = 1.0;
    const int len = 11;
    const auto out = gaussian_filter_with_length(impulse, len);
    const double sd = len / 5.0;
    double norm = 0.0;
    for (int k = -5; k <= 5; ++k) norm += std::exp(-k * k / (2 * sd * sd));
    for (int i = 0; i < 41; ++i) {
        const int k = i - 20;
        const double want = std::abs(k) <= 5 ? std::exp(-k * k / (2 * sd * sd)) / norm : 0.0;
        CHECK(out[static_cast<std::size_t>(i)] == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK_THROWS_AS(gaussian_filter(std::vector<double>{1, 2}, SmoothingFactor(0.5)), DataError);
}

TEST_CASE("gaussian filter does not increase total variation") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(3 + rep % 30);
        for (auto& x : v) x = g(rng);
        const double a = (rep % 11) / 10.0;
        CHECK(total_variation(gaussian_filter(v, SmoothingFactor(a))) <= total_variation(v) + 1e-9);
    }
}

TEST_CASE("modified Akima spline") {
    SUBCASE("straight line is reproduced") {
        const std::vector<double> v{1.0, 3.0, 5.0, 7.0, 9.0};
        const auto s = makima_spline(v, 0.5, 100);
        CHECK(s.grid.size() == 401);
        for (std::size_t j = 0; j < s.grid.size(); ++j) CHECK(std::abs(s.y[j] - (1.0 + 4.0 * s.grid[j])) <= 1e-12);
    }
    SUBCASE("knots are reproduced exactly") {
        const std::vector<double> v{0.3, -1.2, 2.5, 2.5, 0.0, 7.1};
        const auto s = makima_spline(v, 1.0, 100);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(s.y[i * 100] == v[i]);
        CHECK(s.grid[100] == doctest::Approx(1.0));
    }
    SUBCASE("x squared on 0..3 matches the reference evaluator") {
        const std::vector<double> x{0, 1, 2, 3}, y{0, 1, 4, 9};
        const auto s = makima_spline(y, 1.0, 2);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(s.y[2 * i + 1] - makima_reference(x, y, i + 0.5)) <= 1e-12);
        const auto sl = makima_slopes(x, y);
        CHECK(sl[0] == doctest::Approx(1.0));
        CHECK(sl[1] == doctest::Approx(9.0 / 7.0));
        CHECK(sl[2] == doctest::Approx(35.0 / 9.0));
        CHECK(sl[3] == doctest::Approx(5.0));
    }
    SUBCASE("random data matches the reference evaluator") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> x, y;
        for (int i = 0; i < 12; ++i) {
            x.push_back(0.25 * i);
            y.push_back(g(rng));
        }
        const auto s = makima_spline(y, 0.25, 7);
        for (std::size_t j = 0; j < s.grid.size(); ++j) CHECK(std::abs(s.y[j] - makima_reference(x, y, s.grid[j])) <= 1e-12);
    }
    SUBCASE("flat stretches stay flat") {
        const std::vector<double> v{1, 1, 1, 2, 2, 2};
        const auto s = makima_spline(v, 1.0, 10);
        for (std::size_t j = 0; j <= 10; ++j) CHECK(s.y[j] == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(makima_spline(std::vector<double>{1.0}, 1.0), DataError);
}

TEST_CASE("backward differences") {
    const std::vector<double> c(10, 4.0);
    for (double d : differentiate(c, 0.1)) CHECK(d == 0.0);

    std::vector<double> lin, sn;
    for (int j = 0; j <= 300; ++j) {
        lin.push_back(3.0 * 0.01 * j);
        sn.push_back(std::sin(0.01 * j));
    }
    for (double d : differentiate(lin, 0.01)) CHECK(d == doctest::Approx(3.0).epsilon(1e-12));
    const auto ds = differentiate(sn, 0.01);
    CHECK(ds.size() == 300);
    for (std::size_t j = 0; j < ds.size(); ++j) CHECK(std::abs(ds[j] - std::cos(0.01 * (j + 1))) <= 0.01);
}

TEST_CASE("differentiating a scaled cumulative sum recovers the series") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    const double dt = 0.25;
    std::vector<double> v(40), cum{0.0};
    for (auto& x : v) {
        x = g(rng);
        cum.push_back(cum.back() + dt * x);
    }
    const auto d = differentiate(cum, dt);
    for (std::size_t j = 0; j < v.size(); ++j) CHECK(std::abs(d[j] - v[j]) <= 1e-12);
}

TEST_CASE("preprocess chains filter, spline and derivative") {
    NormalizedSeries ns = standardize(std::vector<double>{10, 12, 15, 13, 11, 9, 10, 14, 18});
    ns.dt_hours = 1.0;
    const auto ps = preprocess(ns, SmoothingFactor(0.5));
    CHECK(ps.grid.size() == 801);
    CHECK(ps.y.size() == ps.grid.size());
    CHECK(ps.dy.size() + 1 == ps.y.size());
    CHECK(ps.spacing() == doctest::Approx(0.01));
    const auto filtered = gaussian_filter(ns.values, SmoothingFactor(0.5));
    for (std::size_t i = 0; i < filtered.size(); ++i) CHECK(ps.y[100 * i] == filtered[i]);
    CHECK(ps.dy[0] == doctest::Approx((ps.y[1] - ps.y[0]) / 0.01));
}
