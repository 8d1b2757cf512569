#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "airdyn/regression.hpp"

using namespace airdyn;

namespace {

FeatureLibrary random_library(std::mt19937_64& rng, Eigen::Index m, int n, double signal = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd f(m, n + 1);
    f.col(0).setOnes();
    for (Eigen::Index i = 0; i < m; ++i)
        for (int j = 1; j <= n; ++j) f(i, j) = g(rng);
    Eigen::VectorXd beta(n + 1);
    for (int j = 0; j <= n; ++j) beta(j) = (j % 2 == 0) ? signal * g(rng) : 0.0;
    Eigen::MatrixXd t(m, 1);
    for (Eigen::Index i = 0; i < m; ++i) t(i, 0) = f.row(i).dot(beta) + g(rng);
    std::vector<std::string> labels;
    for (int j = 0; j <= n; ++j) labels.push_back("c" + std::to_string(j));
    return FeatureLibrary(f, t, labels);
}

// Independent enumeration: normal equations solved by LDLT, scored directly.
struct OracleBest {
    std::uint32_t bits = 0;
    double aic = std::numeric_limits<double>::infinity();
};

OracleBest oracle_best_aic(const FeatureLibrary& lib) {
    const int n = lib.n();
    const Eigen::Index m = lib.rows();
    const Eigen::VectorXd y = lib.targets().col(0);
    OracleBest best;
    int best_k = 0;
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        std::vector<Eigen::Index> cols{0};
        for (int j = 0; j < n; ++j)
            if (bits & (1u << j)) cols.push_back(j + 1);
        Eigen::MatrixXd a(m, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) a.col(static_cast<Eigen::Index>(c)) = lib.matrix().col(cols[c]);
        const Eigen::VectorXd b = (a.transpose() * a).ldlt().solve(a.transpose() * y);
        const double rss = (y - a * b).squaredNorm();
        const int k = static_cast<int>(cols.size()) - 1;
        const double aic = static_cast<double>(m) * std::log(std::max(rss, 1e-12 * m) / m) + 2.0 * k;
        // Lexicographic order over (col1..coln) with false < true equals
        // comparing the bit-reversed masks.
        auto lex_key = [n](std::uint32_t v) {
            std::uint32_t r = 0;
            for (int j = 0; j < n; ++j)
                if (v & (1u << j)) r |= 1u << (n - 1 - j);
            return r;
        };
        const bool better = aic < best.aic - 1e-9 ||
                            (std::abs(aic - best.aic) <= 1e-9 && (k < best_k || (k == best_k && lex_key(bits) < lex_key(best.bits))));
        if (better) {
            best = {bits, aic};
            best_k = k;
        }
    }
    return best;
}

// Proximal gradient (ISTA) on the same objective, run far past convergence.
Eigen::VectorXd ista(const FeatureLibrary& lib, double lambda, int iterations) {
    const auto& f = lib.matrix();
    const Eigen::VectorXd y = lib.targets().col(0);
    const double step = 1.0 / (f.transpose() * f).eigenvalues().real().maxCoeff();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(f.cols());
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd z = b + step * f.transpose() * (y - f * b);
        for (Eigen::Index j = 1; j < z.size(); ++j) {
            const double t = step * lambda;
            z(j) = z(j) > t ? z(j) - t : (z(j) < -t ? z(j) + t : 0.0);
        }
        b = z;
    }
    return b;
}

}  // namespace

TEST_CASE("quadratic feature rows and labels") {
    const auto zero = quadratic_features(0, 0);
    CHECK(zero(0) == 1.0);
    for (int k = 1; k < 6; ++k) CHECK(zero(k) == 0.0);
    const auto r = quadratic_features(2, 3);
    const double want[] = {1, 2, 3, 4, 6, 9};
    for (int k = 0; k < 6; ++k) CHECK(r(k) == want[k]);
    const auto labels = quadratic_labels("NO2", "O3");
    REQUIRE(labels.size() == 6);
    CHECK(labels[3] == "NO2^2");
    CHECK(labels[4] == "NO2*O3");
    CHECK(labels[5] == "O3^2");
}

TEST_CASE("build_library aligns features with backward differences") {
    ProcessedSeries a, b;
    for (int j = 0; j < 8; ++j) {
        a.grid.push_back(0.5 * j);
        a.y.push_back(j * j);
        b.y.push_back(1.0 - j);
    }
    b.grid = a.grid;
    a.dy = differentiate(a.y, 0.5);
    b.dy = differentiate(b.y, 0.5);
    const auto lib = build_library(a, b, "NO2", "O3");
    CHECK(lib.rows() == 7);
    CHECK(lib.n() == 5);
    CHECK(lib.matrix()(0, 1) == 1.0);  // state at the second grid point
    CHECK(lib.matrix()(0, 2) == 0.0);
    CHECK(lib.targets()(0, 0) == 2.0);
    CHECK(lib.targets()(3, 1) == -2.0);

    b.grid.back() = 9.0;
    CHECK_THROWS_AS(build_library(a, b), DataError);
}

TEST_CASE("feature library invariants") {
    Eigen::MatrixXd f = Eigen::MatrixXd::Ones(3, 2);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(3, 1);
    CHECK_NOTHROW(FeatureLibrary(f, t, {"1", "x"}));
    f(1, 0) = 2.0;
    CHECK_THROWS_AS(FeatureLibrary(f, t, {"1", "x"}), DataError);
    f(1, 0) = 1.0;
    f(2, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(FeatureLibrary(f, t, {"1", "x"}), DataError);
    CHECK_THROWS_AS(FeatureLibrary(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Zero(2, 1), {"1", "a", "b"}), DataError);
}

TEST_CASE("subset masks") {
    const SubsetMask m(0b00101, 5);
    CHECK(m.selects(1));
    CHECK_FALSE(m.selects(2));
    CHECK(m.selects(3));
    CHECK(m.popcount() == 2);
    CHECK(SubsetMask::full(5).bits() == 31u);
    // (1,0,0,0,0) vs (0,1,0,0,0): the latter is lexicographically smaller.
    CHECK(SubsetMask(0b00010, 5).lex_less(SubsetMask(0b00001, 5)));
    CHECK_THROWS_AS(SubsetMask(0b100000, 5), DataError);
}

TEST_CASE("criterion names") {
    CHECK(parse_criterion("AIC") == Criterion::AIC);
    CHECK(parse_criterion("bic") == Criterion::BIC);
    CHECK(parse_criterion("adjr2") == Criterion::AdjR2);
    CHECK_THROWS_AS(parse_criterion("cp"), UsageError);
}

TEST_CASE("fit_subset examples") {
    std::mt19937_64 rng(1);
    const auto lib = random_library(rng, 40, 5);
    const Eigen::VectorXd y = lib.targets().col(0);

    SUBCASE("empty mask is the mean") {
        const auto fit = fit_subset(lib, 0, SubsetMask(0, 5));
        CHECK(fit.beta(0) == doctest::Approx(y.mean()).epsilon(1e-12));
        CHECK(fit.rss == doctest::Approx((y.array() - y.mean()).square().sum()).epsilon(1e-12));
        CHECK(fit.k == 0);
        for (int j = 1; j <= 5; ++j) CHECK(fit.beta(j) == 0.0);
    }
    SUBCASE("residual is orthogonal to the selected columns") {
        const auto fit = fit_subset(lib, 0, SubsetMask(0b10110, 5));
        const Eigen::VectorXd r = y - lib.matrix() * fit.beta;
        for (int j : {0, 2, 3, 5}) {
            CHECK(std::abs(lib.matrix().col(j).dot(r)) <= 1e-8 * lib.matrix().col(j).norm() * r.norm());
        }
        CHECK(fit.beta(1) == 0.0);
        CHECK(fit.beta(4) == 0.0);
    }
    SUBCASE("stored scores are reproducible from rss and k") {
        for (std::uint32_t bits = 0; bits < 32; ++bits) {
            const auto fit = fit_subset(lib, 0, SubsetMask(bits, 5));
            CHECK(fit.aic == aic_score(fit.rss, fit.m, fit.k));
            CHECK(fit.bic == bic_score(fit.rss, fit.m, fit.k));
            CHECK(fit.adj_r2 == adjusted_r2(fit.r2, fit.m, fit.k));
            CHECK(fit.k == SubsetMask(bits, 5).popcount());
        }
    }
    SUBCASE("adding a column never increases rss") {
        for (std::uint32_t bits = 0; bits < 32; ++bits) {
            const double base = fit_subset(lib, 0, SubsetMask(bits, 5)).rss;
            for (int j = 0; j < 5; ++j) {
                if (bits & (1u << j)) continue;
                CHECK(fit_subset(lib, 0, SubsetMask(bits | (1u << j), 5)).rss <= base + 1e-10);
            }
        }
    }
}

TEST_CASE("exact fit uses the rss floor") {
    Eigen::MatrixXd f(3, 3);
    f << 1, 1, 5, 1, 2, -1, 1, 4, 2;
    Eigen::MatrixXd t(3, 1);
    t << 2, 4, 8;  // 2 * column 1
    const FeatureLibrary lib(f, t, {"1", "a", "b"});
    const auto fit = fit_subset(lib, 0, SubsetMask(0b01, 2));
    CHECK(fit.rss <= 1e-20);
    CHECK(fit.aic == doctest::Approx(3.0 * std::log(1e-12) + 2.0));
    CHECK_THROWS_AS(fit_subset(lib, 0, SubsetMask(0b11, 2)), NumericError);  // m <= k + 1
}

TEST_CASE("rank-deficient masks are infeasible and ranked last") {
    std::mt19937_64 rng(2);
    auto base = random_library(rng, 30, 3);
    Eigen::MatrixXd f = base.matrix();
    f.col(3) = 2.0 * f.col(1);
    const FeatureLibrary lib(f, base.targets(), base.labels());
    CHECK_THROWS_AS(fit_subset(lib, 0, SubsetMask(0b101, 3)), RankDeficient);
    const auto r = best_subset(lib, 0);
    CHECK(r.fits.size() == 8);
    CHECK(r.feasible_count() == 6);
    CHECK_FALSE(r.fits[6].feasible);
    CHECK_FALSE(r.fits[7].feasible);
}

TEST_CASE("best_subset enumerates 32 models in a consistent order") {
    std::mt19937_64 rng(4);
    const auto lib = random_library(rng, 60, 5);
    for (auto c : {Criterion::AIC, Criterion::BIC, Criterion::AdjR2}) {
        const auto r = best_subset(lib, 0, c);
        REQUIRE(r.fits.size() == 32);
        for (std::size_t i = 1; i < r.fits.size(); ++i) CHECK_FALSE(ranks_before(r.fits[i], r.fits[i - 1], c));
        if (c == Criterion::AIC) {
            const auto full = fit_subset(lib, 0, SubsetMask::full(5));
            CHECK(r.best().aic <= full.aic);
        }
    }
}

TEST_CASE("noiseless target from one column selects exactly that column") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd f(50, 6);
    f.col(0).setOnes();
    for (Eigen::Index i = 0; i < 50; ++i)
        for (int j = 1; j < 6; ++j) f(i, j) = g(rng);
    Eigen::MatrixXd t = 1.5 * f.col(1);
    const FeatureLibrary lib(f, t, quadratic_labels());
    const auto r = best_subset(lib, 0);
    CHECK(r.best().mask == SubsetMask(0b00001, 5));
    CHECK(r.best().beta(1) == doctest::Approx(1.5));
}

TEST_CASE("best_subset agrees with an independent enumeration") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const auto lib = random_library(rng, 50, 5);
        const auto oracle = oracle_best_aic(lib);
        const auto r = best_subset(lib, 0);
        CHECK(r.best().mask.bits() == oracle.bits);
        CHECK(r.best().aic == doctest::Approx(oracle.aic).epsilon(1e-10));
    }
}

TEST_CASE("lasso") {
    std::mt19937_64 rng(10);
    const auto lib = random_library(rng, 20, 5, 2.0);

    SUBCASE("lambda zero is least squares") {
        const auto ols = fit_subset(lib, 0, SubsetMask::full(5));
        const auto res = lasso(lib, 0, 0.0, {1e-13, 1'000'000});
        CHECK((res.beta - ols.beta).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("lambda above the threshold zeroes every penalized coefficient") {
        const double lmax = lasso_lambda_max(lib, 0);
        for (double l : {lmax, 1.5 * lmax}) {
            const auto res = lasso(lib, 0, l);
            CHECK(res.nonzeros() == 0);
            CHECK(res.beta(0) == doctest::Approx(lib.targets().col(0).mean()));
        }
        CHECK(lasso(lib, 0, 0.9 * lmax).nonzeros() > 0);
    }
    SUBCASE("mid-path objective matches a proximal-gradient reference") {
        const double l = 0.3 * lasso_lambda_max(lib, 0);
        const auto res = lasso(lib, 0, l);
        const auto ref = ista(lib, l, 200000);
        CHECK(std::abs(lasso_objective(lib, 0, l, res.beta) - lasso_objective(lib, 0, l, ref)) <= 1e-8);
        CHECK(res.kkt_residual <= 1e-6);
    }
    SUBCASE("warm-started path has non-increasing support size in lambda") {
        const double lmax = lasso_lambda_max(lib, 0);
        std::optional<Eigen::VectorXd> warm;
        int prev = 0;
        for (int s = 0; s <= 40; ++s) {
            const double l = lmax * std::pow(0.85, s);
            const auto res = lasso(lib, 0, l, {}, warm);
            CHECK(res.nonzeros() >= prev);
            CHECK(res.kkt_residual <= 1e-6);
            prev = res.nonzeros();
            warm = res.beta;
        }
    }
    SUBCASE("iteration cap signals non-convergence") {
        CHECK_THROWS_AS(lasso(lib, 0, 0.0, {1e-300, 2}), LassoNotConverged);
    }
    CHECK_THROWS_AS(lasso(lib, 0, -1.0), DataError);
}
