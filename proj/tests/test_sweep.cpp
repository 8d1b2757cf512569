#include <doctest.h>

#include <cmath>
#include <random>

#include "airdyn/sweep.hpp"
#include "airdyn/synth.hpp"

using namespace airdyn;

namespace {

StationDataset planted_station(const StationId& id, const Eigen::Vector2d& y0) {
    SyntheticSpec spec;
    spec.model = planted_model("fig8c-5h");
    spec.y0 = y0;
    spec.duration = 5.0;
    spec.station = id;
    spec.step_seconds = 600;
    return synth_dataset(spec);
}

TimeWindow five_hours() {
    const auto t0 = parse_timestamp("2018-04-01T00:00:00Z");
    return TimeWindow(t0, t0 + std::chrono::hours(5));
}

FitOutcome outcome(const std::string& st, double alpha, double r0, double r1, bool ok = true) {
    FitOutcome o;
    o.station = st;
    o.alpha = alpha;
    o.rmse = {r0, r1};
    o.status = ok ? FitStatus::Ok : FitStatus::Infeasible;
    return o;
}

}  // namespace

TEST_CASE("rmse examples") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK(rmse(a, a) == 0.0);
    const std::vector<double> x{1.0, -1.0}, zero{0.0, 0.0};
    CHECK(rmse(x, zero) == 1.0);
    const std::vector<double> p{3.0}, q{-1.0};
    CHECK(rmse(p, q) == 4.0);
    CHECK_THROWS(rmse(a, x));
    CHECK_THROWS(rmse(std::vector<double>{}, std::vector<double>{}));
}

TEST_CASE("alpha grids") {
    const auto g = AlphaGrid::default_grid();
    REQUIRE(g.size() == 21);
    CHECK(g.values().front() == 0.01);
    CHECK(g.values()[1] == 0.05);
    CHECK(g.values()[10] == doctest::Approx(0.5));
    CHECK(g.values().back() == 0.99);
    CHECK_THROWS(AlphaGrid({0.2, 0.1}));
    CHECK_THROWS(AlphaGrid({0.0, 0.5}));
    CHECK_THROWS(AlphaGrid({0.5, 1.0}));
    CHECK_THROWS(AlphaGrid({0.3, 0.3}));
    CHECK_THROWS(AlphaGrid({}));
}

TEST_CASE("one-value grid returns that value") {
    const auto r = summarize({outcome("A", 0.3, 0.5, 0.7)}, AlphaGrid({0.3}), {"NO2", "O3"});
    CHECK(r.argmin_alpha == 0.3);
    CHECK(r.objective == 0.7);
}

TEST_CASE("summary matches a direct table scan") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::bernoulli_distribution fail(0.15);
    const auto grid = AlphaGrid::default_grid();
    const std::vector<std::string> stations{"A", "B", "C", "D", "E"};
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<FitOutcome> outs;
        for (const auto& s : stations)
            for (double a : grid.values()) outs.push_back(outcome(s, a, u(rng), u(rng), !fail(rng)));
        const auto r = summarize(outs, grid, {"NO2", "O3"});

        // Oracle: per alpha, per species mean over ok rows; max over species; first minimum.
        double best = std::numeric_limits<double>::infinity();
        double best_alpha = -1.0;
        for (double a : grid.values()) {
            double worst = -1.0;
            bool usable = true;
            for (int i = 0; i < 2; ++i) {
                double sum = 0.0;
                int n = 0;
                for (const auto& o : outs) {
                    if (o.alpha == a && o.status == FitStatus::Ok) {
                        sum += o.rmse[i];
                        ++n;
                    }
                }
                if (n == 0) usable = false;
                else worst = std::max(worst, sum / n);
            }
            if (usable && worst < best) {
                best = worst;
                best_alpha = a;
            }
        }
        CHECK(r.argmin_alpha == best_alpha);
        CHECK(r.objective == doctest::Approx(best).epsilon(1e-14));
    }
}

TEST_CASE("saddle table, ties and exclusions") {
    const AlphaGrid grid({0.1, 0.2, 0.3});
    // Species maxima per alpha: 0.1 -> 3 (NO2), 0.2 -> 2 (O3), 0.3 -> 2 (NO2): tie goes to 0.2.
    std::vector<FitOutcome> outs{outcome("A", 0.1, 3, 1), outcome("B", 0.1, 3, 1), outcome("A", 0.2, 1, 2),
                                 outcome("B", 0.2, 1, 2), outcome("A", 0.3, 2, 0), outcome("B", 0.3, 2, 1)};
    auto r = summarize(outs, grid, {"NO2", "O3"});
    CHECK(r.argmin_alpha == 0.2);
    CHECK(r.objective == 2.0);
    CHECK(r.excluded.empty());

    // Infeasible rows drop out of the averages.
    outs.push_back(outcome("C", 0.2, 100, 100, false));
    r = summarize(outs, grid, {"NO2", "O3"});
    CHECK(r.objective == 2.0);
    CHECK(r.ok_counts[1][0] == 2);

    // A cell with no ok outcome is excluded, and its alpha cannot win.
    std::vector<FitOutcome> holes{outcome("A", 0.1, 0.1, 0.1, false), outcome("A", 0.2, 5, 5), outcome("A", 0.3, 4, 6)};
    r = summarize(holes, grid, {"NO2", "O3"});
    CHECK(r.excluded.size() == 2);
    CHECK(r.argmin_alpha == 0.2);
    CHECK_FALSE(r.worst(0).has_value());

    CHECK_THROWS_AS(summarize({outcome("A", 0.1, 1, 1, false)}, grid, {"NO2", "O3"}), NumericError);
    CHECK_THROWS(summarize({outcome("A", 0.15, 1, 1)}, grid, {"NO2", "O3"}));
}

TEST_CASE("removing a station changes averages by the arithmetic of means") {
    const AlphaGrid grid({0.1});
    std::vector<FitOutcome> outs{outcome("A", 0.1, 1.0, 4.0), outcome("B", 0.1, 2.0, 5.0), outcome("C", 0.1, 6.0, 0.0)};
    const auto all = summarize(outs, grid, {"NO2", "O3"});
    outs.pop_back();
    const auto two = summarize(outs, grid, {"NO2", "O3"});
    CHECK(*all.avg_rmse[0][0] * 3 - 6.0 == doctest::Approx(*two.avg_rmse[0][0] * 2));
    CHECK(*all.avg_rmse[0][1] * 3 - 0.0 == doctest::Approx(*two.avg_rmse[0][1] * 2));
}

TEST_CASE("noise-free planted station fits closely at small alpha") {
    const auto ds = planted_station("P1", {2.0, 1.0});
    const auto fine = fit_station_detailed(ds, "P1", five_hours(), 0.01);
    REQUIRE(fine.outcome.status == FitStatus::Ok);
    CHECK(fine.outcome.rmse[0] <= 0.05);
    CHECK(fine.outcome.rmse[1] <= 0.05);
    CHECK(fine.y0(0) == fine.processed[0].y.front());
    CHECK(fine.duration == 5.0);
    CHECK(fine.fitted[0].size() == 31);

    // Recompute the stored rmse from the stored fitted samples.
    for (int i = 0; i < 2; ++i) CHECK(rmse(fine.normalized[i].values, fine.fitted[i]) == fine.outcome.rmse[i]);

    const auto coarse = station_fit(ds, "P1", five_hours(), 0.99);
    if (coarse.status == FitStatus::Ok) {
        CHECK(std::max(coarse.rmse[0], coarse.rmse[1]) >= std::max(fine.outcome.rmse[0], fine.outcome.rmse[1]));
    }
}

TEST_CASE("missing data surfaces the dataset error") {
    auto ds = planted_station("P1", {2.0, 1.0});
    RawSeries s = ds.at("P1", "O3");
    s.values[3].reset();
    StationDataset holes;
    holes.add(ds.at("P1", "NO2"));
    holes.add(s);
    try {
        station_fit(holes, "P1", five_hours(), 0.1);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("2018-04-01T00:30:00Z") != std::string::npos);
    }
}

TEST_CASE("sweep over two stations is deterministic and consistent") {
    StationDataset ds = planted_station("P1", {2.0, 1.0});
    const auto other = planted_station("P2", {1.5, 1.5});
    ds.add(other.at("P2", "NO2"));
    ds.add(other.at("P2", "O3"));
    const AlphaGrid grid({0.01, 0.3, 0.6});
    const auto r1 = minmax_alpha(ds, {"P1", "P2"}, five_hours(), grid);
    const auto r2 = minmax_alpha(ds, {"P1", "P2"}, five_hours(), grid);
    CHECK(r1.outcomes.size() == 6);
    CHECK(r1.argmin_alpha == r2.argmin_alpha);
    CHECK(r1.objective == r2.objective);
    for (std::size_t k = 0; k < r1.outcomes.size(); ++k) {
        CHECK(r1.outcomes[k].rmse == r2.outcomes[k].rmse);
        CHECK(r1.outcomes[k].model.coeffs == r2.outcomes[k].model.coeffs);
    }

    // Objective recomputed from the stored outcomes.
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto& o : r1.outcomes)
            if (o.alpha == r1.argmin_alpha && o.status == FitStatus::Ok) {
                sum += o.rmse[i];
                ++n;
            }
        REQUIRE(n > 0);
        worst = std::max(worst, sum / n);
    }
    CHECK(worst == doctest::Approx(r1.objective).epsilon(1e-14));
}
