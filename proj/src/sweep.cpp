#include "airdyn/sweep.hpp"

#include <algorithm>
#include <cmath>

namespace airdyn {

namespace {

const char* kModule = "sweep";

}  // namespace

AlphaGrid::AlphaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DataError(kModule, "alpha grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] > 0.0 && values_[i] < 1.0)) throw DataError(kModule, "alpha grid values must lie in (0, 1)");
        if (i > 0 && !(values_[i] > values_[i - 1])) throw DataError(kModule, "alpha grid must be strictly increasing");
    }
}

AlphaGrid AlphaGrid::default_grid() {
    std::vector<double> v{0.01};
    for (int k = 1; k <= 19; ++k) v.push_back(0.05 * k);
    v.push_back(0.99);
    return AlphaGrid(std::move(v));
}

std::string to_string(FitStatus s) { return s == FitStatus::Ok ? "ok" : "infeasible"; }

double rmse(std::span<const double> original, std::span<const double> fitted) {
    if (original.size() != fitted.size()) {
        throw DataError(kModule, "rmse length mismatch: " + std::to_string(original.size()) + " vs " +
                                     std::to_string(fitted.size()));
    }
    if (original.empty()) throw DataError(kModule, "rmse of an empty series");
    double acc = 0.0;
    for (std::size_t j = 0; j < original.size(); ++j) {
        const double d = original[j] - fitted[j];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(original.size()));
}

StationFit fit_station_detailed(const StationDataset& ds, const StationId& station, const TimeWindow& w, double alpha,
                                const FitConfig& cfg) {
    const SmoothingFactor sf(alpha);
    const auto raw = select_window(ds, station, {cfg.species[0], cfg.species[1]}, w);

    StationFit fit;
    fit.window = w;
    fit.outcome.station = station;
    fit.outcome.alpha = alpha;
    for (std::size_t i = 0; i < 2; ++i) {
        fit.normalized[i] = standardize(raw[i]);
        fit.processed[i] = preprocess(fit.normalized[i], sf, cfg.refinement);
    }
    const auto lib = build_library(fit.processed[0], fit.processed[1], cfg.species[0], cfg.species[1]);
    for (int i = 0; i < 2; ++i) fit.rankings[static_cast<std::size_t>(i)] = best_subset(lib, i, cfg.criterion);

    const std::size_t m = fit.normalized[0].values.size();
    const double dt = fit.normalized[0].dt_hours;
    fit.duration = dt * static_cast<double>(m - 1);
    fit.y0 = {fit.processed[0].y.front(), fit.processed[1].y.front()};
    const std::array<NormParams, 2> norm{NormParams{fit.normalized[0].mu, fit.normalized[0].sigma},
                                         NormParams{fit.normalized[1].mu, fit.normalized[1].sigma}};
    fit.outcome.model.norm = norm;

    try {
        fit.selection = select_feasible_model(fit.rankings, fit.y0, {0.0, fit.duration}, cfg.integrator, norm);
    } catch (const AllModelsInfeasible& e) {
        fit.outcome.status = FitStatus::Infeasible;
        fit.outcome.message = e.what();
        fit.outcome.rmse = {NAN, NAN};
        return fit;
    }
    fit.outcome.model = fit.selection->model;
    for (std::size_t i = 0; i < 2; ++i) fit.fitted[i].resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto s = fit.selection->trajectory.sample(dt * static_cast<double>(j));
        fit.fitted[0][j] = s(0);
        fit.fitted[1][j] = s(1);
    }
    for (std::size_t i = 0; i < 2; ++i) fit.outcome.rmse[i] = rmse(fit.normalized[i].values, fit.fitted[i]);
    return fit;
}

FitOutcome station_fit(const StationDataset& ds, const StationId& station, const TimeWindow& w, double alpha,
                       const FitConfig& cfg) {
    return fit_station_detailed(ds, station, w, alpha, cfg).outcome;
}

std::optional<double> SweepReport::worst(std::size_t a) const {
    const auto& cell = avg_rmse.at(a);
    if (!cell[0] || !cell[1]) return std::nullopt;
    return std::max(*cell[0], *cell[1]);
}

SweepReport summarize(const std::vector<FitOutcome>& outcomes, const AlphaGrid& grid,
                      const std::array<SpeciesId, 2>& species) {
    SweepReport r;
    r.species = species;
    r.alphas = grid.values();
    r.outcomes = outcomes;
    const std::size_t na = r.alphas.size();
    std::vector<std::array<double, 2>> sums(na, {0.0, 0.0});
    r.ok_counts.assign(na, {0, 0});
    for (const auto& o : outcomes) {
        const auto it = std::find(r.alphas.begin(), r.alphas.end(), o.alpha);
        if (it == r.alphas.end()) throw DataError(kModule, "outcome alpha " + std::to_string(o.alpha) + " not on the grid");
        if (o.status != FitStatus::Ok) continue;
        const auto a = static_cast<std::size_t>(it - r.alphas.begin());
        for (std::size_t i = 0; i < 2; ++i) {
            sums[a][i] += o.rmse[i];
            r.ok_counts[a][i] += 1;
        }
    }
    r.avg_rmse.assign(na, {std::nullopt, std::nullopt});
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t i = 0; i < 2; ++i) {
            if (r.ok_counts[a][i] > 0) {
                r.avg_rmse[a][i] = sums[a][i] / r.ok_counts[a][i];
            } else {
                r.excluded.emplace_back(r.alphas[a], static_cast<int>(i));
            }
        }
    }
    std::optional<std::size_t> best;
    for (std::size_t a = 0; a < na; ++a) {
        const auto v = r.worst(a);
        if (v && (!best || *v < *r.worst(*best))) best = a;
    }
    if (!best) throw NumericError(kModule, "every alpha has a species without a feasible fit");
    r.argmin_alpha = r.alphas[*best];
    r.objective = *r.worst(*best);
    return r;
}

SweepReport minmax_alpha(const StationDataset& ds, const std::vector<StationId>& stations, const TimeWindow& w,
                         const AlphaGrid& grid, const FitConfig& cfg) {
    if (stations.empty()) throw DataError(kModule, "no stations to sweep");
    std::vector<FitOutcome> outcomes;
    for (const auto& s : stations) {
        for (double a : grid.values()) outcomes.push_back(station_fit(ds, s, w, a, cfg));
    }
    return summarize(outcomes, grid, cfg.species);
}

}  // namespace airdyn
