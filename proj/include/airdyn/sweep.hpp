#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "airdyn/dataset.hpp"
#include "airdyn/ode.hpp"
#include "airdyn/preprocess.hpp"
#include "airdyn/regression.hpp"

namespace airdyn {

/// Strictly increasing smoothing factors in (0, 1).
class AlphaGrid {
public:
    explicit AlphaGrid(std::vector<double> values);
    /// 0.01, 0.05, 0.10, ..., 0.95, 0.99.
    static AlphaGrid default_grid();

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    std::vector<double> values_;
};

struct FitConfig {
    std::array<SpeciesId, 2> species{"NO2", "O3"};
    Criterion criterion = Criterion::AIC;
    IntegratorConfig integrator{};
    int refinement = kDefaultRefinement;
};

enum class FitStatus { Ok, Infeasible };
std::string to_string(FitStatus s);

struct FitOutcome {
    StationId station;
    double alpha = 0.0;
    QuadraticModel model;
    std::array<double, 2> rmse{};
    FitStatus status = FitStatus::Ok;
    std::string message;  // reason when infeasible
};

/// Everything computed by one station fit, for reports and plots.
struct StationFit {
    FitOutcome outcome;
    TimeWindow window;
    std::array<NormalizedSeries, 2> normalized;
    std::array<ProcessedSeries, 2> processed;
    std::array<ModelRanking, 2> rankings;
    std::optional<FeasibleSelection> selection;
    Eigen::Vector2d y0 = Eigen::Vector2d::Zero();
    double duration = 0.0;                      // hours
    std::array<std::vector<double>, 2> fitted;  // model at the raw timestamps
};

/// sqrt(mean((original - fitted)^2)).
double rmse(std::span<const double> original, std::span<const double> fitted);

StationFit fit_station_detailed(const StationDataset& ds, const StationId& station, const TimeWindow& w,
                                double alpha, const FitConfig& cfg = {});
FitOutcome station_fit(const StationDataset& ds, const StationId& station, const TimeWindow& w, double alpha,
                       const FitConfig& cfg = {});

struct SweepReport {
    std::array<SpeciesId, 2> species{};
    std::vector<double> alphas;
    std::vector<FitOutcome> outcomes;
    /// avg_rmse[a][i]: mean over ok stations; empty when no station succeeded.
    std::vector<std::array<std::optional<double>, 2>> avg_rmse;
    std::vector<std::array<int, 2>> ok_counts;
    /// (alpha, species index) cells without any ok outcome.
    std::vector<std::pair<double, int>> excluded;
    double argmin_alpha = 0.0;
    double objective = 0.0;

    /// Max over species of avg_rmse at alphas[a], if every species has a value.
    std::optional<double> worst(std::size_t a) const;
};

/// Aggregates already computed outcomes; ties in the objective go to the smaller alpha.
SweepReport summarize(const std::vector<FitOutcome>& outcomes, const AlphaGrid& grid,
                      const std::array<SpeciesId, 2>& species);

SweepReport minmax_alpha(const StationDataset& ds, const std::vector<StationId>& stations, const TimeWindow& w,
                         const AlphaGrid& grid, const FitConfig& cfg = {});

}  // namespace airdyn
