#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "airdyn/dataset.hpp"
#include "airdyn/ode.hpp"

namespace airdyn {

struct LeightonParams {
    std::function<double(double)> J;  // photolysis rate at time t (1/hour)
    double k3 = 1.0;
    double j_constant = 0.0;  // set by constant(); informational only
    std::string j_label = "custom";

    static LeightonParams constant(double j, double k3);
    /// J(t) = peak * max(0, sin(pi * (t - sunrise) / daylength)) repeated every 24 h.
    static LeightonParams diurnal(double peak, double k3, double sunrise = 6.0, double daylength = 12.0);
};

struct KineticsState {
    double no2 = 0.0;
    double no = 0.0;
    double o3 = 0.0;

    Eigen::Vector3d vec() const { return {no2, no, o3}; }
};

/// (d[NO2], d[NO], d[O3]) from mass-action kinetics of the photostationary cycle.
Eigen::Vector3d leighton_rhs(const LeightonParams& p, const KineticsState& s, double t);
OdeSystem leighton_system(const LeightonParams& p);

Trajectory simulate_kinetics(const LeightonParams& p, const KineticsState& y0, double duration,
                             const IntegratorConfig& cfg = {});

struct SyntheticSpec {
    std::variant<QuadraticModel, LeightonParams> model;
    Eigen::VectorXd y0;  // 2 entries for a quadratic model, 3 (NO2, NO, O3) for kinetics
    double duration = 24.0;  // hours
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    int step_seconds = 3600;  // sampling interval
    StationId station = "SYN";
    Timestamp t0 = parse_timestamp("2018-04-01T00:00:00Z");
};

/// Integrates at rtol 1e-14 and samples every `step_seconds` (hourly by default),
/// including t = 0 and every sample time up to `duration`.
/// Rows are (NO2, O3) states; noise is added afterwards.
std::vector<Eigen::Vector2d> synth_samples(const SyntheticSpec& spec);
/// NO2 and O3 series for one station with seeded Gaussian noise;
/// kinetics concentrations are clipped at zero.
StationDataset synth_dataset(const SyntheticSpec& spec);

/// Fitted 5- and 11-hour window systems used as planted ground truth ("fig8c-5h", "fig8c-11h").
QuadraticModel planted_model(const std::string& name);
std::vector<std::string> planted_names();

/// Initial state and window length (hours) that integrate cleanly under the
/// default derivative guard. The 11-hour system escapes its unstable spiral
/// within the window from almost everywhere, so it starts next to that point.
struct PlantedDefaults {
    Eigen::Vector2d y0;
    double duration;
};
PlantedDefaults planted_defaults(const std::string& name);

}  // namespace airdyn
