#include "airdyn/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace airdyn {

namespace {

const char* kModule = "synth";

// Per-step error control accumulates to roughly a hundred times rtol over a
// window, so the oracle runs well below 1e-10 to keep samples within 1e-8.
IntegratorConfig fine_config() {
    IntegratorConfig cfg;
    cfg.rtol = 1e-14;
    cfg.atol = 1e-14;
    cfg.max_steps = 10'000'000;
    return cfg;
}

// Integrates piecewise so that every sample time is an exact step endpoint.
std::vector<Eigen::VectorXd> sample_grid(const OdeSystem& sys, const Eigen::VectorXd& y0, double duration, int step_seconds) {
    if (step_seconds <= 0) throw DataError(kModule, "sampling step must be positive");
    const double dt = step_seconds / 3600.0;
    const auto n = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
    std::vector<Eigen::VectorXd> out{y0};
    Eigen::VectorXd y = y0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto traj = integrate(sys, y, dt * static_cast<double>(k), dt * static_cast<double>(k + 1), fine_config());
        y = traj.final_state();
        out.push_back(y);
    }
    return out;
}

}  // namespace

LeightonParams LeightonParams::constant(double j, double k3) {
    if (!(j >= 0.0) || !(k3 > 0.0)) throw DataError(kModule, "need J >= 0 and k3 > 0");
    LeightonParams p;
    p.J = [j](double) { return j; };
    p.k3 = k3;
    p.j_constant = j;
    p.j_label = "constant";
    return p;
}

LeightonParams LeightonParams::diurnal(double peak, double k3, double sunrise, double daylength) {
    if (!(peak >= 0.0) || !(k3 > 0.0) || !(daylength > 0.0 && daylength <= 24.0)) {
        throw DataError(kModule, "invalid diurnal photolysis parameters");
    }
    LeightonParams p;
    p.J = [=](double t) {
        const double h = std::fmod(std::fmod(t - sunrise, 24.0) + 24.0, 24.0);
        return h < daylength ? peak * std::sin(std::numbers::pi * h / daylength) : 0.0;
    };
    p.k3 = k3;
    p.j_constant = peak;
    p.j_label = "diurnal";
    return p;
}

Eigen::Vector3d leighton_rhs(const LeightonParams& p, const KineticsState& s, double t) {
    const double photolysis = p.J(t) * s.no2;
    const double titration = p.k3 * s.no * s.o3;
    return {-photolysis + titration, photolysis - titration, photolysis - titration};
}

OdeSystem leighton_system(const LeightonParams& p) {
    if (!p.J || !(p.k3 > 0.0)) throw DataError(kModule, "kinetics need a photolysis function and k3 > 0");
    OdeSystem sys;
    sys.dim = 3;
    sys.rhs = [p](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return leighton_rhs(p, KineticsState{y(0), y(1), y(2)}, t);
    };
    sys.jacobian = [p](double t, const Eigen::VectorXd& y) -> Eigen::MatrixXd {
        const double j = p.J(t);
        Eigen::Matrix3d m;
        m << -j, p.k3 * y(2), p.k3 * y(1),  //
            j, -p.k3 * y(2), -p.k3 * y(1),  //
            j, -p.k3 * y(2), -p.k3 * y(1);
        return m;
    };
    return sys;
}

Trajectory simulate_kinetics(const LeightonParams& p, const KineticsState& y0, double duration,
                             const IntegratorConfig& cfg) {
    if (!(y0.no2 >= 0.0 && y0.no >= 0.0 && y0.o3 >= 0.0)) throw DataError(kModule, "concentrations must be nonnegative");
    if (!(duration > 0.0)) throw DataError(kModule, "duration must be positive");
    return integrate(leighton_system(p), Eigen::VectorXd(y0.vec()), 0.0, duration, cfg);
}

std::vector<Eigen::Vector2d> synth_samples(const SyntheticSpec& spec) {
    if (!(spec.duration > 0.0)) throw DataError(kModule, "duration must be positive");
    if (!(spec.noise_sigma >= 0.0)) throw DataError(kModule, "noise sigma must be nonnegative");
    std::vector<Eigen::Vector2d> out;
    if (const auto* m = std::get_if<QuadraticModel>(&spec.model)) {
        if (spec.y0.size() != 2) throw DataError(kModule, "a quadratic model needs a 2-component initial state");
        for (const auto& s : sample_grid(as_system(*m), spec.y0, spec.duration, spec.step_seconds)) out.emplace_back(s(0), s(1));
    } else {
        const auto& p = std::get<LeightonParams>(spec.model);
        if (spec.y0.size() != 3) throw DataError(kModule, "kinetics need an (NO2, NO, O3) initial state");
        if ((spec.y0.array() < 0.0).any()) throw DataError(kModule, "concentrations must be nonnegative");
        for (const auto& s : sample_grid(leighton_system(p), spec.y0, spec.duration, spec.step_seconds)) out.emplace_back(s(0), s(2));
    }
    return out;
}

StationDataset synth_dataset(const SyntheticSpec& spec) {
    auto samples = synth_samples(spec);
    const bool concentrations = std::holds_alternative<LeightonParams>(spec.model);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::array<RawSeries, 2> series;
    const std::array<SpeciesId, 2> names{"NO2", "O3"};
    for (std::size_t i = 0; i < 2; ++i) {
        series[i].station = spec.station;
        series[i].species = names[i];
        series[i].t0 = spec.t0;
        series[i].step = std::chrono::seconds{spec.step_seconds};
    }
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < 2; ++i) {
            double v = s(static_cast<Eigen::Index>(i));
            if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
            if (concentrations) v = std::max(v, 0.0);
            series[i].values.emplace_back(v);
        }
    }
    StationDataset ds;
    for (auto& s : series) ds.add(std::move(s));
    return ds;
}

QuadraticModel planted_model(const std::string& name) {
    Eigen::Matrix<double, 2, kQuadraticTerms> c;
    if (name == "fig8c-5h") {
        c << -0.7561, -1.2358, -1.3949, 0.0, -1.0494, -0.6539,  //
            -0.6142, 0.6275, 0.7181, 0.0, 0.2640, 0.1814;
    } else if (name == "fig8c-11h") {
        c << -0.4279, -0.7495, -0.8854, -6.3679, -12.488, -5.8383,  //
            0.4317, 0.9800, 1.0719, 2.7402, 5.2943, 2.2776;
    } else {
        throw UsageError("unknown planted model '" + name + "' (expected fig8c-5h or fig8c-11h)");
    }
    return QuadraticModel(c);
}

std::vector<std::string> planted_names() { return {"fig8c-5h", "fig8c-11h"}; }

PlantedDefaults planted_defaults(const std::string& name) {
    if (name == "fig8c-5h") return {Eigen::Vector2d(2.0, 1.0), 5.0};
    if (name == "fig8c-11h") return {Eigen::Vector2d(0.875, -0.963), 11.0};
    throw UsageError("unknown planted model '" + name + "' (expected fig8c-5h or fig8c-11h)");
}

}  // namespace airdyn
