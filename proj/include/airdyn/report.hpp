#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "airdyn/embedding.hpp"
#include "airdyn/stability.hpp"
#include "airdyn/sweep.hpp"

namespace airdyn {

using Json = nlohmann::ordered_json;

Json model_json(const StationFit& fit, const FitConfig& cfg);
Json model_json(const QuadraticModel& model, const std::array<SpeciesId, 2>& species);
/// Reads the "coefficients" and "normalization" members written by model_json.
QuadraticModel model_from_json(const Json& j);

Json stability_json(const StabilityReport& report, const QuadraticModel& model);
Json sweep_summary_json(const SweepReport& report);
std::string sweep_csv(const SweepReport& report);

/// time,<y1>,<y2> at every accepted integrator step.
std::string trajectory_csv(const Trajectory& traj, const std::array<SpeciesId, 2>& species);

/// Observed vs model trajectories at the raw timestamps, one panel per species.
std::string time_series_svg(const StationFit& fit);
/// Trajectories in the (y1, y2) plane.
std::string state_svg(const StationFit& fit);
/// Vector field, optional trajectory and real critical points in standardized units.
std::string phase_portrait_svg(const QuadraticModel& model, const StabilityReport& report,
                               const std::vector<Eigen::VectorXd>& trajectory, const std::array<SpeciesId, 2>& species);
/// Worst average RMSE over species against alpha.
std::string sweep_svg(const SweepReport& report);

struct ReconstructionRows {
    std::vector<double> t;
    std::vector<double> measured;
    std::vector<double> reconstructed;
    std::vector<double> hidden;  // optional ground truth
};
std::string reconstruction_csv(const ReconstructionRows& rows);
std::string reconstruction_svg(const ReconstructionRows& rows, const std::string& measured_name,
                               const std::string& hidden_name);

/// Writes `content` to dir/name, creating dir as needed.
void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& content);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace airdyn
