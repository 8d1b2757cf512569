#include "airdyn/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "airdyn/svg.hpp"

namespace airdyn {

namespace {

const char* kModule = "report";

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json complex_json(Complex c) { return Json{{"re", number(c.real())}, {"im", number(c.imag())}}; }

Json coeff_rows(const Eigen::Matrix<double, 2, kQuadraticTerms>& c) {
    Json rows = Json::array();
    for (int i = 0; i < 2; ++i) {
        Json row = Json::array();
        for (int k = 0; k < kQuadraticTerms; ++k) row.push_back(number(c(i, k)));
        rows.push_back(row);
    }
    return rows;
}

Json norm_json(const std::array<NormParams, 2>& norm, const std::array<SpeciesId, 2>& species) {
    Json out = Json::array();
    for (std::size_t i = 0; i < 2; ++i) out.push_back({{"species", species[i]}, {"mu", norm[i].mu}, {"sigma", norm[i].sigma}});
    return out;
}

Json fit_json(const RegressionFit& f) {
    Json mask = Json::array();
    for (bool b : f.mask.flags()) mask.push_back(b);
    Json beta = Json::array();
    for (Eigen::Index k = 0; k < f.beta.size(); ++k) beta.push_back(number(f.beta(k)));
    return {{"mask", mask},     {"k", f.k},           {"feasible", f.feasible}, {"beta", beta},
            {"rss", number(f.rss)}, {"r2", number(f.r2)}, {"aic", number(f.aic)},  {"bic", number(f.bic)},
            {"adj_r2", number(f.adj_r2)}};
}

std::vector<double> column(const std::vector<Eigen::VectorXd>& v, Eigen::Index i) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(x(i));
    return out;
}

std::string class_color(std::optional<PointClass> c) {
    if (!c) return "#888888";
    switch (*c) {
        case PointClass::StableNode: return "#1a9850";
        case PointClass::UnstableNode: return "#d73027";
        case PointClass::Saddle: return "#4575b4";
        case PointClass::StableSpiral: return "#66bd63";
        case PointClass::UnstableSpiral: return "#f46d43";
        case PointClass::Degenerate: return "#888888";
    }
    return "#888888";
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

Json model_json(const QuadraticModel& model, const std::array<SpeciesId, 2>& species) {
    Json j;
    j["species"] = species;
    j["labels"] = quadratic_labels(species[0], species[1]);
    j["coefficients"] = coeff_rows(model.coeffs);
    j["normalization"] = norm_json(model.norm, species);
    bool physical_ok = model.norm[0].sigma > 0.0 && model.norm[1].sigma > 0.0;
    if (physical_ok) j["physical_coefficients"] = coeff_rows(to_physical(model).coeffs);
    return j;
}

Json model_json(const StationFit& fit, const FitConfig& cfg) {
    Json j;
    j["station"] = fit.outcome.station;
    j["window"] = {{"from", format_timestamp(fit.window.start)}, {"to", format_timestamp(fit.window.end)}};
    j["alpha"] = fit.outcome.alpha;
    j["criterion"] = to_string(cfg.criterion);
    j["status"] = to_string(fit.outcome.status);
    if (!fit.outcome.message.empty()) j["message"] = fit.outcome.message;
    const Json base = model_json(fit.outcome.model, cfg.species);
    for (const auto& [k, v] : base.items()) j[k] = v;
    j["y0"] = {fit.y0(0), fit.y0(1)};
    j["duration_hours"] = fit.duration;
    j["rmse"] = {number(fit.outcome.rmse[0]), number(fit.outcome.rmse[1])};
    if (fit.selection) {
        j["selection"] = {{"ranks", {fit.selection->ranks[0], fit.selection->ranks[1]}},
                          {"discarded", fit.selection->discarded},
                          {"fits", {fit_json(fit.selection->fits[0]), fit_json(fit.selection->fits[1])}},
                          {"accepted_steps", fit.selection->trajectory.accepted_steps()},
                          {"rejected_steps", fit.selection->trajectory.rejected_steps}};
    }
    Json rankings = Json::array();
    for (const auto& r : fit.rankings) {
        Json top = Json::array();
        for (std::size_t i = 0; i < r.fits.size() && i < 5; ++i) top.push_back(fit_json(r.fits[i]));
        rankings.push_back({{"species", cfg.species[static_cast<std::size_t>(r.species)]},
                            {"feasible", r.feasible_count()},
                            {"top", top}});
    }
    j["rankings"] = rankings;
    return j;
}

QuadraticModel model_from_json(const Json& j) {
    try {
        QuadraticModel m;
        const auto& rows = j.at("coefficients");
        if (rows.size() != 2) throw DataError(kModule, "model JSON needs 2 coefficient rows");
        for (int i = 0; i < 2; ++i) {
            const auto& row = rows.at(static_cast<std::size_t>(i));
            if (row.size() != kQuadraticTerms) throw DataError(kModule, "each coefficient row needs 6 entries");
            for (int k = 0; k < kQuadraticTerms; ++k) m.coeffs(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
        }
        if (j.contains("normalization")) {
            for (std::size_t i = 0; i < 2; ++i) {
                m.norm[i].mu = j["normalization"].at(i).at("mu").get<double>();
                m.norm[i].sigma = j["normalization"].at(i).at("sigma").get<double>();
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(kModule, std::string("malformed model JSON: ") + e.what());
    }
}

Json stability_json(const StabilityReport& report, const QuadraticModel& model) {
    Json j;
    j["multiplicity_total"] = report.multiplicity_total;
    j["real_count"] = report.real_count();
    j["complex_count"] = report.complex_count();
    Json counts = Json::object();
    for (const auto& [c, n] : report.counts) counts[to_string(c)] = n;
    j["counts"] = counts;
    Json pts = Json::array();
    for (const auto& p : report.points) {
        Json q;
        q["real"] = p.is_real;
        q["standardized"] = {complex_json(p.z[0]), complex_json(p.z[1])};
        if (p.physical) q["physical"] = {(*p.physical)(0), (*p.physical)(1)};
        q["eigenvalues"] = {complex_json(p.eigenvalues[0]), complex_json(p.eigenvalues[1])};
        q["class"] = p.cls ? Json(to_string(*p.cls)) : Json(nullptr);
        q["residual"] = p.residual;
        pts.push_back(q);
    }
    j["points"] = pts;
    j["coefficients"] = coeff_rows(model.coeffs);
    return j;
}

Json sweep_summary_json(const SweepReport& r) {
    Json j;
    j["species"] = r.species;
    j["alphas"] = r.alphas;
    Json table = Json::array();
    for (std::size_t a = 0; a < r.alphas.size(); ++a) {
        Json row;
        row["alpha"] = r.alphas[a];
        for (std::size_t i = 0; i < 2; ++i) {
            row["avg_rmse_" + r.species[i]] = r.avg_rmse[a][i] ? Json(*r.avg_rmse[a][i]) : Json(nullptr);
            row["ok_" + r.species[i]] = r.ok_counts[a][i];
        }
        const auto w = r.worst(a);
        row["worst"] = w ? Json(*w) : Json(nullptr);
        table.push_back(row);
    }
    j["table"] = table;
    Json excluded = Json::array();
    for (const auto& [a, i] : r.excluded) excluded.push_back({{"alpha", a}, {"species", r.species[static_cast<std::size_t>(i)]}});
    j["excluded"] = excluded;
    j["argmin_alpha"] = r.argmin_alpha;
    j["objective"] = r.objective;
    return j;
}

std::string sweep_csv(const SweepReport& r) {
    std::ostringstream o;
    o << "station,alpha,species,rmse,status\n";
    for (const auto& out : r.outcomes) {
        for (std::size_t i = 0; i < 2; ++i) {
            o << out.station << ',' << format_double(out.alpha) << ',' << r.species[i] << ','
              << (out.status == FitStatus::Ok ? format_double(out.rmse[i]) : std::string()) << ','
              << to_string(out.status) << '\n';
        }
    }
    return o.str();
}

std::string time_series_svg(const StationFit& fit) {
    const std::array<const char*, 2> colors{"#d95f02", "#1b9e77"};
    svg::Plot plot("Station " + fit.outcome.station + ", alpha = " + format_double(fit.outcome.alpha),
                   "hours since window start", "standardized concentration");
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& ns = fit.normalized[i];
        std::vector<double> t(ns.values.size());
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = ns.dt_hours * static_cast<double>(k);
        plot.markers(t, ns.values, colors[i], ns.species + " observed");
        plot.line(fit.processed[i].grid, fit.processed[i].y, colors[i], ns.species + " smoothed", 1.0, true);
        if (fit.selection) {
            const auto& tr = fit.selection->trajectory;
            plot.line(tr.times, column(tr.states, static_cast<Eigen::Index>(i)), colors[i], ns.species + " model", 2.0);
        }
    }
    return plot.render();
}

std::string state_svg(const StationFit& fit) {
    svg::Plot plot("State diagram, station " + fit.outcome.station, fit.normalized[0].species + " (standardized)",
                   fit.normalized[1].species + " (standardized)");
    plot.markers(fit.normalized[0].values, fit.normalized[1].values, "#444444", "observed");
    plot.line(fit.processed[0].y, fit.processed[1].y, "#7570b3", "smoothed", 1.0, true);
    if (fit.selection) {
        const auto& tr = fit.selection->trajectory;
        plot.line(column(tr.states, 0), column(tr.states, 1), "#e7298a", "model", 2.0);
    }
    return plot.render();
}

std::string phase_portrait_svg(const QuadraticModel& model, const StabilityReport& report,
                               const std::vector<Eigen::VectorXd>& trajectory, const std::array<SpeciesId, 2>& species) {
    double x0 = -3, x1 = 3, y0 = -3, y1 = 3;
    for (const auto& p : report.points) {
        if (!p.is_real) continue;
        x0 = std::min(x0, p.z[0].real() - 1.0);
        x1 = std::max(x1, p.z[0].real() + 1.0);
        y0 = std::min(y0, p.z[1].real() - 1.0);
        y1 = std::max(y1, p.z[1].real() + 1.0);
    }
    for (const auto& s : trajectory) {
        x0 = std::min(x0, s(0));
        x1 = std::max(x1, s(0));
        y0 = std::min(y0, s(1));
        y1 = std::max(y1, s(1));
    }
    svg::Plot plot("Phase portrait", species[0] + " (standardized)", species[1] + " (standardized)", 640, 640);
    plot.set_range(x0, x1, y0, y1);
    const int n = 21;
    const double cell = std::min(x1 - x0, y1 - y0) / n;
    for (int a = 0; a <= n; ++a) {
        for (int b = 0; b <= n; ++b) {
            const Eigen::Vector2d z(x0 + (x1 - x0) * a / n, y0 + (y1 - y0) * b / n);
            const Eigen::Vector2d f = evaluate_rhs(model, z);
            const double norm = f.norm();
            if (!(norm > 0.0) || !std::isfinite(norm)) continue;
            const Eigen::Vector2d d = 0.8 * cell * f / norm;
            plot.arrow(z(0), z(1), z(0) + d(0), z(1) + d(1), "#9e9e9e");
        }
    }
    if (!trajectory.empty()) plot.line(column(trajectory, 0), column(trajectory, 1), "#e7298a", "trajectory", 2.0);
    for (const auto& p : report.points) {
        if (!p.is_real) continue;
        plot.markers({p.z[0].real()}, {p.z[1].real()}, class_color(p.cls), p.cls ? to_string(*p.cls) : "", 5.0);
    }
    return plot.render();
}

std::string sweep_svg(const SweepReport& r) {
    svg::Plot plot("Worst average RMSE by smoothing factor", "alpha", "RMSE (standardized)");
    const std::array<const char*, 2> colors{"#d95f02", "#1b9e77"};
    for (std::size_t i = 0; i < 2; ++i) {
        std::vector<double> a, v;
        for (std::size_t k = 0; k < r.alphas.size(); ++k) {
            if (!r.avg_rmse[k][i]) continue;
            a.push_back(r.alphas[k]);
            v.push_back(*r.avg_rmse[k][i]);
        }
        plot.line(a, v, colors[i], "mean RMSE " + r.species[i], 1.0, true);
    }
    std::vector<double> a, w;
    for (std::size_t k = 0; k < r.alphas.size(); ++k) {
        if (const auto x = r.worst(k)) {
            a.push_back(r.alphas[k]);
            w.push_back(*x);
        }
    }
    plot.line(a, w, "#000000", "max over species", 2.0);
    plot.markers({r.argmin_alpha}, {r.objective}, "#e7298a", "selected alpha", 5.0);
    return plot.render();
}

std::string trajectory_csv(const Trajectory& traj, const std::array<SpeciesId, 2>& species) {
    std::ostringstream o;
    o << "time," << species[0] << ',' << species[1] << '\n';
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        o << format_double(traj.times[k]) << ',' << format_double(traj.states[k](0)) << ','
          << format_double(traj.states[k](1)) << '\n';
    }
    return o.str();
}

std::string reconstruction_csv(const ReconstructionRows& rows) {
    std::ostringstream o;
    o << "t,measured,reconstructed" << (rows.hidden.empty() ? "" : ",hidden") << '\n';
    for (std::size_t k = 0; k < rows.t.size(); ++k) {
        o << format_double(rows.t[k]) << ',' << format_double(rows.measured[k]) << ','
          << format_double(rows.reconstructed[k]);
        if (!rows.hidden.empty()) o << ',' << format_double(rows.hidden[k]);
        o << '\n';
    }
    return o.str();
}

std::string reconstruction_svg(const ReconstructionRows& rows, const std::string& measured_name,
                               const std::string& hidden_name) {
    svg::Plot plot("Delay reconstruction", "hours", "standardized value");
    plot.line(rows.t, rows.measured, "#1b9e77", measured_name + " measured", 1.5);
    plot.line(rows.t, rows.reconstructed, "#d95f02", hidden_name + " reconstructed", 1.5);
    if (!rows.hidden.empty()) plot.line(rows.t, rows.hidden, "#7570b3", hidden_name + " actual", 1.0, true);
    return plot.render();
}

void write_text(const std::filesystem::path& dir, const std::string& name, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError(kModule, "cannot create directory " + dir.string() + ": " + ec.message());
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw DataError(kModule, "cannot write " + (dir / name).string());
    out << content;
    if (!out) throw DataError(kModule, "failed writing " + (dir / name).string());
}

}  // namespace airdyn
