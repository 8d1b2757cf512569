#include "airdyn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "airdyn/embedding.hpp"
#include "airdyn/report.hpp"
#include "airdyn/stability.hpp"
#include "airdyn/sweep.hpp"
#include "airdyn/synth.hpp"

namespace airdyn::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
    std::string out_dir;
};

struct FitArgs {
    std::string data;
    std::string station;
    std::string from, to;
    double alpha = 0.10;
    std::string criterion = "aic";
    double epsilon = 1e6;
    double rtol = 1e-6;
    double atol = 1e-9;
    int refinement = kDefaultRefinement;
    std::vector<std::string> species{"NO2", "O3"};
};

void add_window_options(CLI::App* app, FitArgs& a, bool need_station) {
    app->add_option("--data", a.data, "long-format CSV (station_id,timestamp,species,value)")->required();
    auto* st = app->add_option("--station", a.station, "station identifier");
    if (need_station) st->required();
    app->add_option("--from", a.from, "window start, e.g. 2018-04-01T08:00")->required();
    app->add_option("--to", a.to, "window end (inclusive)")->required();
}

void add_model_options(CLI::App* app, FitArgs& a) {
    app->add_option("--criterion", a.criterion, "aic, bic or adjr2")->capture_default_str();
    app->add_option("--epsilon", a.epsilon, "derivative guard")->capture_default_str();
    app->add_option("--rtol", a.rtol, "integrator relative tolerance")->capture_default_str();
    app->add_option("--atol", a.atol, "integrator absolute tolerance")->capture_default_str();
    app->add_option("--refinement", a.refinement, "spline subintervals per sample")->capture_default_str();
    app->add_option("--species", a.species, "the two species to model")->expected(2)->capture_default_str();
}

FitConfig to_config(const FitArgs& a) {
    if (a.species.size() != 2) throw UsageError("--species needs exactly two names");
    if (a.species[0] == a.species[1]) throw UsageError("--species names must differ");
    if (a.refinement < 1) throw UsageError("--refinement must be at least 1");
    FitConfig cfg;
    cfg.species = {a.species[0], a.species[1]};
    cfg.criterion = parse_criterion(a.criterion);
    cfg.integrator.epsilon_guard = a.epsilon;
    cfg.integrator.rtol = a.rtol;
    cfg.integrator.atol = a.atol;
    cfg.integrator.validate();
    cfg.refinement = a.refinement;
    return cfg;
}

Json config_json(const FitArgs& a, const FitConfig& cfg) {
    return {{"data", a.data},
            {"station", a.station},
            {"from", a.from},
            {"to", a.to},
            {"criterion", to_string(cfg.criterion)},
            {"epsilon", cfg.integrator.epsilon_guard},
            {"rtol", cfg.integrator.rtol},
            {"atol", cfg.integrator.atol},
            {"refinement", cfg.refinement},
            {"species", cfg.species}};
}

TimeWindow window_of(const FitArgs& a) { return TimeWindow(parse_timestamp(a.from), parse_timestamp(a.to)); }

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

class Artifacts {
public:
    Artifacts(std::filesystem::path dir, std::ostream& out) : dir_(std::move(dir)), out_(out) {}

    void write(const std::string& name, const std::string& content) {
        write_text(dir_, name, content);
        std::ostringstream hex;
        hex << std::hex << fnv1a(content);
        list_.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex.str()}});
        out_ << "wrote " << (dir_ / name).string() << '\n';
    }

    void manifest(const std::string& command, const Json& config) {
        Json m;
        m["tool"] = "airdyn";
        m["version"] = kVersion;
        m["command"] = command;
        m["config"] = config;
        m["artifacts"] = list_;
        const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
        m["created"] = format_timestamp(now);
        write_text(dir_, "manifest.json", m.dump(2) + "\n");
        out_ << "wrote " << (dir_ / "manifest.json").string() << '\n';
    }

private:
    std::filesystem::path dir_;
    std::ostream& out_;
    Json list_ = Json::array();
};

std::string resolve_out(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
    return "airdyn_out";
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("cannot parse number '" + item + "'");
        }
        if (!(v.back() >= 0.0 && v.back() <= 1.0)) throw UsageError("alpha grid value '" + item + "' is outside [0, 1]");
    }
    return v;
}

int cmd_ingest(const std::string& data, const std::string& meta, const Common& c, std::ostream& out) {
    auto ds = load_csv(data);
    if (!meta.empty()) load_station_metadata(ds, meta);
    Json j;
    j["stations"] = Json::array();
    for (const auto& s : ds.stations()) {
        Json st{{"station", s}, {"species", Json::array()}};
        if (auto it = ds.metadata().find(s); it != ds.metadata().end()) st["name"] = it->second.name;
        for (const auto& sp : ds.species_at(s)) {
            const auto& r = ds.at(s, sp);
            const auto missing = std::count_if(r.values.begin(), r.values.end(), [](const auto& v) { return !v; });
            st["species"].push_back({{"species", sp},
                                     {"from", format_timestamp(r.t0)},
                                     {"to", format_timestamp(r.t_end())},
                                     {"step_seconds", r.step.count()},
                                     {"points", r.values.size()},
                                     {"missing", missing}});
        }
        j["stations"].push_back(st);
    }
    out << "valid: " << ds.stations().size() << " stations, " << ds.series().size() << " series\n";
    Artifacts art(resolve_out(c.out_dir), out);
    art.write("ingest.json", j.dump(2) + "\n");
    art.manifest("ingest", {{"data", data}, {"stations", meta}});
    return kExitOk;
}

int cmd_fit(const FitArgs& a, const Common& c, std::ostream& out) {
    const auto cfg = to_config(a);
    const auto ds = load_csv(a.data);
    const auto fit = fit_station_detailed(ds, a.station, window_of(a), a.alpha, cfg);
    Artifacts art(resolve_out(c.out_dir), out);
    art.write("model.json", model_json(fit, cfg).dump(2) + "\n");
    art.write("time_series.svg", time_series_svg(fit));
    art.write("state.svg", state_svg(fit));
    if (fit.selection) art.write("trajectory.csv", trajectory_csv(fit.selection->trajectory, cfg.species));
    Json conf = config_json(a, cfg);
    conf["alpha"] = a.alpha;
    art.manifest("fit", conf);
    if (fit.outcome.status == FitStatus::Infeasible) {
        throw AllModelsInfeasible(fit.outcome.message);
    }
    out << "rmse " << cfg.species[0] << " = " << format_double(fit.outcome.rmse[0]) << ", " << cfg.species[1]
        << " = " << format_double(fit.outcome.rmse[1]) << '\n';
    return kExitOk;
}

int cmd_sweep(const FitArgs& a, const std::vector<std::string>& stations_flag, const std::string& grid_text,
              const Common& c, std::ostream& out) {
    const auto cfg = to_config(a);
    const auto ds = load_csv(a.data);
    std::vector<StationId> stations = stations_flag;
    if (stations.empty()) {
        for (const auto& s : ds.stations())
            if (ds.contains(s, cfg.species[0]) && ds.contains(s, cfg.species[1])) stations.push_back(s);
    }
    const AlphaGrid grid = grid_text == "default" ? AlphaGrid::default_grid() : AlphaGrid(parse_list(grid_text));
    const auto rep = minmax_alpha(ds, stations, window_of(a), grid, cfg);
    Artifacts art(resolve_out(c.out_dir), out);
    art.write("sweep.csv", sweep_csv(rep));
    art.write("sweep_summary.json", sweep_summary_json(rep).dump(2) + "\n");
    art.write("sweep.svg", sweep_svg(rep));
    Json conf = config_json(a, cfg);
    conf["stations"] = stations;
    conf["alpha_grid"] = grid.values();
    art.manifest("sweep", conf);
    out << "alpha* = " << format_double(rep.argmin_alpha) << ", objective = " << format_double(rep.objective) << '\n';
    return kExitOk;
}

int cmd_stability(const std::string& model_path, const FitArgs& a, const Common& c, std::ostream& out) {
    QuadraticModel model;
    std::vector<Eigen::VectorXd> trajectory;
    std::array<SpeciesId, 2> species{"y1", "y2"};
    Json conf;
    if (!model_path.empty()) {
        std::ifstream in(model_path);
        if (!in) throw DataError("cli", "cannot open " + model_path);
        Json j;
        try {
            j = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("cli", model_path + ": " + e.what());
        }
        model = model_from_json(j);
        if (j.contains("species")) species = {j["species"][0].get<std::string>(), j["species"][1].get<std::string>()};
        if (j.contains("y0") && j.contains("duration_hours")) {
            try {
                const Eigen::Vector2d y0(j["y0"][0].get<double>(), j["y0"][1].get<double>());
                trajectory = integrate(model, y0, 0.0, j["duration_hours"].get<double>()).states;
            } catch (const IntegrationError&) {
                trajectory.clear();
            }
        }
        conf = {{"model", model_path}};
    } else {
        if (a.data.empty() || a.station.empty() || a.from.empty() || a.to.empty()) {
            throw UsageError("stability needs --model or --data/--station/--from/--to");
        }
        const auto cfg = to_config(a);
        const auto fit = fit_station_detailed(load_csv(a.data), a.station, window_of(a), a.alpha, cfg);
        if (!fit.selection) throw AllModelsInfeasible(fit.outcome.message);
        model = fit.outcome.model;
        trajectory = fit.selection->trajectory.states;
        species = cfg.species;
        conf = config_json(a, cfg);
        conf["alpha"] = a.alpha;
    }
    const auto rep = critical_points(model);
    Artifacts art(resolve_out(c.out_dir), out);
    art.write("stability.json", stability_json(rep, model).dump(2) + "\n");
    art.write("phase_portrait.svg", phase_portrait_svg(model, rep, trajectory, species));
    art.manifest("stability", conf);
    out << rep.real_count() << " real and " << rep.complex_count() << " complex critical points\n";
    return kExitOk;
}

struct ReconArgs {
    FitArgs fit;
    std::string hidden;
    int tau_max = 0;
    int bins = 0;
};

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

int cmd_reconstruct(const ReconArgs& r, const Common& c, std::ostream& out) {
    const auto& a = r.fit;
    if (a.species.empty()) throw UsageError("--species needs the measured species");
    const std::string measured = a.species[0];
    const auto ds = load_csv(a.data);
    std::vector<SpeciesId> want{measured};
    if (!r.hidden.empty()) want.push_back(r.hidden);
    const auto raw = select_window(ds, a.station, want, window_of(a));
    const auto ns = standardize(raw[0]);
    const auto ps = preprocess(ns, SmoothingFactor(a.alpha), a.refinement);
    const auto lag = select_lag(ps.y, r.tau_max, r.bins);
    const auto emb = delay_embed(ps.y, lag.tau);
    const std::vector<double> observed(ps.y.begin(), ps.y.begin() + static_cast<std::ptrdiff_t>(emb.points.size()));
    const auto corr = fit_orthogonal_correction(emb, observed);
    const auto rec = reconstruct(emb, corr.matrix);

    ReconstructionRows rows;
    for (std::size_t j = 0; j < rec.size(); ++j) {
        rows.t.push_back(ps.grid[j]);
        rows.measured.push_back(observed[j]);
        rows.reconstructed.push_back(rec[j](1));
    }
    Json j;
    j["station"] = a.station;
    j["measured"] = measured;
    j["tau"] = lag.tau;
    j["tau_hours"] = lag.tau * ps.spacing();
    j["fallback"] = lag.fallback;
    j["bins"] = r.bins == 0 ? default_bins(ps.y.size()) : r.bins;
    j["ami"] = lag.curve.ami;
    auto cand_json = [](const CorrectionCandidate& k) {
        return Json{{"theta", k.theta},
                    {"reflected", k.reflected},
                    {"matrix", {{k.matrix(0, 0), k.matrix(0, 1)}, {k.matrix(1, 0), k.matrix(1, 1)}}},
                    {"loss", k.loss}};
    };
    j["correction"] = cand_json(corr);
    j["candidates"] = Json::array();
    for (const auto& k : corr.candidates) j["candidates"].push_back(cand_json(k));
    if (!r.hidden.empty()) {
        const auto hs = preprocess(standardize(raw[1]), SmoothingFactor(a.alpha), a.refinement);
        rows.hidden.assign(hs.y.begin(), hs.y.begin() + static_cast<std::ptrdiff_t>(rec.size()));
        j["hidden"] = r.hidden;
        j["correlation"] = pearson(rows.reconstructed, rows.hidden);
    }
    Artifacts art(resolve_out(c.out_dir), out);
    art.write("reconstruction.csv", reconstruction_csv(rows));
    art.write("reconstruction.svg", reconstruction_svg(rows, measured, r.hidden.empty() ? "hidden" : r.hidden));
    art.write("embedding.json", j.dump(2) + "\n");
    Json conf{{"data", a.data},   {"station", a.station},       {"from", a.from},         {"to", a.to},
              {"alpha", a.alpha}, {"refinement", a.refinement}, {"measured", measured},  {"hidden", r.hidden},
              {"tau_max", r.tau_max}, {"bins", r.bins}};
    art.manifest("reconstruct", conf);
    out << "tau = " << lag.tau << (lag.fallback ? " (fallback: global minimum)" : "") << '\n';
    return kExitOk;
}

struct SynthArgs {
    std::string planted;
    bool leighton = false;
    double noise = 0.0;
    std::uint64_t seed = 0;
    double duration = 0.0;
    std::vector<double> y0;
    int step_seconds = 3600;
    double j = 0.5;
    double k3 = 1.0;
    bool diurnal = false;
    std::string station = "SYN";
    std::string start = "2018-04-01T00:00:00Z";
};

int cmd_synth(const SynthArgs& s, const Common& c, std::ostream& out) {
    if (s.planted.empty() == !s.leighton) throw UsageError("synth needs exactly one of --planted or --leighton");
    SyntheticSpec spec;
    spec.noise_sigma = s.noise;
    spec.seed = s.seed;
    spec.station = s.station;
    spec.step_seconds = s.step_seconds;
    spec.t0 = parse_timestamp(s.start);
    Json conf;
    if (!s.planted.empty()) {
        spec.model = planted_model(s.planted);
        const auto def = planted_defaults(s.planted);
        spec.duration = s.duration > 0.0 ? s.duration : def.duration;
        std::vector<double> y0 = s.y0.empty() ? std::vector<double>{def.y0(0), def.y0(1)} : s.y0;
        if (y0.size() != 2) throw UsageError("--y0 needs two values for a planted model");
        spec.y0 = Eigen::Vector2d(y0[0], y0[1]);
        conf["planted"] = s.planted;
    } else {
        spec.model = s.diurnal ? LeightonParams::diurnal(s.j, s.k3) : LeightonParams::constant(s.j, s.k3);
        spec.duration = s.duration > 0.0 ? s.duration : 24.0;
        std::vector<double> y0 = s.y0.empty() ? std::vector<double>{40.0, 20.0, 60.0} : s.y0;
        if (y0.size() != 3) throw UsageError("--y0 needs three values (NO2, NO, O3) for kinetics");
        spec.y0 = Eigen::Vector3d(y0[0], y0[1], y0[2]);
        conf["leighton"] = {{"J", s.j}, {"k3", s.k3}, {"diurnal", s.diurnal}};
    }
    conf["y0"] = std::vector<double>(spec.y0.data(), spec.y0.data() + spec.y0.size());
    conf["duration"] = spec.duration;
    conf["step_seconds"] = spec.step_seconds;
    conf["noise"] = spec.noise_sigma;
    conf["seed"] = spec.seed;
    conf["station"] = spec.station;
    conf["start"] = format_timestamp(spec.t0);
    const auto ds = synth_dataset(spec);
    Artifacts art(resolve_out(c.out_dir), out);
    art.write("synth.csv", to_csv(ds));
    art.manifest("synth", conf);
    return kExitOk;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Usage: return kExitUsage;
        case ErrorKind::Data: return kExitData;
        case ErrorKind::Numeric: return kExitNumeric;
    }
    return kExitNumeric;
}

const char* kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Data: return "data";
        case ErrorKind::Numeric: return "numeric";
    }
    return "numeric";
}

void report_error(std::ostream& err, const char* kind, const std::string& module, const std::string& message) {
    Json j{{"error", {{"kind", kind}, {"module", module}, {"message", message}}}};
    err << j.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quadratic dynamics of NO2/O3 air-quality series", "airdyn"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common common;
    app.add_option("--out", common.out_dir, std::string("output directory (default $") + kOutputEnv + " or ./airdyn_out)");

    std::string ingest_data, ingest_meta;
    auto* ingest = app.add_subcommand("ingest", "validate a dataset CSV");
    ingest->add_option("--data", ingest_data, "long-format CSV")->required();
    ingest->add_option("--stations", ingest_meta, "station metadata CSV (station_id,name,latitude,longitude)");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "fit one station and smoothing factor");
    add_window_options(fit, fit_args, true);
    fit->add_option("--alpha", fit_args.alpha, "smoothing factor in [0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    add_model_options(fit, fit_args);

    FitArgs sweep_args;
    std::vector<std::string> sweep_stations;
    std::string grid_text = "default";
    auto* sweep = app.add_subcommand("sweep", "min-max smoothing factor over stations");
    sweep->add_option("--data", sweep_args.data, "long-format CSV")->required();
    sweep->add_option("--stations", sweep_stations, "stations to include (default: all measuring both species)");
    sweep->add_option("--from", sweep_args.from, "window start")->required();
    sweep->add_option("--to", sweep_args.to, "window end (inclusive)")->required();
    sweep->add_option("--alpha-grid", grid_text, "'default' or comma-separated values")->capture_default_str();
    add_model_options(sweep, sweep_args);

    FitArgs stab_args;
    std::string model_path;
    auto* stab = app.add_subcommand("stability", "critical points and phase portrait");
    stab->add_option("--model", model_path, "model.json written by fit");
    stab->add_option("--data", stab_args.data, "long-format CSV (fit on the fly)");
    stab->add_option("--station", stab_args.station, "station identifier");
    stab->add_option("--from", stab_args.from, "window start");
    stab->add_option("--to", stab_args.to, "window end (inclusive)");
    stab->add_option("--alpha", stab_args.alpha, "smoothing factor")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    add_model_options(stab, stab_args);

    ReconArgs recon_args;
    recon_args.fit.alpha = 0.01;
    recon_args.fit.species = {"NO2"};
    auto* recon = app.add_subcommand("reconstruct", "delay-embedding reconstruction of a hidden species");
    add_window_options(recon, recon_args.fit, true);
    recon->add_option("--alpha", recon_args.fit.alpha, "smoothing factor")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    recon->add_option("--refinement", recon_args.fit.refinement, "spline subintervals per sample")->capture_default_str();
    recon->add_option("--species", recon_args.fit.species, "measured species")->expected(1)->capture_default_str();
    recon->add_option("--hidden", recon_args.hidden, "species to compare against (optional)");
    recon->add_option("--tau-max", recon_args.tau_max, "largest lag (default floor(m/4))");
    recon->add_option("--bins", recon_args.bins, "histogram bins (default max(8, ceil(log2 m)+1))");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic station dataset");
    synth->add_option("--planted", synth_args.planted, "planted model: fig8c-5h or fig8c-11h");
    synth->add_flag("--leighton", synth_args.leighton, "photostationary NO2/NO/O3 kinetics instead");
    synth->add_option("--noise", synth_args.noise, "Gaussian noise standard deviation")->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "noise seed")->capture_default_str();
    synth->add_option("--duration", synth_args.duration, "hours (default 5/11 for planted, 24 for kinetics)");
    synth->add_option("--y0", synth_args.y0, "initial state")->delimiter(',');
    synth->add_option("--step-seconds", synth_args.step_seconds, "sampling interval")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--j", synth_args.j, "photolysis rate (1/hour)")->capture_default_str();
    synth->add_option("--k3", synth_args.k3, "titration rate constant")->capture_default_str();
    synth->add_flag("--diurnal", synth_args.diurnal, "sinusoidal daytime photolysis with peak --j");
    synth->add_option("--station", synth_args.station, "station identifier")->capture_default_str();
    synth->add_option("--start", synth_args.start, "first timestamp")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", "cli", e.what());
        return kExitUsage;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_data, ingest_meta, common, out);
        if (fit->parsed()) return cmd_fit(fit_args, common, out);
        if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_stations, grid_text, common, out);
        if (stab->parsed()) return cmd_stability(model_path, stab_args, common, out);
        if (recon->parsed()) return cmd_reconstruct(recon_args, common, out);
        if (synth->parsed()) return cmd_synth(synth_args, common, out);
    } catch (const Error& e) {
        report_error(err, kind_name(e.kind()), e.module(), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        report_error(err, "numeric", "cli", e.what());
        return kExitNumeric;
    }
    report_error(err, "usage", "cli", "no subcommand");
    return kExitUsage;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace airdyn::cli
