#include "airdyn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace airdyn {

namespace {

const char* kModule = "dataset";

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Minimal RFC-4180 field splitter (quoted fields, doubled quotes).
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string line_error(std::size_t line, const std::string& msg) {
    return "line " + std::to_string(line) + ": " + msg;
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    int consumed = 0;
    std::string t = trim(text);
    int n = std::sscanf(t.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
    if (n < 6 || (sep != 'T' && sep != ' ')) {
        throw DataError(kModule, "invalid ISO-8601 timestamp '" + text + "'");
    }
    std::string rest = t.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && rest[0] == ':') {
        int c2 = 0;
        if (std::sscanf(rest.c_str(), ":%2d%n", &s, &c2) != 1) {
            throw DataError(kModule, "invalid seconds in timestamp '" + text + "'");
        }
        rest = rest.substr(static_cast<std::size_t>(c2));
    }
    if (rest == "Z" || rest == "+00:00") rest.clear();
    if (!rest.empty()) throw DataError(kModule, "unsupported timestamp suffix in '" + text + "' (UTC only)");

    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0) {
        throw DataError(kModule, "timestamp out of range '" + text + "'");
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    auto days = floor<std::chrono::days>(t);
    year_month_day ymd{days};
    hh_mm_ss hms{t - days};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

bool RawSeries::complete() const {
    return std::all_of(values.begin(), values.end(), [](const auto& v) { return v.has_value(); });
}

std::vector<double> RawSeries::dense() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) {
            throw DataError(kModule, "missing " + species + " value at " + station + " " +
                                         format_timestamp(time_at(i)));
        }
        out.push_back(*values[i]);
    }
    return out;
}

TimeWindow::TimeWindow(Timestamp s, Timestamp e) : start(s), end(e) {
    if (!(s < e)) {
        throw DataError(kModule, "empty window: start " + format_timestamp(s) + " is not before end " +
                                     format_timestamp(e));
    }
}

void StationDataset::add(RawSeries series) {
    if (series.species.empty()) throw DataError(kModule, "empty species id");
    if (series.values.empty()) throw DataError(kModule, "series " + series.station + "/" + series.species + " is empty");
    if (series.step.count() <= 0) throw DataError(kModule, "non-positive time step");
    for (const auto& v : series.values) {
        if (v && !std::isfinite(*v)) throw DataError(kModule, "non-finite value in " + series.species);
    }
    Key key{series.station, series.species};
    if (series_.count(key)) {
        throw DataError(kModule, "duplicate series " + series.station + "/" + series.species);
    }
    for (const auto& [k, other] : series_) {
        if (k.first != series.station) continue;
        if (other.t0 != series.t0 || other.step != series.step) {
            throw DataError(kModule, "series at station " + series.station +
                                         " do not share start time and step");
        }
    }
    series_.emplace(std::move(key), std::move(series));
}

bool StationDataset::contains(const StationId& station, const SpeciesId& species) const {
    return series_.count({station, species}) > 0;
}

const RawSeries& StationDataset::at(const StationId& station, const SpeciesId& species) const {
    auto it = series_.find({station, species});
    if (it == series_.end()) {
        throw DataError(kModule, "species " + species + " is not measured at station " + station);
    }
    return it->second;
}

std::vector<StationId> StationDataset::stations() const {
    std::set<StationId> s;
    for (const auto& [k, v] : series_) s.insert(k.first);
    return {s.begin(), s.end()};
}

std::vector<SpeciesId> StationDataset::species_at(const StationId& station) const {
    std::vector<SpeciesId> out;
    for (const auto& [k, v] : series_) {
        if (k.first == station) out.push_back(k.second);
    }
    return out;
}

StationDataset parse_csv(const std::string& text, const CsvSchema& schema) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw DataError(kModule, "missing header row");
    if (!header[0].empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError(kModule, "header lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_station = column(schema.station);
    const std::size_t c_time = column(schema.timestamp);
    const std::size_t c_species = column(schema.species);
    const std::size_t c_value = column(schema.value);

    struct Cell {
        std::optional<double> value;
        std::size_t line;
    };
    std::map<StationDataset::Key, std::map<Timestamp, Cell>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError(kModule, line_error(line_no, "expected " + std::to_string(header.size()) +
                                                             " fields, found " + std::to_string(fields.size())));
        }
        const std::string& station = fields[c_station];
        const std::string& species = fields[c_species];
        if (station.empty() || species.empty()) {
            throw DataError(kModule, line_error(line_no, "empty station or species"));
        }
        Timestamp ts;
        try {
            ts = parse_timestamp(fields[c_time]);
        } catch (const DataError& e) {
            throw DataError(kModule, line_error(line_no, e.what()));
        }
        std::optional<double> value;
        if (!fields[c_value].empty()) {
            value = parse_double(fields[c_value]);
            if (!value || !std::isfinite(*value)) {
                throw DataError(kModule, line_error(line_no, "invalid value '" + fields[c_value] + "'"));
            }
        }
        auto& series = rows[{station, species}];
        auto [it, inserted] = series.emplace(ts, Cell{value, line_no});
        if (!inserted) {
            throw DataError(kModule, line_error(line_no, "duplicate reading for " + station + "/" + species + " at " +
                                                             format_timestamp(ts) + " (first at line " +
                                                             std::to_string(it->second.line) + ")"));
        }
    }

    // Per-series uniform step, then a shared grid per station.
    struct Grid {
        std::optional<std::chrono::seconds> step;
        Timestamp first = Timestamp::max();
        Timestamp last = Timestamp::min();
    };
    std::map<StationId, Grid> grids;
    for (const auto& [key, cells] : rows) {
        auto& g = grids[key.first];
        g.first = std::min(g.first, cells.begin()->first);
        g.last = std::max(g.last, cells.rbegin()->first);
        std::optional<std::chrono::seconds> step;
        Timestamp prev{};
        bool have_prev = false;
        for (const auto& [ts, cell] : cells) {
            if (have_prev) {
                auto d = ts - prev;
                if (!step) {
                    step = d;
                } else if (d != *step) {
                    throw DataError(kModule, line_error(cell.line, "non-uniform time step for " + key.first + "/" +
                                                                       key.second + " at " + format_timestamp(ts)));
                }
            }
            prev = ts;
            have_prev = true;
        }
        if (step) {
            if (g.step && *g.step != *step) {
                throw DataError(kModule, "non-uniform time step: series at station " + key.first +
                                             " use different sampling intervals");
            }
            g.step = step;
        }
    }

    StationDataset ds;
    for (const auto& [key, cells] : rows) {
        const auto& g = grids[key.first];
        const auto step = g.step.value_or(std::chrono::hours{1});
        const auto n = static_cast<std::size_t>((g.last - g.first) / step) + 1;
        RawSeries s;
        s.station = key.first;
        s.species = key.second;
        s.t0 = g.first;
        s.step = step;
        s.values.assign(n, std::nullopt);
        for (const auto& [ts, cell] : cells) {
            if ((ts - g.first) % step != std::chrono::seconds{0}) {
                throw DataError(kModule, line_error(cell.line, "timestamp " + format_timestamp(ts) +
                                                                   " is off the station's sampling grid"));
            }
            s.values[static_cast<std::size_t>((ts - g.first) / step)] = cell.value;
        }
        ds.add(std::move(s));
    }
    return ds;
}

StationDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(kModule, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), schema);
}

std::string to_csv(const StationDataset& ds) {
    std::string out = "station_id,timestamp,species,value\n";
    // Row order: station, time, species.
    for (const auto& station : ds.stations()) {
        auto species = ds.species_at(station);
        if (species.empty()) continue;
        const auto& first = ds.at(station, species.front());
        for (std::size_t i = 0; i < first.values.size(); ++i) {
            const auto ts = format_timestamp(first.time_at(i));
            for (const auto& sp : species) {
                const auto& v = ds.at(station, sp).values[i];
                out += quote_if_needed(station) + ',' + ts + ',' + quote_if_needed(sp) + ',';
                if (v) out += format_double(*v);
                out += '\n';
            }
        }
    }
    return out;
}

void write_csv(const StationDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(kModule, "cannot write " + path.string());
    out << to_csv(ds);
}

void load_station_metadata(StationDataset& ds, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(kModule, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (header) {
            header = false;
            if (f.size() < 2 || f[0] != "station_id" || f[1] != "name") {
                throw DataError(kModule, "station metadata header must start with station_id,name");
            }
            continue;
        }
        if (f.size() != 4) throw DataError(kModule, line_error(line_no, "expected 4 fields in station metadata"));
        StationInfo info{f[1], std::nullopt, std::nullopt};
        if (!f[2].empty()) info.latitude = parse_double(f[2]);
        if (!f[3].empty()) info.longitude = parse_double(f[3]);
        if ((!f[2].empty() && !info.latitude) || (!f[3].empty() && !info.longitude)) {
            throw DataError(kModule, line_error(line_no, "invalid coordinates"));
        }
        ds.metadata()[f[0]] = std::move(info);
    }
}

std::vector<RawSeries> select_window(const StationDataset& ds,
                                     const StationId& station,
                                     const std::vector<SpeciesId>& species,
                                     const TimeWindow& w) {
    if (species.empty()) throw DataError(kModule, "no species requested");
    if (!(w.start < w.end)) throw DataError(kModule, "empty window");
    std::vector<RawSeries> out;
    for (const auto& sp : species) {
        const RawSeries& s = ds.at(station, sp);
        if (w.start < s.t0 || w.end > s.t_end()) {
            throw DataError(kModule, "window " + format_timestamp(w.start) + " .. " + format_timestamp(w.end) +
                                         " lies outside the data range of " + station + "/" + sp);
        }
        if ((w.start - s.t0) % s.step != std::chrono::seconds{0} || (w.end - s.t0) % s.step != std::chrono::seconds{0}) {
            throw DataError(kModule, "window boundaries are not aligned to the sampling grid of " + station);
        }
        const auto first = static_cast<std::size_t>((w.start - s.t0) / s.step);
        const auto last = static_cast<std::size_t>((w.end - s.t0) / s.step);
        RawSeries sub;
        sub.station = s.station;
        sub.species = s.species;
        sub.t0 = w.start;
        sub.step = s.step;
        sub.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(first),
                          s.values.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        for (std::size_t i = 0; i < sub.values.size(); ++i) {
            if (!sub.values[i]) {
                throw DataError(kModule, "missing " + sp + " reading at " + station + " " +
                                             format_timestamp(sub.time_at(i)) + " inside the window");
            }
        }
        out.push_back(std::move(sub));
    }
    return out;
}

}  // namespace airdyn
