#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "airdyn/error.hpp"

namespace airdyn {

using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z]` (also accepts a space as the date/time
/// separator). Only UTC is supported; throws DataError on anything else.
Timestamp parse_timestamp(const std::string& text);
/// Canonical form `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp t);

using SpeciesId = std::string;
using StationId = std::string;

struct RawSeries {
    StationId station;
    SpeciesId species;
    Timestamp t0{};
    std::chrono::seconds step{3600};
    std::vector<std::optional<double>> values;

    double dt_hours() const { return static_cast<double>(step.count()) / 3600.0; }
    Timestamp time_at(std::size_t i) const { return t0 + step * static_cast<long long>(i); }
    Timestamp t_end() const { return time_at(values.empty() ? 0 : values.size() - 1); }
    bool complete() const;
    /// Values as doubles; throws DataError if any entry is missing.
    std::vector<double> dense() const;

    bool operator==(const RawSeries&) const = default;
};

struct StationInfo {
    std::string name;
    std::optional<double> latitude;
    std::optional<double> longitude;

    bool operator==(const StationInfo&) const = default;
};

/// Closed interval [start, end] on the sampling grid.
struct TimeWindow {
    Timestamp start{};
    Timestamp end{};

    TimeWindow() = default;
    TimeWindow(Timestamp s, Timestamp e);
};

class StationDataset {
public:
    using Key = std::pair<StationId, SpeciesId>;

    /// Adds a series; the station's existing series must share t0 and step.
    void add(RawSeries series);

    bool contains(const StationId& station, const SpeciesId& species) const;
    const RawSeries& at(const StationId& station, const SpeciesId& species) const;

    std::vector<StationId> stations() const;
    std::vector<SpeciesId> species_at(const StationId& station) const;
    const std::map<Key, RawSeries>& series() const { return series_; }

    std::map<StationId, StationInfo>& metadata() { return metadata_; }
    const std::map<StationId, StationInfo>& metadata() const { return metadata_; }

    bool operator==(const StationDataset&) const = default;

private:
    std::map<Key, RawSeries> series_;
    std::map<StationId, StationInfo> metadata_;
};

/// Column names of the long-format CSV.
struct CsvSchema {
    std::string station = "station_id";
    std::string timestamp = "timestamp";
    std::string species = "species";
    std::string value = "value";
};

StationDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
StationDataset parse_csv(const std::string& text, const CsvSchema& schema = {});

/// Writes the canonical `station_id,timestamp,species,value` layout. Values are
/// printed in shortest round-trip form so a reload is bitwise identical.
std::string to_csv(const StationDataset& ds);
void write_csv(const StationDataset& ds, const std::filesystem::path& path);

/// Reads `station_id,name,latitude,longitude` into the dataset's metadata.
void load_station_metadata(StationDataset& ds, const std::filesystem::path& path);

/// Aligned complete sub-series for each requested species, one per entry of
/// `species`, each with one value per grid point in `w`.
std::vector<RawSeries> select_window(const StationDataset& ds,
                                     const StationId& station,
                                     const std::vector<SpeciesId>& species,
                                     const TimeWindow& w);

}  // namespace airdyn
