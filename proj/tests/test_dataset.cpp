#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "airdyn/dataset.hpp"

using namespace airdyn;

namespace {

const std::string kHeader = "station_id,timestamp,species,value\n";

Timestamp ts(const std::string& s) { return parse_timestamp(s); }

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("timestamps parse and format in UTC") {
    CHECK(format_timestamp(ts("2018-04-01T08:00")) == "2018-04-01T08:00:00Z");
    CHECK(format_timestamp(ts("2018-04-01 08:30:15Z")) == "2018-04-01T08:30:15Z");
    CHECK(ts("2018-04-01T09:00:00Z") - ts("2018-04-01T08:00:00Z") == std::chrono::hours(1));
    CHECK_THROWS_AS(parse_timestamp("2018-04-01T08:00+02:00"), DataError);
    CHECK_THROWS_AS(parse_timestamp("yesterday"), DataError);
}

TEST_CASE("three hourly rows give a series of length 3") {
    const auto ds = parse_csv(kHeader +
                              "S1,2018-04-01T00:00,NO2,10\n"
                              "S1,2018-04-01T01:00,NO2,11.5\n"
                              "S1,2018-04-01T02:00,NO2,12\n");
    const auto& s = ds.at("S1", "NO2");
    REQUIRE(s.values.size() == 3);
    CHECK(s.dt_hours() == 1.0);
    CHECK(*s.values[1] == 11.5);
    CHECK(s.t0 == ts("2018-04-01T00:00"));
}

TEST_CASE("rows are sorted by time and empty cells become missing") {
    const auto ds = parse_csv(kHeader +
                              "S1,2018-04-01T02:00,O3,3\n"
                              "S1,2018-04-01T00:00,O3,1\n"
                              "S1,2018-04-01T01:00,O3,\n");
    const auto& s = ds.at("S1", "O3");
    REQUIRE(s.values.size() == 3);
    CHECK(*s.values[0] == 1.0);
    CHECK_FALSE(s.values[1].has_value());
    CHECK(*s.values[2] == 3.0);
    CHECK_FALSE(s.complete());
}

TEST_CASE("gap in the time grid is a non-uniform step error") {
    const auto msg = message_of([] {
        parse_csv(kHeader +
                  "S1,2018-04-01T00:00,NO2,1\n"
                  "S1,2018-04-01T01:00,NO2,2\n"
                  "S1,2018-04-01T03:00,NO2,3\n");
    });
    CHECK(msg.find("non-uniform") != std::string::npos);
}

TEST_CASE("malformed rows report their line number") {
    CHECK(message_of([] { parse_csv(kHeader + "S1,2018-04-01T00:00,NO2\n"); }).find("line 2") != std::string::npos);
    CHECK(message_of([] { parse_csv(kHeader + "S1,2018-04-01T00:00,NO2,1\nS1,bad,NO2,2\n"); }).find("line 3") !=
          std::string::npos);
    CHECK(message_of([] { parse_csv(kHeader + "S1,2018-04-01T00:00,NO2,abc\n"); }).find("line 2") != std::string::npos);
}

TEST_CASE("duplicate readings are rejected") {
    const auto msg = message_of([] {
        parse_csv(kHeader + "S1,2018-04-01T00:00,NO2,1\nS1,2018-04-01T00:00,NO2,2\n");
    });
    CHECK(msg.find("duplicate") != std::string::npos);
}

TEST_CASE("species of one station share the grid") {
    const auto ds = parse_csv(kHeader +
                              "S1,2018-04-01T00:00,NO2,1\n"
                              "S1,2018-04-01T01:00,NO2,2\n"
                              "S1,2018-04-01T02:00,NO2,3\n"
                              "S1,2018-04-01T01:00,O3,5\n"
                              "S1,2018-04-01T02:00,O3,6\n");
    const auto& o3 = ds.at("S1", "O3");
    CHECK(o3.t0 == ds.at("S1", "NO2").t0);
    REQUIRE(o3.values.size() == 3);
    CHECK_FALSE(o3.values[0].has_value());
}

TEST_CASE("absent species names the station") {
    const auto ds = parse_csv(kHeader + "S1,2018-04-01T00:00,NO2,1\nS1,2018-04-01T01:00,NO2,2\n");
    CHECK_FALSE(ds.contains("S1", "O3"));
    const auto msg = message_of([&] { (void)ds.at("S1", "O3"); });
    CHECK(msg.find("O3") != std::string::npos);
    CHECK(msg.find("S1") != std::string::npos);
}

TEST_CASE("select_window returns aligned complete series") {
    std::string csv = kHeader;
    for (int h = 0; h < 24; ++h) {
        char t[32];
        std::snprintf(t, sizeof t, "2018-04-01T%02d:00", h);
        csv += std::string("S1,") + t + ",NO2," + std::to_string(h) + "\n";
        csv += std::string("S1,") + t + ",O3," + (h == 20 ? std::string() : std::to_string(100 - h)) + "\n";
    }
    const auto ds = parse_csv(csv);

    SUBCASE("19-hour window gives two series of length 19") {
        const auto out = select_window(ds, "S1", {"NO2", "O3"}, TimeWindow(ts("2018-04-01T00:00"), ts("2018-04-01T18:00")));
        REQUIRE(out.size() == 2);
        CHECK(out[0].values.size() == 19);
        CHECK(out[1].values.size() == 19);
        CHECK(*out[1].values[3] == 97.0);
        CHECK(out[0].t0 == ts("2018-04-01T00:00"));
    }
    SUBCASE("full range is a full copy") {
        const auto out = select_window(ds, "S1", {"NO2"}, TimeWindow(ts("2018-04-01T00:00"), ts("2018-04-01T23:00")));
        CHECK(out[0] == ds.at("S1", "NO2"));
    }
    SUBCASE("missing value inside the window names its timestamp") {
        const auto msg = message_of([&] {
            select_window(ds, "S1", {"NO2", "O3"}, TimeWindow(ts("2018-04-01T10:00"), ts("2018-04-01T22:00")));
        });
        CHECK(msg.find("2018-04-01T20:00:00Z") != std::string::npos);
    }
    SUBCASE("window outside the data or off grid fails") {
        CHECK_THROWS_AS(select_window(ds, "S1", {"NO2"}, TimeWindow(ts("2018-04-01T10:00"), ts("2018-04-02T10:00"))),
                        DataError);
        CHECK_THROWS_AS(select_window(ds, "S1", {"NO2"}, TimeWindow(ts("2018-04-01T10:30"), ts("2018-04-01T12:00"))),
                        DataError);
    }
    SUBCASE("empty window") {
        CHECK_THROWS_AS(TimeWindow(ts("2018-04-01T10:00"), ts("2018-04-01T10:00")), DataError);
    }
}

TEST_CASE("csv round trip is bitwise") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(40.0, 15.0);
    StationDataset ds;
    for (const char* st : {"A", "B,quoted"}) {
        for (const char* sp : {"NO2", "O3"}) {
            RawSeries s;
            s.station = st;
            s.species = sp;
            s.t0 = ts("2018-03-31T22:00");
            for (int i = 0; i < 50; ++i) {
                if (i == 17 && std::string(sp) == "O3") {
                    s.values.emplace_back();
                } else {
                    s.values.emplace_back(g(rng));
                }
            }
            ds.add(s);
        }
    }
    const auto back = parse_csv(to_csv(ds));
    CHECK(back == ds);

    const auto dir = std::filesystem::temp_directory_path() / "airdyn_dataset_test";
    std::filesystem::create_directories(dir);
    write_csv(ds, dir / "d.csv");
    CHECK(load_csv(dir / "d.csv") == ds);
    std::filesystem::remove_all(dir);
}

TEST_CASE("custom schema and station metadata") {
    CsvSchema schema{"sid", "time", "pollutant", "conc"};
    const auto ds0 = parse_csv("time,sid,pollutant,conc\n2018-04-01T00:00,X,NO2,1\n2018-04-01T01:00,X,NO2,2\n", schema);
    CHECK(ds0.at("X", "NO2").values.size() == 2);
    CHECK_THROWS_AS(parse_csv("a,b,c\n1,2,3\n"), DataError);

    auto ds = ds0;
    const auto dir = std::filesystem::temp_directory_path() / "airdyn_meta_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "stations.csv");
        out << "station_id,name,latitude,longitude\nX,Villa Test,40.35,-3.71\n";
    }
    load_station_metadata(ds, dir / "stations.csv");
    CHECK(ds.metadata().at("X").name == "Villa Test");
    CHECK(*ds.metadata().at("X").latitude == doctest::Approx(40.35));
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset invariants on add") {
    StationDataset ds;
    RawSeries s;
    s.station = "A";
    s.species = "NO2";
    s.t0 = ts("2018-04-01T00:00");
    CHECK_THROWS_AS(ds.add(s), DataError);  // empty
    s.values = {1.0, 2.0};
    ds.add(s);
    CHECK_THROWS_AS(ds.add(s), DataError);  // duplicate key
    RawSeries o = s;
    o.species = "O3";
    o.t0 = ts("2018-04-01T01:00");
    CHECK_THROWS_AS(ds.add(o), DataError);  // different t0
    o.t0 = s.t0;
    o.values = {1.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(ds.add(o), DataError);
}
