#include "qibla/cli.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "qibla/dataio.hpp"
#include "qibla/geodesy.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kData = QIBLA_DATA_DIR;
const fs::path kGolden = QIBLA_GOLDEN_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = qibla::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  EXPECT_TRUE(in) << p;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("qibla_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string tmp(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    return tmp(name);
  }

  fs::path dir_;
};

const std::string kTrace = (kData / "examples" / "trace.jsonl").string();
const std::string kCities = (kData / "cities.csv").string();

}  // namespace

// ---- golden outputs -----------------------------------------------------------

TEST_F(Cli, GoldenQibla) {
  const auto r = invoke(
      {"qibla", "--city", "Bandung", "--cities", kCities, "--decl", "0.8", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "qibla.json"));
}

TEST_F(Cli, GoldenQiblaWithoutDeclination) {
  const auto r = invoke({"qibla", "--lat", "51.5074", "--lon", "-0.1278", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "qibla_no_decl.json"));
}

TEST_F(Cli, GoldenDistance) {
  const auto r = invoke({"distance", "--from-lat", "-6.9147", "--from-lon", "107.6098", "--to-lat",
                         "21.4225", "--to-lon", "39.8262", "--method", "slc", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "distance.json"));
}

TEST_F(Cli, GoldenBearing) {
  const auto r = invoke({"bearing", "--from-lat", "50", "--from-lon", "-30", "--to-lat", "40",
                         "--to-lon", "60", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "bearing.json"));
}

TEST_F(Cli, GoldenSimulate) {
  const auto out = tmp("trace.jsonl");
  const auto r =
      invoke({"simulate", "--scenario", (kData / "scenarios" / "sweep_small.scn").string(), "--out",
              out, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "simulate.json"));
  EXPECT_EQ(slurp(out), slurp(kTrace));
}

TEST_F(Cli, GoldenCalibrate) {
  const auto r = invoke({"calibrate", "--trace", kTrace, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "calibrate.json"));
}

TEST_F(Cli, GoldenPipeline) {
  const auto out = tmp("report.json");
  const auto r = invoke({"pipeline", "--trace", kTrace, "--city", "Bandung", "--cities", kCities,
                         "--decl", "1", "--out", out, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kGolden / "pipeline.json"));
  EXPECT_EQ(slurp(out), slurp(kData / "examples" / "report.json"));
}

// ---- behaviour ----------------------------------------------------------------

TEST_F(Cli, MeridianIsExactlyNorth) {
  const auto r = invoke({"qibla", "--lat", "0", "--lon", "39.8262", "--format", "json"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["result"]["qibla_azimuth_deg"].get<double>(), 0.0);
  EXPECT_EQ(invoke({"qibla", "--lat", "0", "--lon", "39.8262"}).out.find("qibla azimuth: 0.00"),
            invoke({"qibla", "--lat", "0", "--lon", "39.8262"}).out.find("qibla azimuth: "));
}

TEST_F(Cli, CityMatchesLibrary) {
  const auto r = invoke({"qibla", "--city", "bandung", "--cities", kCities, "--format", "json"});
  ASSERT_EQ(r.code, 0);
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["result"]["qibla_azimuth_deg"].get<double>(),
            qibla::qibla_azimuth({-6.9147, 107.6098}).deg());
  EXPECT_EQ(doc["result"]["warning"], "none, magnetic=true assumed");
  EXPECT_EQ(doc["result"]["city"], "Bandung");
}

TEST_F(Cli, TextModeUsesTwoDecimals) {
  const auto r = invoke({"qibla", "--lat", "-6.9147", "--lon", "107.6098"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("qibla azimuth: 295.17 deg"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("8029.91 km"), std::string::npos) << r.out;
}

TEST_F(Cli, DistanceExamples) {
  auto km = [](const std::vector<std::string>& args) {
    auto full = args;
    full.insert(full.end(), {"--format", "json"});
    const auto r = invoke(full);
    EXPECT_EQ(r.code, 0) << r.err;
    return json::parse(r.out)["result"]["distance_km"].get<double>();
  };
  EXPECT_EQ(
      km({"distance", "--from-lat", "10", "--from-lon", "20", "--to-lat", "10", "--to-lon", "20"}),
      0.0);
  EXPECT_NEAR(
      km({"distance", "--from-lat", "0", "--from-lon", "0", "--to-lat", "0", "--to-lon", "180"}),
      20015.086796020573, 1e-6);
  const double h = km(
      {"distance", "--from-lat", "12.5", "--from-lon", "-40", "--to-lat", "-33", "--to-lon", "77"});
  const double s = km({"distance", "--from-lat", "12.5", "--from-lon", "-40", "--to-lat", "-33",
                       "--to-lon", "77", "--method", "slc"});
  EXPECT_NEAR(h / s, 1.0, 1e-6);
}

TEST_F(Cli, OutputsAreRepeatable) {
  const std::vector<std::string> args{"pipeline",    "--trace",  kTrace, "--lat",
                                      "0",           "--lon",    "100",  "--out",
                                      tmp("a.json"), "--format", "json"};
  const auto a = invoke(args);
  const auto b = invoke(args);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.code, 0);
  EXPECT_NE(a.err.find("magnetic=true"), std::string::npos);
  EXPECT_EQ(json::parse(a.out)["meta"].count("generated_at"), 0u);
  const auto c = invoke({"qibla", "--lat", "1", "--lon", "2", "--format", "json", "--timestamps"});
  EXPECT_EQ(json::parse(c.out)["meta"].count("generated_at"), 1u);
}

TEST_F(Cli, SimulateIsDeterministic) {
  const auto scn = (kData / "scenarios" / "acceptance.scn").string();
  ASSERT_EQ(invoke({"simulate", "--scenario", scn, "--out", tmp("a.jsonl")}).code, 0);
  const auto r = invoke({"simulate", "--scenario", scn, "--out", tmp("b.jsonl")});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "samples: 2300\n");
  EXPECT_EQ(slurp(tmp("a.jsonl")), slurp(tmp("b.jsonl")));
}

TEST_F(Cli, SimulateCountsSamples) {
  const auto scn = write("sixty.scn",
                         "scenario_version = 1\nduration_ms = 60000\nsample_rate_hz = 50\n"
                         "heading_deg = 10\nhorizontal_intensity_ut = 30\ninclination_deg = 40\n"
                         "declination_deg = 0\nrng_seed = 1\n");
  const auto r = invoke({"simulate", "--scenario", scn, "--out", tmp("t.jsonl")});
  EXPECT_EQ(r.out, "samples: 3000\n");
}

TEST_F(Cli, PassthroughFilterReportsRawHeadings) {
  const auto out = tmp("report.json");
  const auto r = invoke(
      {"pipeline", "--trace", kTrace, "--lat", "0", "--lon", "100", "--alpha", "1", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = qibla::read_report(out);
  ASSERT_FALSE(report.samples.empty());
  for (const auto& s : report.samples) {
    ASSERT_EQ(s.magnetic_heading.deg(), s.raw_magnetic_heading.deg());
  }
}

TEST_F(Cli, PipelineTextReport) {
  const auto out = tmp("report.txt");
  const auto r = invoke({"pipeline", "--trace", kTrace, "--lat", "0", "--lon", "100", "--decl", "0",
                         "--out", out, "--report-format", "text"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("final heading:"), std::string::npos);
  EXPECT_NE(slurp(out).find("deviation"), std::string::npos);
}

// ---- exit codes ---------------------------------------------------------------

TEST_F(Cli, ExitCodeTable) {
  const auto bad_scn = write("bad.scn", "scenario_version = 1\nduration_ms = -5\n");
  const auto tiny = write("tiny.jsonl",
                          "{\"format\":\"qibla-trace\",\"version\":1,\"calibration_end_ms\":null}\n"
                          "{\"type\":\"sample\",\"t_ms\":0,\"ax\":0,\"ay\":0,\"az\":-9.81,\"mx\":"
                          "30,\"my\":0,\"mz\":10}\n"
                          "{\"type\":\"sample\",\"t_ms\":20,\"ax\":0,\"ay\":0,\"az\":-9.81,\"mx\":"
                          "29,\"my\":1,\"mz\":10}\n");
  std::string flat = "{\"format\":\"qibla-trace\",\"version\":1,\"calibration_end_ms\":null}\n";
  for (int i = 0; i < 50; ++i) {
    flat += "{\"type\":\"sample\",\"t_ms\":" + std::to_string(20 * i) +
            ",\"ax\":0,\"ay\":0,\"az\":-9.81,\"mx\":30,\"my\":0,\"mz\":10}\n";
  }
  const auto same = write("same.jsonl", flat);
  const auto grid = (kData / "declination_example.grid").string();

  struct Row {
    std::vector<std::string> args;
    int code;
  };
  const Row rows[] = {
      {{"qibla", "--lat", "10", "--lon", "20"}, 0},
      {{"--help"}, 0},
      {{"qibla", "--lat", "-5", "--lon", "105", "--decl-grid", grid}, 0},
      {{"qibla", "--lat", "21.4225", "--lon", "39.8262"}, 2},
      {{"qibla", "--lat", "-21.4225", "--lon", "-140.1738"}, 2},
      {{"qibla", "--city", "Atlantis", "--cities", kCities}, 2},
      {{"qibla", "--city", "Bandung", "--cities", tmp("missing.csv")}, 2},
      {{"qibla", "--lat", "20", "--lon", "105", "--decl-grid", grid}, 2},
      {{"simulate", "--scenario", bad_scn, "--out", tmp("x.jsonl")}, 2},
      {{"simulate", "--scenario", tmp("missing.scn"), "--out", tmp("x.jsonl")}, 2},
      {{"pipeline", "--trace", kTrace, "--lat", "21.4225", "--lon", "39.8262", "--out",
        tmp("r.json")},
       2},
      {{"pipeline", "--trace", tiny, "--lat", "0", "--lon", "0", "--out", tmp("r.json")}, 3},
      {{"calibrate", "--trace", tiny}, 3},
      {{"calibrate", "--trace", same}, 3},
      {{}, 64},
      {{"frobnicate"}, 64},
      {{"qibla", "--lat", "95", "--lon", "0"}, 64},
      {{"qibla", "--lat", "10"}, 64},
      {{"qibla", "--lat", "10", "--lon", "20", "--city", "Bandung", "--cities", kCities}, 64},
      {{"qibla", "--city", "Bandung"}, 64},
      {{"qibla", "--lat", "10", "--lon", "20", "--decl", "1", "--decl-grid", grid}, 64},
      {{"qibla", "--lat", "10", "--lon", "20", "--format", "xml"}, 64},
      {{"qibla", "--lat", "ten", "--lon", "20"}, 64},
      {{"distance", "--from-lat", "0", "--from-lon", "0", "--to-lat", "1"}, 64},
      {{"distance", "--from-lat", "0", "--from-lon", "0", "--to-lat", "1", "--to-lon", "1",
        "--method", "vincenty"},
       64},
      {{"distance", "--from-lat", "0", "--from-lon", "0", "--to-lat", "1", "--to-lon", "1",
        "--radius-km", "-1"},
       64},
      {{"pipeline", "--trace", kTrace, "--lat", "0", "--lon", "0", "--alpha", "0", "--out",
        tmp("r.json")},
       64},
      {{"pipeline", "--trace", kTrace, "--lat", "0", "--lon", "0"}, 64},
  };
  for (const auto& row : rows) {
    std::string joined;
    for (const auto& a : row.args) joined += a + ' ';
    const auto r = invoke(row.args);
    EXPECT_EQ(r.code, row.code) << joined << "\n" << r.err;
    if (row.code != 0) EXPECT_FALSE(r.err.empty()) << joined;
  }
}

TEST_F(Cli, DegenerateMessageNamesTheError) {
  const auto r = invoke({"qibla", "--lat", "21.4225", "--lon", "39.8262"});
  EXPECT_NE(r.err.find("DegeneratePoints"), std::string::npos) << r.err;
  const auto s = invoke({"simulate", "--scenario", write("bad.scn", "scenario_version = 1\n"),
                         "--out", tmp("x.jsonl")});
  EXPECT_NE(s.err.find("duration_ms"), std::string::npos) << s.err;
}

// ---- the installed binary -----------------------------------------------------

TEST_F(Cli, RealBinaryMatchesInProcess) {
  const std::string cmd = std::string(QIBLA_CLI_PATH) + " qibla --city Bandung --cities " +
                          kCities + " --decl 0.8 --format json";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string out;
  char buf[4096];
  while (const std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_EQ(out, slurp(kGolden / "qibla.json"));

  const int rc = std::system(
      (std::string(QIBLA_CLI_PATH) + " qibla --lat 21.4225 --lon 39.8262 2>/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(rc), 2);
  const int usage = std::system((std::string(QIBLA_CLI_PATH) + " 2>/dev/null >/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(usage), 64);
}
