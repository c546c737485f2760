#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include "ergoperiod/config.hpp"
#include "ergoperiod/error.hpp"
#include "ergoperiod/io.hpp"

using namespace ergoperiod;
using io::Json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ergoperiod_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

const char* kMinimal = R"({"schema": "ergoperiod/1", "experiment": "noise-check", "id": "x", "seed": 5})";

}  // namespace

TEST(CanonicalDump, SortedKeysAndFloatForm) {
  Json j = {{"b", 1.0}, {"a", 0.1}, {"c", 3}, {"d", std::nan("")}, {"e", "s"}};
  EXPECT_EQ(io::canonical_dump(j, -1), R"({"a":0.10000000000000001,"b":1.0,"c":3,"d":null,"e":"s"})");
  const auto pretty = io::canonical_dump(j);
  EXPECT_EQ(pretty.back(), '\n');
  EXPECT_EQ(io::canonical_dump(Json::parse(pretty), -1), io::canonical_dump(j, -1));
}

TEST(CanonicalDump, InfinityBecomesNull) {
  Json j = Json::array({std::numeric_limits<double>::infinity(), 1e300});
  EXPECT_EQ(io::canonical_dump(j, -1), "[null,1.0000000000000001e+300]");
}

TEST(Numbers, ShortestAndFixed) {
  EXPECT_EQ(io::format_number(0.5), "0.5");
  EXPECT_EQ(io::format_number(1.0), "1");
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_fixed17(0.1), "0.10000000000000001");
}

TEST(Digest, StableAndSensitive) {
  const Json a = {{"x", 1}, {"y", {1, 2}}};
  const Json b = {{"y", {1, 2}}, {"x", 1}};
  EXPECT_EQ(io::digest(a), io::digest(b));
  EXPECT_EQ(io::digest(a).size(), 16u);
  EXPECT_NE(io::digest(a), io::digest(Json{{"x", 2}, {"y", {1, 2}}}));
  // 64-bit FNV-1a of the two bytes "{}", computed by hand.
  EXPECT_EQ(io::digest(Json::object()), "08f44b07b5901a25");
}

TEST(PlotData, SinglePoint) {
  const auto path = scratch("one.csv");
  io::emit_plot_data({{1.0, 0.5}}, path);
  EXPECT_EQ(io::read_text(path), "x,y\n1,0.5\n");
}

TEST(PlotData, NamedColumnsAndEmptySeries) {
  const auto path = scratch("named.csv");
  io::emit_plot_data({{1, 0.25}, {2, 0.125}}, path, "n", "avg");
  EXPECT_EQ(io::read_text(path), "n,avg\n1,0.25\n2,0.125\n");
  try {
    io::emit_plot_data({}, scratch("empty.csv"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
    EXPECT_NE(std::string(e.what()).find("EmptySeries"), std::string::npos);
  }
}

TEST(Table, WritesRows) {
  const auto path = scratch("table.csv");
  io::write_table({"a", "b", "c"}, {{1, 2, 3}, {0.5, -1, 1e-20}}, path);
  EXPECT_EQ(io::read_text(path), "a,b,c\n1,2,3\n0.5,-1,1e-20\n");
}

TEST(ReadText, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { io::read_text("/nonexistent/dir/file.json"); }), ErrorCode::IoError);
}

TEST(Config, MinimalDefaults) {
  const auto c = config::parse_text(kMinimal);
  EXPECT_EQ(c.experiment, config::ExperimentKind::NoiseCheck);
  EXPECT_EQ(c.id, "x");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.workers, 1u);
  EXPECT_EQ(c.out_dir, "out");
}

TEST(Config, RoundTripFullyPopulated) {
  config::ExperimentConfig c;
  c.experiment = config::ExperimentKind::ConditionA;
  c.id = "full";
  c.seed = 18446744073709551615ull;
  c.workers = 3;
  c.out_dir = "results";
  c.system.noise = config::NoiseSpec{};
  c.system.cocycle = config::CocycleSpec{};
  // Fields a kind does not use keep their defaults, as they would after parsing.
  c.system.noise->kind = "bernoulli";
  c.system.noise->symbols = 3;
  c.system.noise->window = 6;
  c.system.noise->weights = {0.2, 0.3, 0.5};
  c.system.cocycle->kind = "finite-map";
  c.system.cocycle->maps = {{2, 1, 3}, {1, 1, 1}};
  c.system.cocycle->weights = {0.4, 0.6};
  c.system.cocycle->window = 5;
  c.system.matrix = std::vector<std::vector<double>>{{0.5, 0.5}, {1, 0}};
  c.system.tau = 2;
  c.system.rho0 = std::vector<double>{0.25, 0.75};
  c.system.start_state = 2;
  c.system.offset = 0.125;
  c.params.n = 1000;
  c.params.n_paths = 10;
  c.params.n_shifts = 500;
  c.params.trials = 7;
  c.params.m = 4;
  c.params.bins = 16;
  c.params.window = 9;
  c.params.resamples = 50;
  c.params.s = 0.5;
  c.params.shift = 1;
  c.params.delta = 0.25;
  c.params.atol = 1e-9;
  c.params.epsilon = 0.1;
  c.params.tol = 1e-11;
  c.params.z_max = 3.5;
  c.params.max_fraction = 0.02;
  c.params.target = 0.1;
  c.params.xi_constant = 2;
  c.params.horizons = std::vector<double>{10, 100};
  c.params.lags = std::vector<int>{1, 2};
  c.params.times = std::vector<int>{0, 3};
  c.params.method = "structural";
  c.params.xi = "constant";
  c.params.circle_points = 12;
  c.params.p = 1;
  c.params.q = 4;
  c.expect.ergodic = true;
  c.expect.witness = std::vector<int>{1};
  c.expect.violations = 0;
  const auto doc = config::serialize(c);
  EXPECT_EQ(io::canonical_dump(config::serialize(config::parse(doc))), io::canonical_dump(doc));
  EXPECT_EQ(config::parse(doc), c);
  EXPECT_EQ(config::parse_text(io::canonical_dump(doc)), c);
}

TEST(Config, ShippedConfigsRoundTrip) {
  for (const auto& entry : std::filesystem::directory_iterator(ERGO_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const auto c = config::load(entry.path());
    EXPECT_EQ(config::parse(config::serialize(c)), c) << entry.path();
    EXPECT_EQ(c.base_dir, entry.path().parent_path());
  }
}

TEST(Config, KeysForeignToTheKindRejected) {
  auto doc = Json::parse(kMinimal);
  doc["system"] = {{"noise", {{"kind", "bernoulli"}, {"alpha", 0.3}}}};
  EXPECT_EQ(code_of([&] { config::parse(doc); }), ErrorCode::ConfigInvalid);
}

TEST(Config, UnknownKeysRejected) {
  auto bad = Json::parse(kMinimal);
  bad["sed"] = 1;
  EXPECT_EQ(code_of([&] { config::parse(bad); }), ErrorCode::ConfigInvalid);
  auto nested = Json::parse(kMinimal);
  nested["params"] = {{"n", 10}, {"bogus", true}};
  try {
    config::parse(nested);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("params.bogus"), std::string::npos) << e.what();
  }
}

TEST(Config, SchemaAndTypesChecked) {
  auto doc = Json::parse(kMinimal);
  doc["schema"] = "ergoperiod/2";
  EXPECT_EQ(code_of([&] { config::parse(doc); }), ErrorCode::ConfigInvalid);
  doc = Json::parse(kMinimal);
  doc["experiment"] = "nope";
  EXPECT_EQ(code_of([&] { config::parse(doc); }), ErrorCode::ConfigInvalid);
  doc = Json::parse(kMinimal);
  doc["seed"] = -1;
  EXPECT_EQ(code_of([&] { config::parse(doc); }), ErrorCode::ConfigInvalid);
  doc = Json::parse(kMinimal);
  doc["params"] = {{"n", "many"}};
  EXPECT_EQ(code_of([&] { config::parse(doc); }), ErrorCode::ConfigInvalid);
  doc = Json::parse(kMinimal);
  doc.erase("id");
  EXPECT_EQ(code_of([&] { config::parse(doc); }), ErrorCode::ConfigInvalid);
  // The seed is never implied.
  doc = Json::parse(kMinimal);
  doc.erase("seed");
  EXPECT_EQ(code_of([&] { config::parse(doc); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config::parse_text("{not json"); }), ErrorCode::ConfigInvalid);
}

TEST(Config, ExperimentNames) {
  const auto& names = config::experiment_names();
  EXPECT_EQ(names.size(), 10u);
  for (auto name : names) EXPECT_EQ(config::to_string(config::parse_experiment(name)), name);
}
