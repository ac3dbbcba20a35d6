#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <filesystem>
#include <limits>
#include <random>

#include "hmpc/error.hpp"
#include "hmpc/model_io.hpp"
#include "hmpc/thermal.hpp"
#include "oracles.hpp"

using namespace hmpc;

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::DesignFailed;
}

const std::string kConfigDir = HMPC_CONFIG_DIR;

}  // namespace

TEST(MatrixJson, RandomRoundTripIsBitwise) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> expo(-30.0, 30.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix m = oracle::random_matrix(1 + trial % 5, 1 + trial % 3, rng);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] *= std::pow(10.0, expo(rng));
    const Json j = Json::parse(matrix_to_json(m).dump());
    EXPECT_TRUE(bitwise_equal(matrix_from_json(j), m));
    const Vector v = m.col(0);
    EXPECT_TRUE(bitwise_equal(vector_from_json(Json::parse(vector_to_json(v).dump())), v));
  }
}

TEST(MatrixJson, EmptyShapesSurvive) {
  const Matrix no_cols(4, 0);
  const Matrix back = matrix_from_json(Json::parse(matrix_to_json(no_cols).dump()));
  EXPECT_EQ(back.rows(), 4);
  EXPECT_EQ(back.cols(), 0);
  const Matrix none = matrix_from_json(matrix_to_json(Matrix(0, 0)));
  EXPECT_EQ(none.size(), 0);
}

TEST(MatrixJson, NonFiniteValuesBecomeStrings) {
  Vector v(3);
  v << std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 1.5;
  const Json j = vector_to_json(v);
  EXPECT_EQ(j[0], "inf");
  EXPECT_EQ(j[1], "-inf");
  EXPECT_EQ(j[2], 1.5);
  EXPECT_EQ(kind_of([&] { vector_from_json(j); }), ErrorKind::FormatError);
}

TEST(MatrixJson, MalformedInputIsFormatError) {
  EXPECT_EQ(kind_of([] { matrix_from_json(Json::parse("[[1, 2], [3]]")); }), ErrorKind::FormatError);
  EXPECT_EQ(kind_of([] { matrix_from_json(Json::parse("{\"rows\": 2}")); }), ErrorKind::FormatError);
  EXPECT_EQ(kind_of([] { matrix_from_json(Json::parse("3")); }), ErrorKind::FormatError);
  EXPECT_EQ(kind_of([] { vector_from_json(Json::parse("[1, \"x\"]")); }), ErrorKind::FormatError);
}

TEST(ModelJson, BenchmarkRoundTripIsBitwise) {
  const auto model = build_thermal_model(load_building_config(kConfigDir + "/two_apartments.json"));
  const auto back = model_from_json(Json::parse(model_to_json(model).dump()));
  EXPECT_TRUE(bitwise_equal(back.A, model.A));
  EXPECT_TRUE(bitwise_equal(back.B, model.B));
  ASSERT_EQ(back.count(), model.count());
  for (int i = 0; i < model.count(); ++i) {
    EXPECT_TRUE(bitwise_equal(back.subsystems[i].E, model.subsystems[i].E));
    EXPECT_EQ(back.subsystems[i].input_set.radius, model.subsystems[i].input_set.radius);
  }
  Json bad = model_to_json(model);
  bad["format"] = "hmpc-model v9";
  EXPECT_EQ(kind_of([&] { model_from_json(bad); }), ErrorKind::FormatError);
}

TEST(BuildingJson, RoundTripAndUnknownKeys) {
  const auto cfg = load_building_config(kConfigDir + "/two_apartments.json");
  const auto back = building_from_json(Json::parse(building_to_json(cfg).dump()));
  EXPECT_EQ(back.rooms.size(), cfg.rooms.size());
  EXPECT_EQ(back.walls.size(), cfg.walls.size());
  EXPECT_EQ(back.heaters, cfg.heaters);
  EXPECT_TRUE(bitwise_equal(back.q_bar, cfg.q_bar));
  EXPECT_TRUE(bitwise_equal(build_thermal_model(back).A, build_thermal_model(cfg).A));

  Json j = building_to_json(cfg);
  j["k3t"] = 1.0;
  EXPECT_EQ(kind_of([&] { building_from_json(j); }), ErrorKind::FormatError);
  j = building_to_json(cfg);
  j["rooms"][0]["volume"] = 3.0;
  EXPECT_EQ(kind_of([&] { building_from_json(j); }), ErrorKind::FormatError);
  j = building_to_json(cfg);
  j["dt"] = "ninety";
  EXPECT_EQ(kind_of([&] { building_from_json(j); }), ErrorKind::FormatError);
  j = building_to_json(cfg);
  j["walls"][0]["rooms"] = {"A1"};
  EXPECT_EQ(kind_of([&] { building_from_json(j); }), ErrorKind::FormatError);
  j = building_to_json(cfg);
  j["rooms"][2]["floor_area"] = -1.0;
  EXPECT_EQ(kind_of([&] { building_from_json(j); }), ErrorKind::ConfigInvalid);
}

TEST(RunJson, RoundTripAndValidation) {
  auto run = load_run_config(kConfigDir + "/benchmark_run.json");
  EXPECT_EQ(run.N_L, 20);
  EXPECT_EQ(run.N_H, 10);
  EXPECT_EQ(run.r_h, 0.1);
  EXPECT_EQ(run.r_ll, 10.0);
  EXPECT_EQ(run.x0_value, -2.0);
  run.rho_delta_u_hat = Vector::Constant(2, 3.0);
  run.rho_u_bar = Vector::Constant(2, 40.0);
  run.x0 = Vector::LinSpaced(10, -1.0, 1.0);
  const Json j = run_to_json(run);
  const auto back = run_from_json(Json::parse(j.dump()));
  EXPECT_EQ(run_to_json(back).dump(), j.dump());
  EXPECT_TRUE(bitwise_equal(*back.x0, *run.x0));

  Json bad = j;
  bad["NL"] = 5;
  EXPECT_EQ(kind_of([&] { run_from_json(bad); }), ErrorKind::FormatError);
  bad = j;
  bad["N_L"] = 0;
  EXPECT_EQ(kind_of([&] { run_from_json(bad); }), ErrorKind::ConfigInvalid);
  bad = j;
  bad["N_H"] = 2.5;
  EXPECT_EQ(kind_of([&] { run_from_json(bad); }), ErrorKind::FormatError);
  bad = j;
  bad["radii"].erase("rho_u_bar");
  EXPECT_EQ(kind_of([&] { run_from_json(bad); }), ErrorKind::FormatError);
}

TEST(Files, MissingAndBrokenFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "hmpc_model_io_test";
  std::filesystem::create_directories(dir);
  EXPECT_EQ(kind_of([&] { load_json(dir / "absent.json"); }), ErrorKind::FormatError);
  {
    std::ofstream out(dir / "broken.json");
    out << "{\"N_L\": 20,";
  }
  EXPECT_EQ(kind_of([&] { load_run_config(dir / "broken.json"); }), ErrorKind::FormatError);
  const Json j = {{"a", 1.0 / 3.0}};
  save_json(dir / "saved.json", j);
  EXPECT_EQ(load_json(dir / "saved.json"), j);
  std::filesystem::remove_all(dir);
}

TEST(ConfigHash, MatchesIndependentFnv) {
  EXPECT_EQ(fnv1a("a"), "af63dc4c8601ec8c");  // published FNV-1a test vector
  const Json j = run_to_json(load_run_config(kConfigDir + "/benchmark_run.json"));
  EXPECT_EQ(config_hash(j), fnv1a(j.dump()));
  EXPECT_EQ(config_hash(j), config_hash(Json::parse(j.dump())));
  Json changed = j;
  changed["N_L"] = 21;
  EXPECT_NE(config_hash(changed), config_hash(j));
  EXPECT_EQ(config_hash(j).size(), 16u);
}

TEST(ModelJson, MissingFieldsAreFormatErrors) {
  const auto model = build_thermal_model(load_building_config(kConfigDir + "/two_apartments.json"));
  Json j = model_to_json(model);
  j["subsystems"][0].erase("B");
  EXPECT_EQ(kind_of([&] { model_from_json(j); }), ErrorKind::FormatError);
  j = model_to_json(model);
  j["coupling"][0].erase("to");
  EXPECT_EQ(kind_of([&] { model_from_json(j); }), ErrorKind::FormatError);
  Json b = building_to_json(load_building_config(kConfigDir + "/two_apartments.json"));
  b["walls"][0].erase("rooms");
  EXPECT_EQ(kind_of([&] { building_from_json(b); }), ErrorKind::FormatError);
}
