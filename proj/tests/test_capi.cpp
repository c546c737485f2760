#include <gtest/gtest.h>

#include <cstring>
#include <string>

#include <json.hpp>

#include "ergoperiod/ergoperiod.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  ergo_string_free(s);
  return out;
}

const char* kPsConfig = R"({
  "schema": "ergoperiod/1", "experiment": "ps-ergodic", "id": "capi", "seed": 3,
  "system": {"matrix": [[0,1,0,0],[1,0,0,0],[0,0,0,1],[0,0,1,0]], "tau": 2, "rho0": [0.5,0,0.5,0]},
  "expect": {"ergodic": false, "witness": [1, 2]}
})";

}  // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_STREQ(ergo_version(), "0.1.0");
  EXPECT_STREQ(ergo_status_string(ERGO_OK), "ok");
  EXPECT_STREQ(ergo_status_string(ERGO_NOT_INVARIANT), "NotInvariant");
  EXPECT_STREQ(ergo_status_string(ERGO_IO_ERROR), "IoError");
}

TEST(CApi, ExperimentNames) {
  ASSERT_EQ(ergo_experiment_count(), 10u);
  EXPECT_STREQ(ergo_experiment_name(0), "noise-check");
  EXPECT_EQ(ergo_experiment_name(10), nullptr);
}

TEST(CApi, ConfigRunLifecycle) {
  ergo_config* cfg = nullptr;
  ASSERT_EQ(ergo_config_parse(kPsConfig, nullptr, &cfg), ERGO_OK) << ergo_last_error();
  EXPECT_STREQ(ergo_last_error(), "");
  ASSERT_EQ(ergo_config_set_seed(cfg, 11), ERGO_OK);
  ASSERT_EQ(ergo_config_set_workers(cfg, 2), ERGO_OK);
  char* text = nullptr;
  ASSERT_EQ(ergo_config_to_json(cfg, &text), ERGO_OK);
  const auto doc = nlohmann::json::parse(take(text));
  EXPECT_EQ(doc["seed"], 11);
  EXPECT_EQ(doc["workers"], 2);

  ergo_run* run = nullptr;
  ASSERT_EQ(ergo_run_experiment(cfg, 0, &run), ERGO_OK) << ergo_last_error();
  EXPECT_EQ(ergo_run_passed(run), 1);
  char* result = nullptr;
  ASSERT_EQ(ergo_run_result_json(run, &result), ERGO_OK);
  const auto r = nlohmann::json::parse(take(result));
  EXPECT_EQ(r["experiment"], "ps-ergodic");
  EXPECT_FALSE(r["result"]["measures"][0]["verdict"]["ergodic"].get<bool>());
  char* manifest = nullptr;
  ASSERT_EQ(ergo_run_manifest_json(run, &manifest), ERGO_OK);
  EXPECT_EQ(nlohmann::json::parse(take(manifest))["workers"], 2);
  ergo_run_free(run);
  ergo_config_free(cfg);
}

TEST(CApi, ParseErrorsReportConfigInvalid) {
  ergo_config* cfg = nullptr;
  EXPECT_EQ(ergo_config_parse("{\"schema\": 1}", nullptr, &cfg), ERGO_CONFIG_INVALID);
  EXPECT_EQ(cfg, nullptr);
  EXPECT_NE(std::strlen(ergo_last_error()), 0u);
  EXPECT_EQ(ergo_config_parse(nullptr, nullptr, &cfg), ERGO_INVALID_ARGUMENT);
  EXPECT_EQ(ergo_config_load("/nonexistent/config.json", &cfg), ERGO_IO_ERROR);
}

TEST(CApi, RuntimeErrorCodes) {
  ergo_config* cfg = nullptr;
  std::string bad = kPsConfig;
  bad.replace(bad.find("\"tau\": 2"), 8, "\"tau\": 1");
  bad.replace(bad.find("[0.5,0,0.5,0]"), 13, "[1,0,0,0]");
  ASSERT_EQ(ergo_config_parse(bad.c_str(), nullptr, &cfg), ERGO_OK) << ergo_last_error();
  ergo_run* run = nullptr;
  EXPECT_EQ(ergo_run_experiment(cfg, 0, &run), ERGO_NOT_INVARIANT);
  EXPECT_EQ(run, nullptr);
  EXPECT_NE(std::string(ergo_last_error()).find("capi"), std::string::npos);
  ergo_config_free(cfg);
}

TEST(CApi, MatrixQueries) {
  const double flip[] = {0, 1, 1, 0};
  ergo_matrix* m = nullptr;
  ASSERT_EQ(ergo_matrix_create(2, flip, &m), ERGO_OK);
  char* pms = nullptr;
  ASSERT_EQ(ergo_periodic_measures_json(m, 2, &pms), ERGO_OK);
  EXPECT_EQ(nlohmann::json::parse(take(pms)).size(), 2u);

  const double delta[] = {1, 0};
  int ergodic = -1;
  std::uint64_t witness = 99;
  ASSERT_EQ(ergo_ps_ergodic(m, 2, delta, 1e-12, &ergodic, &witness), ERGO_OK);
  EXPECT_EQ(ergodic, 1);
  EXPECT_EQ(witness, 0u);

  const double phi[] = {0.2, 0.9};
  double value = 0.0;
  ASSERT_EQ(ergo_upper_expectation(m, 2, delta, phi, &value), ERGO_OK);
  EXPECT_EQ(value, 0.9);
  ergo_matrix_free(m);
}

TEST(CApi, MixtureWitnessMask) {
  const double p[] = {0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0};
  ergo_matrix* m = nullptr;
  ASSERT_EQ(ergo_matrix_create(4, p, &m), ERGO_OK);
  const double rho0[] = {0.5, 0, 0.5, 0};
  int ergodic = -1;
  std::uint64_t witness = 0;
  ASSERT_EQ(ergo_ps_ergodic(m, 2, rho0, 1e-12, &ergodic, &witness), ERGO_OK);
  EXPECT_EQ(ergodic, 0);
  EXPECT_EQ(witness, 0b0011u);
  ergo_matrix_free(m);
}

TEST(CApi, InvalidMatrix) {
  const double bad[] = {0.5, 0.4, 0, 1};
  ergo_matrix* m = nullptr;
  EXPECT_EQ(ergo_matrix_create(2, bad, &m), ERGO_INVALID_ARGUMENT);
  EXPECT_EQ(m, nullptr);
  EXPECT_EQ(ergo_matrix_create(2, nullptr, &m), ERGO_INVALID_ARGUMENT);
}
