/*
   Copyright 2026 The convproxy Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Exercises the shared library strictly through its C surface; no core
// headers are included here.

#include "convproxy.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

// RAII helpers so failing REQUIREs cannot leak handles.
struct ConfigHandle {
  cvp_config* ptr = nullptr;
  ~ConfigHandle() { cvp_config_free(ptr); }
};

struct RecordsHandle {
  cvp_records* ptr = nullptr;
  ~RecordsHandle() { cvp_records_free(ptr); }
};

struct CString {
  char* ptr = nullptr;
  ~CString() { cvp_string_free(ptr); }
  std::string str() const { return ptr != nullptr ? ptr : ""; }
};

std::string temp_path(const char* name) {
  return std::string("cvp_capi_test_") + name;
}

}  // namespace

TEST_CASE("version and error strings have static storage") {
  const char* v = cvp_version();
  REQUIRE(v != nullptr);
  CHECK(std::string(v) == "1.0.0");
  REQUIRE(cvp_last_error() != nullptr);
}

TEST_CASE("config lifecycle: create, set, serialize, hash, free") {
  ConfigHandle cfg;
  REQUIRE(cvp_config_create(&cfg.ptr) == CVP_OK);
  REQUIRE(cfg.ptr != nullptr);
  CHECK(std::string(cvp_last_error()).empty());

  CHECK(cvp_config_set(cfg.ptr, "schedule.threads", "2") == CVP_OK);
  CHECK(cvp_config_set(cfg.ptr, "grid.columns", "32") == CVP_OK);

  CString text;
  REQUIRE(cvp_config_serialize(cfg.ptr, &text.ptr) == CVP_OK);
  CHECK(text.str().find("threads = 2\n") != std::string::npos);
  CHECK(text.str().find("columns = 32\n") != std::string::npos);

  CString hash;
  REQUIRE(cvp_config_hash(cfg.ptr, &hash.ptr) == CVP_OK);
  CHECK(hash.str().size() == 16);

  // Reparsing the canonical text reproduces the hash.
  ConfigHandle back;
  REQUIRE(cvp_config_parse(text.ptr, &back.ptr) == CVP_OK);
  CString hash2;
  REQUIRE(cvp_config_hash(back.ptr, &hash2.ptr) == CVP_OK);
  CHECK(hash2.str() == hash.str());
}

TEST_CASE("config errors surface status codes and messages") {
  ConfigHandle cfg;
  CHECK(cvp_config_parse("[warp]\n", &cfg.ptr) == CVP_ERR_CONFIG);
  CHECK(std::string(cvp_last_error()).find("unknown section") !=
        std::string::npos);

  CHECK(cvp_config_parse(nullptr, &cfg.ptr) == CVP_ERR_INVALID);
  CHECK(std::string(cvp_last_error()).find("null") != std::string::npos);
  CHECK(cvp_config_create(nullptr) == CVP_ERR_INVALID);

  ConfigHandle ok;
  REQUIRE(cvp_config_create(&ok.ptr) == CVP_OK);
  CHECK(cvp_config_set(ok.ptr, "schedule.threads", "zero") == CVP_ERR_CONFIG);
  CHECK(cvp_config_set(ok.ptr, "nodot", "1") == CVP_ERR_CONFIG);
  CHECK(cvp_config_set(nullptr, "schedule.threads", "1") == CVP_ERR_INVALID);

  // A successful call clears the thread's error message.
  CString text;
  REQUIRE(cvp_config_serialize(ok.ptr, &text.ptr) == CVP_OK);
  CHECK(std::string(cvp_last_error()).empty());
}

TEST_CASE("config file loading") {
  const std::string path = temp_path("cfg.ini");
  {
    std::ofstream out(path);
    out << "[grid]\ncolumns = 24\nlevels = 5\n";
  }
  ConfigHandle cfg;
  REQUIRE(cvp_config_load(path.c_str(), &cfg.ptr) == CVP_OK);
  CString text;
  REQUIRE(cvp_config_serialize(cfg.ptr, &text.ptr) == CVP_OK);
  CHECK(text.str().find("columns = 24\n") != std::string::npos);

  ConfigHandle missing;
  CHECK(cvp_config_load("no_such_dir/no_such_file.ini", &missing.ptr) ==
        CVP_ERR_IO);
  CHECK(!std::string(cvp_last_error()).empty());
  std::remove(path.c_str());
}

TEST_CASE("experiments run end to end through the C API") {
  ConfigHandle cfg;
  REQUIRE(cvp_config_create(&cfg.ptr) == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "grid.columns", "16") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "grid.levels", "8") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "run.mode", "simulated") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "run.repetitions", "3") == CVP_OK);

  RecordsHandle recs;
  REQUIRE(cvp_run_experiment(cfg.ptr, "run", &recs.ptr) == CVP_OK);
  long long n = 0;
  REQUIRE(cvp_records_count(recs.ptr, &n) == CVP_OK);
  CHECK(n == 3);

  CString csv;
  REQUIRE(cvp_records_csv(recs.ptr, &csv.ptr) == CVP_OK);
  CHECK(csv.str().rfind("experiment,config_hash,rep,", 0) == 0);

  CString md;
  REQUIRE(cvp_report_markdown(recs.ptr, &md.ptr) == CVP_OK);
  CHECK(md.str().find("## Run summary") != std::string::npos);

  RecordsHandle bogus;
  CHECK(cvp_run_experiment(cfg.ptr, "bench-everything", &bogus.ptr) ==
        CVP_ERR_CONFIG);
  CHECK(cvp_run_experiment(nullptr, "run", &bogus.ptr) == CVP_ERR_INVALID);
}

TEST_CASE("records survive a save/load round trip") {
  ConfigHandle cfg;
  REQUIRE(cvp_config_create(&cfg.ptr) == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "grid.columns", "16") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "grid.levels", "8") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "run.mode", "simulated") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "run.repetitions", "2") == CVP_OK);

  RecordsHandle recs;
  REQUIRE(cvp_run_experiment(cfg.ptr, "run", &recs.ptr) == CVP_OK);
  CString csv;
  REQUIRE(cvp_records_csv(recs.ptr, &csv.ptr) == CVP_OK);

  const std::string path = temp_path("records.csv");
  REQUIRE(cvp_records_save(recs.ptr, path.c_str()) == CVP_OK);

  RecordsHandle loaded;
  REQUIRE(cvp_records_load(path.c_str(), &loaded.ptr) == CVP_OK);
  long long n = 0;
  REQUIRE(cvp_records_count(loaded.ptr, &n) == CVP_OK);
  CHECK(n == 2);
  CString csv2;
  REQUIRE(cvp_records_csv(loaded.ptr, &csv2.ptr) == CVP_OK);
  CHECK(csv2.str() == csv.str());
  std::remove(path.c_str());

  RecordsHandle missing;
  CHECK(cvp_records_load("no_such_records.csv", &missing.ptr) == CVP_ERR_IO);

  const std::string bad = temp_path("bad.csv");
  {
    std::ofstream out(bad);
    out << "not,a,records,file\n";
  }
  RecordsHandle garbage;
  CHECK(cvp_records_load(bad.c_str(), &garbage.ptr) == CVP_ERR_CONFIG);
  std::remove(bad.c_str());
}

TEST_CASE("error growth runs through the C API") {
  ConfigHandle cfg;
  REQUIRE(cvp_config_create(&cfg.ptr) == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "grid.columns", "48") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "grid.levels", "6") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "grid.seed", "17") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "schedule.threads", "2") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "run.variant", "approx-exp") == CVP_OK);
  REQUIRE(cvp_config_set(cfg.ptr, "run.timesteps", "3") == CVP_OK);

  CString series;
  int envelope_ok = 0;
  double worst = -1.0;
  REQUIRE(cvp_error_growth(cfg.ptr, &series.ptr, &envelope_ok, &worst) ==
          CVP_OK);
  CHECK(envelope_ok == 1);
  CHECK(worst >= 0.0);
  CHECK(worst < 1.0);
  CHECK(series.str().rfind("timestep,rms_mod,rms_pert\n", 0) == 0);

  // Output pointers are optional.
  CHECK(cvp_error_growth(cfg.ptr, nullptr, nullptr, nullptr) == CVP_OK);
  CHECK(cvp_error_growth(nullptr, nullptr, nullptr, nullptr) ==
        CVP_ERR_INVALID);
}

TEST_CASE("savings extrapolation through the C API") {
  double days = 0.0;
  REQUIRE(cvp_extrapolate_savings(10.0, 5.0, 1000.0, &days) == CVP_OK);
  CHECK(days == doctest::Approx(8.449074074074074).epsilon(1e-12));
  CHECK(cvp_extrapolate_savings(10.0, 0.0, 1000.0, &days) == CVP_ERR_CONFIG);
  CHECK(cvp_extrapolate_savings(10.0, 5.0, 1000.0, nullptr) ==
        CVP_ERR_INVALID);

  CString md;
  REQUIRE(cvp_extrapolation_report(10.0, 5.0, 1000.0, &md.ptr) == CVP_OK);
  CHECK(md.str().find("## Projected compute savings") != std::string::npos);
  CHECK(md.str().find("8.449074") != std::string::npos);
  CHECK(md.str().find("181") != std::string::npos);
}

TEST_CASE("destructors and free functions tolerate null") {
  cvp_config_free(nullptr);
  cvp_records_free(nullptr);
  cvp_string_free(nullptr);
  CHECK(true);
}
