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

#include "convproxy.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "core/bench.hpp"
#include "core/errors.hpp"
#include "core/report.hpp"

struct cvp_config {
  convproxy::ExperimentConfig cfg;
};

struct cvp_records {
  std::vector<convproxy::BenchRecord> recs;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) {
    std::memcpy(out, s.c_str(), s.size() + 1);
  }
  return out;
}

// Maps the library's exception taxonomy onto the status enum.  Runs the
// body inside a catch-all so no exception ever crosses the C boundary.
template <typename Fn>
cvp_status guarded(Fn&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const convproxy::ConfigError& e) {
    g_last_error = e.what();
    return CVP_ERR_CONFIG;
  } catch (const convproxy::KernelError& e) {
    g_last_error = e.what();
    return CVP_ERR_NUMERIC;
  } catch (const convproxy::ValidationError& e) {
    g_last_error = e.what();
    return CVP_ERR_CHECK;
  } catch (const convproxy::CalibrationError& e) {
    g_last_error = e.what();
    return CVP_ERR_CONFIG;
  } catch (const convproxy::PackError& e) {
    g_last_error = e.what();
    return CVP_ERR_INVALID;
  } catch (const std::ios_base::failure& e) {
    g_last_error = e.what();
    return CVP_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CVP_ERR_INVALID;
  } catch (...) {
    g_last_error = "unknown error";
    return CVP_ERR_INVALID;
  }
}

cvp_status require(bool ok, const char* what) {
  if (!ok) {
    g_last_error = what;
    return CVP_ERR_INVALID;
  }
  return CVP_OK;
}

}  // namespace

extern "C" {

const char* cvp_version(void) { return "1.0.0"; }

const char* cvp_last_error(void) { return g_last_error.c_str(); }

void cvp_string_free(char* s) { std::free(s); }

cvp_status cvp_config_create(cvp_config** out) {
  if (cvp_status st = require(out != nullptr, "cvp_config_create: null out"))
    return st;
  return guarded([&] {
    *out = new cvp_config{};
    return CVP_OK;
  });
}

cvp_status cvp_config_parse(const char* text, cvp_config** out) {
  if (cvp_status st = require(text != nullptr && out != nullptr,
                              "cvp_config_parse: null argument"))
    return st;
  return guarded([&] {
    auto parsed = convproxy::parse_config(text);
    *out = new cvp_config{std::move(parsed)};
    return CVP_OK;
  });
}

cvp_status cvp_config_load(const char* path, cvp_config** out) {
  if (cvp_status st = require(path != nullptr && out != nullptr,
                              "cvp_config_load: null argument"))
    return st;
  return guarded([&]() -> cvp_status {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      g_last_error = std::string("cannot open '") + path + "'";
      return CVP_ERR_IO;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    auto parsed = convproxy::parse_config(ss.str());
    *out = new cvp_config{std::move(parsed)};
    return CVP_OK;
  });
}

cvp_status cvp_config_set(cvp_config* cfg, const char* dotted_key,
                          const char* value) {
  if (cvp_status st =
          require(cfg != nullptr && dotted_key != nullptr && value != nullptr,
                  "cvp_config_set: null argument"))
    return st;
  return guarded([&] {
    convproxy::set_config_value(cfg->cfg, dotted_key, value);
    return CVP_OK;
  });
}

cvp_status cvp_config_serialize(const cvp_config* cfg, char** out_text) {
  if (cvp_status st = require(cfg != nullptr && out_text != nullptr,
                              "cvp_config_serialize: null argument"))
    return st;
  return guarded([&]() -> cvp_status {
    *out_text = dup_string(convproxy::serialize_config(cfg->cfg));
    return require(*out_text != nullptr, "out of memory");
  });
}

cvp_status cvp_config_hash(const cvp_config* cfg, char** out_hex) {
  if (cvp_status st = require(cfg != nullptr && out_hex != nullptr,
                              "cvp_config_hash: null argument"))
    return st;
  return guarded([&]() -> cvp_status {
    *out_hex = dup_string(convproxy::config_hash(cfg->cfg));
    return require(*out_hex != nullptr, "out of memory");
  });
}

void cvp_config_free(cvp_config* cfg) { delete cfg; }

cvp_status cvp_run_experiment(const cvp_config* cfg, const char* family,
                              cvp_records** out) {
  if (cvp_status st =
          require(cfg != nullptr && family != nullptr && out != nullptr,
                  "cvp_run_experiment: null argument"))
    return st;
  return guarded([&] {
    auto recs = convproxy::run_experiment(cfg->cfg, family);
    *out = new cvp_records{std::move(recs)};
    return CVP_OK;
  });
}

cvp_status cvp_error_growth(const cvp_config* cfg, char** out_series_csv,
                            int* out_envelope_ok, double* out_worst_ratio) {
  if (cvp_status st =
          require(cfg != nullptr, "cvp_error_growth: null config"))
    return st;
  return guarded([&]() -> cvp_status {
    std::string csv;
    const convproxy::ErrorGrowthSeries series =
        convproxy::error_growth_experiment(
            cfg->cfg, out_series_csv != nullptr ? &csv : nullptr);
    if (out_series_csv != nullptr) {
      *out_series_csv = dup_string(csv);
      if (cvp_status st = require(*out_series_csv != nullptr, "out of memory"))
        return st;
    }
    if (out_envelope_ok != nullptr) {
      *out_envelope_ok = series.envelope_ok ? 1 : 0;
    }
    if (out_worst_ratio != nullptr) {
      *out_worst_ratio = series.worst_ratio;
    }
    return CVP_OK;
  });
}

cvp_status cvp_extrapolate_savings(double sec_saved_per_run,
                                   double run_interval_days, double years,
                                   double* out_days) {
  if (cvp_status st =
          require(out_days != nullptr, "cvp_extrapolate_savings: null out"))
    return st;
  return guarded([&] {
    *out_days = convproxy::extrapolate_savings(sec_saved_per_run,
                                               run_interval_days, years);
    return CVP_OK;
  });
}

cvp_status cvp_records_count(const cvp_records* recs, long long* out_n) {
  if (cvp_status st = require(recs != nullptr && out_n != nullptr,
                              "cvp_records_count: null argument"))
    return st;
  *out_n = static_cast<long long>(recs->recs.size());
  return CVP_OK;
}

cvp_status cvp_records_csv(const cvp_records* recs, char** out_csv) {
  if (cvp_status st = require(recs != nullptr && out_csv != nullptr,
                              "cvp_records_csv: null argument"))
    return st;
  return guarded([&]() -> cvp_status {
    *out_csv = dup_string(convproxy::records_to_csv(recs->recs));
    return require(*out_csv != nullptr, "out of memory");
  });
}

cvp_status cvp_records_save(const cvp_records* recs, const char* path) {
  if (cvp_status st = require(recs != nullptr && path != nullptr,
                              "cvp_records_save: null argument"))
    return st;
  return guarded([&]() -> cvp_status {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
      g_last_error = std::string("cannot open '") + path + "' for writing";
      return CVP_ERR_IO;
    }
    out << convproxy::records_to_csv(recs->recs);
    out.flush();
    if (!out) {
      g_last_error = std::string("write failed for '") + path + "'";
      return CVP_ERR_IO;
    }
    return CVP_OK;
  });
}

cvp_status cvp_records_load(const char* path, cvp_records** out) {
  if (cvp_status st = require(path != nullptr && out != nullptr,
                              "cvp_records_load: null argument"))
    return st;
  return guarded([&]() -> cvp_status {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      g_last_error = std::string("cannot open '") + path + "'";
      return CVP_ERR_IO;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    auto recs = convproxy::records_from_csv(ss.str());
    *out = new cvp_records{std::move(recs)};
    return CVP_OK;
  });
}

cvp_status cvp_report_markdown(const cvp_records* recs, char** out_md) {
  if (cvp_status st = require(recs != nullptr && out_md != nullptr,
                              "cvp_report_markdown: null argument"))
    return st;
  return guarded([&]() -> cvp_status {
    *out_md = dup_string(convproxy::report_markdown(recs->recs));
    return require(*out_md != nullptr, "out of memory");
  });
}

cvp_status cvp_extrapolation_report(double sec_saved_per_run,
                                    double run_interval_days, double years,
                                    char** out_md) {
  if (cvp_status st = require(out_md != nullptr,
                              "cvp_extrapolation_report: null out"))
    return st;
  return guarded([&]() -> cvp_status {
    *out_md = dup_string(convproxy::extrapolation_report(
        sec_saved_per_run, run_interval_days, years));
    return require(*out_md != nullptr, "out of memory");
  });
}

void cvp_records_free(cvp_records* recs) { delete recs; }

}  // extern "C"
