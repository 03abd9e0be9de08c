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

#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "validate.hpp"

namespace convproxy {

// Experiment driver: each family executes a benchmark scenario described by
// an ExperimentConfig and emits flat records with a pinned CSV schema.

struct BenchRecord {
  std::string experiment;
  std::string config_hash;
  int rep = 0;
  double wall_s = 0.0;
  double overhead_pct = 0.0;
  double imbalance = 0.0;
  double copy_s = 0.0;
  double transfer_s = 0.0;
  std::string notes;  // semicolon-separated key=value pairs, no commas
};

inline constexpr const char* kCsvHeader =
    "experiment,config_hash,rep,wall_s,overhead_pct,imbalance,copy_s,"
    "transfer_s,notes";

std::string records_to_csv(const std::vector<BenchRecord>& recs);

// Parses CSV produced by records_to_csv.  Throws ConfigError when the
// header or a row does not match the schema.
std::vector<BenchRecord> records_from_csv(const std::string& csv);

// Families: "run", "sweep-chunk", "bench-firstprivate", "bench-falseshare",
// "bench-hetero", "error-growth".  Unknown family throws ConfigError.
std::vector<BenchRecord> run_experiment(const ExperimentConfig& cfg,
                                        const std::string& family);

// The error-growth scenario with its per-timestep series as CSV
// ("timestep,rms_mod,rms_pert").
ErrorGrowthSeries error_growth_experiment(const ExperimentConfig& cfg,
                                          std::string* series_csv);

// Projected days of compute saved when every run of a periodically
// re-executed job gets faster:
//   sec_saved_per_run * (365 * years / run_interval_days) / 86400.
double extrapolate_savings(double sec_saved_per_run, double run_interval_days,
                           double years);

// One note value out of "k1=v1;k2=v2;..."; empty string when absent.
std::string note_value(const std::string& notes, const std::string& key);

}  // namespace convproxy
