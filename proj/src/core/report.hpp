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

#include "bench.hpp"

namespace convproxy {

// Markdown tables over benchmark records.  The family is taken from the
// records themselves; mixed-family record sets are rejected.
std::string report_markdown(const std::vector<BenchRecord>& recs);

// Comparison row rendered in every extrapolation table: a previously
// published desk calibration of the same projection (dual-socket node,
// five-day cycle, thousand-year horizon), kept as a fixed scale anchor.
inline constexpr double kReferenceSavedDays = 181.0;

// Markdown table for one savings projection next to the reference row.
std::string extrapolation_report(double sec_saved_per_run,
                                 double run_interval_days, double years);

}  // namespace convproxy
