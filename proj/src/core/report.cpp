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

#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>

#include "errors.hpp"

namespace convproxy {

namespace {

std::string num(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

double cov_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  if (v.size() < 2 || m == 0.0) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1)) / m;
}

std::string stats_line(const char* what, const std::vector<double>& v) {
  return std::string("_") + what + ": median " + num(median_of(v)) +
         ", mean " + num(mean_of(v)) + ", CoV " +
         num(100.0 * cov_of(v), 3) + "%, n=" + std::to_string(v.size()) +
         "_\n";
}

// Records grouped by one note key, preserving first-seen order.
std::vector<std::pair<std::string, std::vector<const BenchRecord*>>> group_by(
    const std::vector<BenchRecord>& recs, const std::string& key) {
  std::vector<std::pair<std::string, std::vector<const BenchRecord*>>> groups;
  for (const BenchRecord& r : recs) {
    const std::string v = note_value(r.notes, key);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == v; });
    if (it == groups.end()) {
      groups.push_back({v, {&r}});
    } else {
      it->second.push_back(&r);
    }
  }
  return groups;
}

std::vector<double> walls_of(const std::vector<const BenchRecord*>& rs) {
  std::vector<double> w;
  w.reserve(rs.size());
  for (const BenchRecord* r : rs) w.push_back(r->wall_s);
  return w;
}

std::string report_run(const std::vector<BenchRecord>& recs) {
  std::string out = "## Run summary\n\n";
  out += "| rep | wall_s | overhead_% | imbalance | copy_s | transfer_s |\n";
  out += "|----:|-------:|-----------:|----------:|-------:|-----------:|\n";
  std::vector<double> walls;
  for (const BenchRecord& r : recs) {
    out += "| " + std::to_string(r.rep) + " | " + num(r.wall_s) + " | " +
           num(r.overhead_pct, 4) + " | " + num(r.imbalance, 4) + " | " +
           num(r.copy_s) + " | " + num(r.transfer_s) + " |\n";
    walls.push_back(r.wall_s);
  }
  out += "\n" + stats_line("wall time (s)", walls);
  return out;
}

std::string report_sweep(const std::vector<BenchRecord>& recs) {
  std::string out = "## Dynamic-schedule chunk-size sweep\n\n";
  out += "| chunk size | median wall | mean wall | overhead_% (median) | runs |\n";
  out += "|-----------:|------------:|----------:|--------------------:|-----:|\n";
  for (auto& [size, rs] : group_by(recs, "omp_chunk")) {
    std::vector<double> walls = walls_of(rs);
    std::vector<double> ovh;
    for (const BenchRecord* r : rs) ovh.push_back(r->overhead_pct);
    out += "| " + size + " | " + num(median_of(walls)) + " | " +
           num(mean_of(walls)) + " | " + num(median_of(ovh), 4) + " | " +
           std::to_string(rs.size()) + " |\n";
  }
  return out;
}

std::string report_firstprivate(const std::vector<BenchRecord>& recs) {
  std::string out = "## Data-environment copy cost\n\n";
  out += "| data env | median wall_s | overhead_% (median) | copy_s (median) | copy_s (mean) |\n";
  out += "|----------|--------------:|--------------------:|----------------:|--------------:|\n";
  for (auto& [env, rs] : group_by(recs, "data_env")) {
    std::vector<double> walls = walls_of(rs);
    std::vector<double> ovh, cps;
    for (const BenchRecord* r : rs) {
      ovh.push_back(r->overhead_pct);
      cps.push_back(r->copy_s);
    }
    out += "| " + env + " | " + num(median_of(walls)) + " | " +
           num(median_of(ovh), 4) + " | " + num(median_of(cps)) + " | " +
           num(mean_of(cps)) + " |\n";
  }
  return out;
}

std::string report_falseshare(const std::vector<BenchRecord>& recs) {
  std::string out = "## Write-loop layout comparison\n\n";
  out += "| layout | pad | shared lines | intra stride | median s | writes/s (median) |\n";
  out += "|--------|----:|-------------:|-------------:|---------:|------------------:|\n";
  for (auto& [orient, rs] : group_by(recs, "orientation")) {
    std::vector<double> walls = walls_of(rs);
    std::vector<double> wps;
    for (const BenchRecord* r : rs) {
      wps.push_back(std::strtod(note_value(r->notes, "writes_per_s").c_str(),
                                nullptr));
    }
    const BenchRecord* first = rs.front();
    out += "| " + orient + " | " + note_value(first->notes, "pad") + " | " +
           note_value(first->notes, "collisions") + " | " +
           note_value(first->notes, "intra_stride") + " | " +
           num(median_of(walls)) + " | " + num(median_of(wps), 4) + " |\n";
  }
  return out;
}

std::string report_hetero(const std::vector<BenchRecord>& recs) {
  std::string out = "## Host/device partitioning\n\n";
  out += "| partition | f_device | median wall | host busy | device busy | transfer_s |\n";
  out += "|-----------|---------:|------------:|----------:|------------:|-----------:|\n";
  std::map<std::string, double> medians;
  for (auto& [part, rs] : group_by(recs, "part")) {
    std::vector<double> walls = walls_of(rs);
    std::vector<double> tr;
    for (const BenchRecord* r : rs) tr.push_back(r->transfer_s);
    const BenchRecord* first = rs.front();
    const double med = median_of(walls);
    medians[part] = med;
    out += "| " + part + " | " + note_value(first->notes, "f_device") + " | " +
           num(med) + " | " + note_value(first->notes, "host_busy_s") + " | " +
           note_value(first->notes, "device_busy_s") + " | " +
           num(median_of(tr)) + " |\n";
  }
  if (medians.count("host-only") && medians.count("split") &&
      medians["split"] > 0.0) {
    out += "\n_split speedup vs host-only: " +
           num(medians["host-only"] / medians["split"], 4) + "x_\n";
  }
  return out;
}

std::string report_error_growth(const std::vector<BenchRecord>& recs) {
  std::string out = "## Rounding-envelope validation\n\n";
  out += "| variant | timesteps | envelope holds | worst ratio |\n";
  out += "|---------|----------:|----------------|------------:|\n";
  for (const BenchRecord& r : recs) {
    out += "| " + note_value(r.notes, "variant") + " | " +
           note_value(r.notes, "timesteps") + " | " +
           note_value(r.notes, "envelope_ok") + " | " +
           note_value(r.notes, "worst_ratio") + " |\n";
  }
  out += "\nA modification passes when its RMS deviation stays at or below "
         "the 1-ulp perturbation run's RMS deviation at every timestep.\n";
  return out;
}

}  // namespace

std::string report_markdown(const std::vector<BenchRecord>& recs) {
  if (recs.empty()) {
    throw ConfigError("report: no records");
  }
  const std::string family = recs.front().experiment;
  for (const BenchRecord& r : recs) {
    if (r.experiment != family) {
      throw ConfigError("report: mixed experiment families in input");
    }
  }
  if (family == "run") return report_run(recs);
  if (family == "sweep-chunk") return report_sweep(recs);
  if (family == "bench-firstprivate") return report_firstprivate(recs);
  if (family == "bench-falseshare") return report_falseshare(recs);
  if (family == "bench-hetero") return report_hetero(recs);
  if (family == "error-growth") return report_error_growth(recs);
  throw ConfigError("report: unknown experiment family '" + family + "'");
}

std::string extrapolation_report(double sec_saved_per_run,
                                 double run_interval_days, double years) {
  const double days =
      extrapolate_savings(sec_saved_per_run, run_interval_days, years);
  std::string out = "## Projected compute savings\n\n";
  out += "| scenario | s saved/run | run interval (days) | horizon (years) | days saved |\n";
  out += "|----------|------------:|--------------------:|----------------:|-----------:|\n";
  out += "| this configuration | " + num(sec_saved_per_run) + " | " +
         num(run_interval_days) + " | " + num(years) + " | " +
         num(days, 7) + " |\n";
  out += "| reference desk calibration (dual-socket node, 5-day cycle, "
         "1000-year horizon) | - | 5 | 1000 | " +
         num(kReferenceSavedDays, 4) + " |\n";
  return out;
}

}  // namespace convproxy
