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

#include <cstdint>
#include <string>
#include <vector>

#include "hetero.hpp"
#include "layout.hpp"

namespace convproxy {

// Experiment configuration: INI text in, strongly typed struct out, with a
// canonical serialization so equal configs hash equally.  Unknown sections,
// unknown keys and malformed values are rejected with the offending line.

enum class KernelKind { Deep, Shallow };

struct GridConfig {
  long long columns = 256;
  int levels = 30;
  long long chunk_columns = 0;  // 0: whole grid as one chunk
  double tropics_band = 0.3;
  std::uint64_t seed = 42;
};

struct ScheduleConfig {
  Strategy strategy = Strategy::Dynamic;
  int omp_chunk = 1;
  int threads = 4;
  DataEnvMode data_env = DataEnvMode::SharedArrays;
  std::size_t workspace_bytes = std::size_t{16} << 20;
};

struct LayoutConfig {
  Orientation orientation = Orientation::ColumnOuter;
  int pad = -1;  // -1: auto (compute_padding for 64-byte lines)
};

struct HeteroSettings {
  bool enabled = false;
  int device_workers = 64;
  double device_speed = 0.25;
  double f_device = -1.0;  // -1: auto (calibrated)
  TransferModel transfer;
};

struct RunSettings {
  KernelKind kernel = KernelKind::Deep;
  Variant variant = Variant::Exact;
  int timesteps = 1;
  int repetitions = 5;
  ExecMode mode = ExecMode::Measured;
  double activity_threshold = 0.5;
  double grab_overhead_units = 10.0;  // per dispatch, simulated schedules
  int falseshare_rounds = 64;         // write-loop repetitions per benchmark
};

struct SweepSettings {
  std::vector<int> chunk_sizes = {1, 2, 4, 6, 8, 10, 12, 14, 16, 20};
};

struct ExperimentConfig {
  GridConfig grid;
  ScheduleConfig schedule;
  LayoutConfig layout;
  HeteroSettings hetero;
  RunSettings run;
  SweepSettings sweep;
};

// Parses INI text ([section] / key = value / '#' or ';' comments).
// Throws ConfigError with line number and key on any unknown or bad entry.
ExperimentConfig parse_config(const std::string& text);

// Applies one "section.key" override through the same validation path as
// the parser.
void set_config_value(ExperimentConfig& cfg, const std::string& dotted_key,
                      const std::string& value);

// Canonical text: every section and key in fixed order, normalized values.
// parse(serialize(cfg)) reproduces cfg exactly.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Typed views assembled from the config.
KernelFn config_kernel(const ExperimentConfig& cfg);
KernelOptions config_kernel_options(const ExperimentConfig& cfg);
ScheduleSpec config_schedule(const ExperimentConfig& cfg);
GridSpec config_grid(const ExperimentConfig& cfg);
PoolProfile config_host_pool(const ExperimentConfig& cfg);
PoolProfile config_device_pool(const ExperimentConfig& cfg);

}  // namespace convproxy
