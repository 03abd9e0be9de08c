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

#include <span>
#include <vector>

#include "physics.hpp"

namespace convproxy {

// Column-to-worker scheduling over one chunk.  Columns are independent, so
// every strategy produces bitwise-identical outputs; what changes is wall
// time, per-thread balance and dispatch overhead.

enum class Strategy {
  StaticBlock,    // contiguous blocks, remainder columns on the last threads
  StaticCyclic,   // chunk groups dealt round-robin
  Dynamic,        // shared cursor, workers grab omp_chunk_size columns
  TaskPerColumn,  // one mutex-guarded grab per column; deliberately heavier
};

enum class DataEnvMode {
  CopyAll,          // per-worker private copy of the full workspace block
  CopyScalarsOnly,  // per-worker copy of the scalar options alone
  SharedArrays,     // workers reference shared state, nothing copied
};

struct DataEnvPolicy {
  DataEnvMode mode = DataEnvMode::SharedArrays;
  // Byte size of the copied workspace under CopyAll; mirrors the footprint
  // of a kernel's private arrays.
  std::size_t workspace_bytes = std::size_t{16} << 20;
};

struct ScheduleSpec {
  Strategy strategy = Strategy::Dynamic;
  int omp_chunk_size = 1;
  int n_threads = 1;
  DataEnvPolicy data_env;
};

struct RunMetrics {
  double wall_s = 0.0;
  std::vector<double> busy_s;          // kernel compute time per thread
  std::vector<long long> dispatched;   // columns computed per thread
  double copy_s = 0.0;                 // summed data-environment copy time
};

struct RunResult {
  std::vector<ColumnOutput> outputs;
  RunMetrics metrics;
};

// Executes the kernel over every column of the chunk on n_threads workers.
// Data-environment copies are serialized so their summed cost scales with
// the number of copies rather than with memory-bus luck.  A KernelError
// thrown by any column aborts the run and is rethrown to the caller.
RunResult run_parallel(const Chunk& chunk, KernelFn kernel,
                       const KernelOptions& opts, const ScheduleSpec& spec);

// Scheduling overhead as a percentage of wall time:
//   100 * (wall - mean(busy)) / wall.
double overhead_pct(double wall_s, double mean_busy_s);
double overhead_pct(const RunMetrics& m);

// max(busy) / mean(busy); 1.0 for an idle run.
double imbalance_ratio(const RunMetrics& m);

// Column index lists per thread for the static strategies.  StaticBlock
// splits [0, n) into contiguous blocks of floor(n/P), giving the remainder
// columns to the last threads; StaticCyclic deals groups of chunk_size
// columns round-robin.  Shared by run_parallel and simulate_makespan so the
// measured and simulated paths schedule identically.
std::vector<std::vector<long long>> static_assignment(long long n_columns,
                                                      int n_threads,
                                                      int chunk_size,
                                                      Strategy strategy);

struct SimResult {
  double makespan = 0.0;
  std::vector<double> busy;            // pure compute per worker
  std::vector<long long> dispatched;
};

// Discrete-event execution of a work vector under the given schedule.
// Dynamic and TaskPerColumn charge grab_overhead per dispatch event (task
// always grabs single columns); static strategies have no dispatch events.
// Ties pick the lowest worker id, so the simulation is fully deterministic.
SimResult simulate_makespan(std::span<const double> work,
                            const ScheduleSpec& spec, double grab_overhead);

enum class ExecMode { Measured, Simulated };

struct SweepPoint {
  int chunk_size = 0;
  double wall_median = 0.0;
  double wall_mean = 0.0;
};

// Dynamic-schedule chunk-size sweep.  Measured mode reports seconds over
// `repetitions` runs; simulated mode reports abstract work units (column
// cost = its work_units) and is exactly reproducible by simulate_makespan
// on the kernel's work vector.
std::vector<SweepPoint> chunk_size_sweep(const Chunk& chunk, KernelFn kernel,
                                         const KernelOptions& opts,
                                         ScheduleSpec base,
                                         std::span<const int> sizes,
                                         int repetitions, ExecMode mode,
                                         double sim_grab_overhead);

// Per-column work_units from one serial kernel pass.
std::vector<double> work_vector(const Chunk& chunk, KernelFn kernel,
                                const KernelOptions& opts);

}  // namespace convproxy
