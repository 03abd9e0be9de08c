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

#include <cstddef>
#include <string>
#include <vector>

#include "sched.hpp"

namespace convproxy {

// Proportional host/device partitioning of a chunk, with packed transfers.
// The "device" is an emulated second pool: many slow workers.  Simulated
// mode prices time with a cost model; measured mode actually runs both
// pools and really copies the packed bytes.  Either way the device share
// computes from the unpacked buffers, so partitioned outputs stay bitwise
// identical to a single-pool run.

struct PoolProfile {
  std::string name = "host";
  int n_workers = 1;
  double speed_factor = 1.0;  // per-worker throughput relative to a host worker
};

struct TransferModel {
  double setup_s = 1e-3;          // fixed cost per transfer
  double bandwidth_Bps = 516e6;   // effective payload bandwidth
  bool resident_scalars = true;   // scalars cross only on the first timestep
  bool persistent_buffers = true; // reused buffers cut setup 10x after step 0
};

// Aggregate throughput of each pool, in columns per unit time.
struct CalibrationResult {
  double host_rate = 0.0;
  double device_rate = 0.0;
};

// Closed-form rates from a known mean per-column cost:
//   rate = n_workers * speed_factor / mean_work.
CalibrationResult calibrate_rates(double mean_work_units,
                                  const PoolProfile& host,
                                  const PoolProfile& device);

// Rates from a sample chunk.  Simulated mode uses the closed form on the
// sample's mean work_units; measured mode times each pool over the sample
// (repetitions runs, median) with device slowness emulated by repeating the
// kernel round(1/speed_factor) times per column.  Throws CalibrationError
// when a rate comes out non-positive.
CalibrationResult calibrate(const Chunk& sample, KernelFn kernel,
                            const KernelOptions& opts,
                            const PoolProfile& host, const PoolProfile& device,
                            ExecMode mode, int repetitions = 3);

struct PartitionPlan {
  double f_device = 0.0;
  long long n_columns = 0;
  long long n_device = 0;
  long long first_device_col = 0;  // device owns [first_device_col, n_columns)
};

// Device fraction r_device / (r_host + r_device), device share rounded to
// whole columns taken from the tail of the chunk.
PartitionPlan plan_partition(double host_rate, double device_rate,
                             long long n_columns);
PartitionPlan plan_from_fraction(double f_device, long long n_columns);

// ---------------------------------------------------------------------------
// Packed transfer buffers.

struct PackEntry {
  std::string name;
  std::size_t offset = 0;  // into payload, 8-byte aligned
  std::size_t length = 0;  // bytes; zero-length entries are preserved
};

struct NamedArray {
  std::string name;
  const void* data = nullptr;
  std::size_t length = 0;
};

struct PackedBuffer {
  std::vector<PackEntry> manifest;
  std::vector<std::byte> payload;
};

// Concatenates the arrays into one payload with 8-byte aligned entries.
PackedBuffer pack(const std::vector<NamedArray>& arrays);

// Splits a packed buffer back into (name, bytes) pairs.  Throws PackError
// when the manifest does not describe the payload (unsorted or unaligned
// offsets, ranges outside the payload).
std::vector<std::pair<std::string, std::vector<std::byte>>> unpack(
    const PackedBuffer& buf);

// Cost-model transfer time: n_transfers * setup + bytes / bandwidth.
double modeled_transfer_s(std::size_t bytes, int n_transfers,
                          const TransferModel& model);

// ---------------------------------------------------------------------------
// Offload engine.  One step() in flight at a time per engine instance; the
// engine owns the emulated device buffer so persistent_buffers can reuse its
// capacity across timesteps.

struct HeteroMetrics {
  double wall_s = 0.0;
  double host_busy_s = 0.0;     // host-pool makespan
  double device_busy_s = 0.0;   // device-pool makespan
  double transfer_in_s = 0.0;
  double transfer_out_s = 0.0;
  long long bytes_in = 0;
  long long bytes_out = 0;
  int transfers = 0;
};

class HeteroEngine {
 public:
  HeteroEngine(PoolProfile host, PoolProfile device, TransferModel model,
               ExecMode mode);

  struct StepResult {
    std::vector<ColumnOutput> outputs;  // full chunk, global column order
    HeteroMetrics metrics;
  };

  // Executes one timestep of the chunk under the partition plan.  The host
  // share runs on the host pool; the device share is packed, transferred
  // (modeled or really copied), computed from the unpacked buffers on the
  // device pool, and its outputs are packed back and merged.  In simulated
  // mode pool times come from the discrete-event scheduler over per-column
  // work_units scaled by worker speed, and wall time assumes the transfer
  // and device compute overlap the host compute.
  StepResult step(const Chunk& chunk, KernelFn kernel,
                  const KernelOptions& opts, const PartitionPlan& plan,
                  int timestep);

  const PoolProfile& host() const { return host_; }
  const PoolProfile& device() const { return device_; }
  const TransferModel& model() const { return model_; }

 private:
  PoolProfile host_;
  PoolProfile device_;
  TransferModel model_;
  ExecMode mode_;
  std::vector<std::byte> device_buffer_;  // persists across steps
};

// Scalar environment that rides along with the first (or every) transfer:
// activity threshold, Newton tolerance, iteration cap, variant selector.
inline constexpr std::size_t kScalarEnvBytes = 4 * sizeof(double);

}  // namespace convproxy
