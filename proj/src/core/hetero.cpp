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

#include "hetero.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include "errors.hpp"

namespace convproxy {

namespace {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::size_t align8(std::size_t x) { return (x + 7u) & ~std::size_t{7}; }

int emulation_repeats(const PoolProfile& pool) {
  if (pool.speed_factor >= 1.0 || pool.speed_factor <= 0.0) return 1;
  return std::max(1, static_cast<int>(std::lround(1.0 / pool.speed_factor)));
}

// Dynamic single-column pool used by measured mode.  Device slowness is
// emulated by repeating the kernel; results come from the last repetition,
// which is bit-identical to the first.
double run_pool_measured(const std::vector<const ColumnState*>& cols,
                         KernelFn kernel, const KernelOptions& opts,
                         int n_workers, int repeats,
                         std::vector<ColumnOutput>& out) {
  const long long n = static_cast<long long>(cols.size());
  out.resize(static_cast<std::size_t>(n));
  if (n == 0) return 0.0;
  std::atomic<long long> cursor{0};
  std::vector<std::exception_ptr> errors(
      static_cast<std::size_t>(std::max(1, n_workers)));
  const auto t0 = Clock::now();
  std::vector<std::thread> threads;
  for (int t = 0; t < std::max(1, n_workers); ++t) {
    threads.emplace_back([&, t] {
      try {
        for (;;) {
          const long long i = cursor.fetch_add(1, std::memory_order_relaxed);
          if (i >= n) break;
          for (int r = 0; r + 1 < repeats; ++r) {
            volatile double sink = kernel(*cols[static_cast<std::size_t>(i)], opts).precip;
            (void)sink;
          }
          out[static_cast<std::size_t>(i)] =
              kernel(*cols[static_cast<std::size_t>(i)], opts);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  const double wall = seconds_since(t0);
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return wall;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

CalibrationResult calibrate_rates(double mean_work_units,
                                  const PoolProfile& host,
                                  const PoolProfile& device) {
  if (!(mean_work_units > 0.0)) {
    throw CalibrationError("calibrate: non-positive mean work");
  }
  CalibrationResult r;
  r.host_rate = host.n_workers * host.speed_factor / mean_work_units;
  r.device_rate = device.n_workers * device.speed_factor / mean_work_units;
  if (!(r.host_rate > 0.0) || !(r.device_rate > 0.0)) {
    throw CalibrationError("calibrate: non-positive pool rate");
  }
  return r;
}

CalibrationResult calibrate(const Chunk& sample, KernelFn kernel,
                            const KernelOptions& opts,
                            const PoolProfile& host, const PoolProfile& device,
                            ExecMode mode, int repetitions) {
  if (sample.cols.empty()) {
    throw CalibrationError("calibrate: empty sample");
  }
  if (mode == ExecMode::Simulated) {
    double total = 0.0;
    for (const ColumnState& c : sample.cols) {
      total += static_cast<double>(kernel(c, opts).work_units);
    }
    const double mean = total / static_cast<double>(sample.cols.size());
    if (!(mean > 0.0)) {
      throw CalibrationError("calibrate: sample has zero mean work");
    }
    return calibrate_rates(mean, host, device);
  }

  std::vector<const ColumnState*> cols;
  cols.reserve(sample.cols.size());
  for (const ColumnState& c : sample.cols) cols.push_back(&c);

  const int reps = std::max(1, repetitions);
  auto time_pool = [&](const PoolProfile& pool) {
    std::vector<double> walls;
    walls.reserve(static_cast<std::size_t>(reps));
    std::vector<ColumnOutput> scratch;
    for (int r = 0; r < reps; ++r) {
      walls.push_back(run_pool_measured(cols, kernel, opts, pool.n_workers,
                                        emulation_repeats(pool), scratch));
    }
    return median_of(walls);
  };

  const double host_wall = time_pool(host);
  const double dev_wall = time_pool(device);
  if (!(host_wall > 0.0) || !(dev_wall > 0.0)) {
    throw CalibrationError("calibrate: unusable pool timing");
  }
  CalibrationResult r;
  r.host_rate = static_cast<double>(cols.size()) / host_wall;
  r.device_rate = static_cast<double>(cols.size()) / dev_wall;
  return r;
}

PartitionPlan plan_partition(double host_rate, double device_rate,
                             long long n_columns) {
  if (!(host_rate >= 0.0) || !(device_rate >= 0.0) ||
      !(host_rate + device_rate > 0.0)) {
    throw CalibrationError("plan_partition: rates must be non-negative with a positive sum");
  }
  return plan_from_fraction(device_rate / (host_rate + device_rate), n_columns);
}

PartitionPlan plan_from_fraction(double f_device, long long n_columns) {
  if (!(f_device >= 0.0) || !(f_device <= 1.0) || n_columns < 0) {
    throw CalibrationError("plan_from_fraction: fraction outside [0, 1]");
  }
  PartitionPlan p;
  p.f_device = f_device;
  p.n_columns = n_columns;
  p.n_device = std::clamp<long long>(
      std::llround(f_device * static_cast<double>(n_columns)), 0, n_columns);
  p.first_device_col = n_columns - p.n_device;
  return p;
}

PackedBuffer pack(const std::vector<NamedArray>& arrays) {
  PackedBuffer buf;
  std::size_t cursor = 0;
  buf.manifest.reserve(arrays.size());
  for (const NamedArray& a : arrays) {
    if (a.data == nullptr && a.length > 0) {
      throw PackError("pack: null array with non-zero length");
    }
    PackEntry e;
    e.name = a.name;
    e.offset = align8(cursor);
    e.length = a.length;
    cursor = e.offset + e.length;
    buf.manifest.push_back(std::move(e));
  }
  buf.payload.resize(cursor);
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    if (arrays[i].length > 0) {
      std::memcpy(buf.payload.data() + buf.manifest[i].offset, arrays[i].data,
                  arrays[i].length);
    }
  }
  return buf;
}

namespace {

std::vector<std::pair<std::string, std::vector<std::byte>>> unpack_view(
    const std::vector<PackEntry>& manifest, const std::byte* payload,
    std::size_t payload_size) {
  std::vector<std::pair<std::string, std::vector<std::byte>>> out;
  out.reserve(manifest.size());
  std::size_t prev_end = 0;
  for (const PackEntry& e : manifest) {
    if (e.offset % 8 != 0) {
      throw PackError("unpack: unaligned offset for '" + e.name + "'");
    }
    if (e.offset < prev_end) {
      throw PackError("unpack: overlapping entry '" + e.name + "'");
    }
    if (e.offset + e.length > payload_size) {
      throw PackError("unpack: entry '" + e.name + "' outside payload");
    }
    prev_end = e.offset + e.length;
    std::vector<std::byte> bytes(e.length);
    if (e.length > 0) {
      std::memcpy(bytes.data(), payload + e.offset, e.length);
    }
    out.emplace_back(e.name, std::move(bytes));
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<std::byte>>> unpack(
    const PackedBuffer& buf) {
  return unpack_view(buf.manifest, buf.payload.data(), buf.payload.size());
}

double modeled_transfer_s(std::size_t bytes, int n_transfers,
                          const TransferModel& model) {
  if (!(model.bandwidth_Bps > 0.0)) {
    throw CalibrationError("transfer model: bandwidth must be positive");
  }
  return n_transfers * model.setup_s +
         static_cast<double>(bytes) / model.bandwidth_Bps;
}

HeteroEngine::HeteroEngine(PoolProfile host, PoolProfile device,
                           TransferModel model, ExecMode mode)
    : host_(std::move(host)), device_(std::move(device)), model_(model),
      mode_(mode) {}

HeteroEngine::StepResult HeteroEngine::step(const Chunk& chunk, KernelFn kernel,
                                            const KernelOptions& opts,
                                            const PartitionPlan& plan,
                                            int timestep) {
  const long long n = static_cast<long long>(chunk.cols.size());
  if (plan.n_columns != n) {
    throw CalibrationError("offload: plan does not match chunk size");
  }
  const long long nd = plan.n_device;
  const long long first_dev = plan.first_device_col;
  const int nl = chunk.n_levels;

  StepResult res;
  res.outputs.resize(static_cast<std::size_t>(n));
  HeteroMetrics& m = res.metrics;

  const bool send_scalars = !model_.resident_scalars || timestep == 0;
  const double setup =
      model_.persistent_buffers && timestep > 0 ? 0.1 * model_.setup_s
                                                : model_.setup_s;

  // --- Device input staging (real pack in both modes). ---------------------
  std::vector<ColumnState> dev_cols;
  double pack_unpack_in_s = 0.0;
  if (nd > 0) {
    const auto t0 = Clock::now();
    std::vector<double> t_concat, q_concat, s_concat;
    t_concat.reserve(static_cast<std::size_t>(nd * nl));
    q_concat.reserve(static_cast<std::size_t>(nd * nl));
    s_concat.reserve(static_cast<std::size_t>(nd));
    for (long long c = first_dev; c < n; ++c) {
      const ColumnState& col = chunk.cols[static_cast<std::size_t>(c)];
      t_concat.insert(t_concat.end(), col.T.begin(), col.T.end());
      q_concat.insert(q_concat.end(), col.q.begin(), col.q.end());
      s_concat.push_back(col.s);
    }
    std::vector<NamedArray> arrays = {
        {"T", t_concat.data(), t_concat.size() * sizeof(double)},
        {"q", q_concat.data(), q_concat.size() * sizeof(double)},
        {"s", s_concat.data(), s_concat.size() * sizeof(double)},
    };
    double env[4] = {opts.activity_threshold, opts.newton_tol,
                     static_cast<double>(opts.newton_max_iter),
                     static_cast<double>(opts.variant)};
    if (send_scalars) {
      arrays.push_back({"env", env, sizeof(env)});
    }
    PackedBuffer in_buf = pack(arrays);
    m.bytes_in = static_cast<long long>(in_buf.payload.size());

    // Transfer emulation: the payload really lands in the engine's device
    // buffer.  Non-persistent buffers release and reacquire their storage
    // every step.
    if (!model_.persistent_buffers) {
      device_buffer_ = std::vector<std::byte>();
    }
    device_buffer_.resize(in_buf.payload.size());
    if (!in_buf.payload.empty()) {
      std::memcpy(device_buffer_.data(), in_buf.payload.data(),
                  in_buf.payload.size());
    }

    // Device-side unpack: rebuild column states from the transferred bytes.
    auto parts =
        unpack_view(in_buf.manifest, device_buffer_.data(), device_buffer_.size());
    const double* tp = reinterpret_cast<const double*>(parts[0].second.data());
    const double* qp = reinterpret_cast<const double*>(parts[1].second.data());
    const double* sp = reinterpret_cast<const double*>(parts[2].second.data());
    dev_cols.resize(static_cast<std::size_t>(nd));
    for (long long i = 0; i < nd; ++i) {
      ColumnState& col = dev_cols[static_cast<std::size_t>(i)];
      col.col_id = chunk.cols[static_cast<std::size_t>(first_dev + i)].col_id;
      col.s = sp[i];
      col.T.assign(tp + i * nl, tp + (i + 1) * nl);
      col.q.assign(qp + i * nl, qp + (i + 1) * nl);
    }
    pack_unpack_in_s = seconds_since(t0);
  }

  // --- Compute + collect. --------------------------------------------------
  std::vector<ColumnOutput> host_out, dev_out;
  double host_wall = 0.0, dev_wall = 0.0, collect_s = 0.0;
  long long bytes_out = 0;

  auto collect_device = [&]() {
    // Pack outputs on the device side, stage them back, unpack on the host.
    const auto t0 = Clock::now();
    std::vector<double> tt, tq, pr;
    std::vector<long long> wu;
    std::vector<std::uint8_t> ex;
    for (const ColumnOutput& o : dev_out) {
      tt.insert(tt.end(), o.tend_T.begin(), o.tend_T.end());
      tq.insert(tq.end(), o.tend_q.begin(), o.tend_q.end());
      pr.push_back(o.precip);
      wu.push_back(o.work_units);
      ex.push_back(o.exited_early ? 1 : 0);
    }
    PackedBuffer out_buf = pack({
        {"tend_T", tt.data(), tt.size() * sizeof(double)},
        {"tend_q", tq.data(), tq.size() * sizeof(double)},
        {"precip", pr.data(), pr.size() * sizeof(double)},
        {"work_units", wu.data(), wu.size() * sizeof(long long)},
        {"exited", ex.data(), ex.size()},
    });
    bytes_out = static_cast<long long>(out_buf.payload.size());
    auto parts = unpack(out_buf);
    const double* ttp = reinterpret_cast<const double*>(parts[0].second.data());
    const double* tqp = reinterpret_cast<const double*>(parts[1].second.data());
    const double* prp = reinterpret_cast<const double*>(parts[2].second.data());
    const long long* wup =
        reinterpret_cast<const long long*>(parts[3].second.data());
    const std::uint8_t* exp_ =
        reinterpret_cast<const std::uint8_t*>(parts[4].second.data());
    for (long long i = 0; i < nd; ++i) {
      ColumnOutput& o = res.outputs[static_cast<std::size_t>(first_dev + i)];
      o.tend_T.assign(ttp + i * nl, ttp + (i + 1) * nl);
      o.tend_q.assign(tqp + i * nl, tqp + (i + 1) * nl);
      o.precip = prp[i];
      o.work_units = wup[i];
      o.exited_early = exp_[i] != 0;
    }
    collect_s = seconds_since(t0);
  };

  if (mode_ == ExecMode::Simulated) {
    // Outputs computed serially; time priced by the discrete-event model.
    host_out.reserve(static_cast<std::size_t>(first_dev));
    for (long long c = 0; c < first_dev; ++c) {
      host_out.push_back(kernel(chunk.cols[static_cast<std::size_t>(c)], opts));
    }
    dev_out.reserve(static_cast<std::size_t>(nd));
    for (const ColumnState& c : dev_cols) dev_out.push_back(kernel(c, opts));

    ScheduleSpec pool_spec;
    pool_spec.strategy = Strategy::Dynamic;
    pool_spec.omp_chunk_size = 1;

    std::vector<double> w;
    w.reserve(host_out.size());
    for (const ColumnOutput& o : host_out) {
      w.push_back(static_cast<double>(o.work_units) /
                  std::max(1e-300, host_.speed_factor));
    }
    pool_spec.n_threads = std::max(1, host_.n_workers);
    host_wall = simulate_makespan(w, pool_spec, 0.0).makespan;

    w.clear();
    for (const ColumnOutput& o : dev_out) {
      w.push_back(static_cast<double>(o.work_units) /
                  std::max(1e-300, device_.speed_factor));
    }
    pool_spec.n_threads = std::max(1, device_.n_workers);
    dev_wall = simulate_makespan(w, pool_spec, 0.0).makespan;
  } else {
    // Measured: device pipeline overlaps the host pool.
    std::exception_ptr dev_err;
    std::thread dev_thread([&] {
      try {
        if (nd > 0) {
          std::vector<const ColumnState*> ptrs;
          ptrs.reserve(dev_cols.size());
          for (const ColumnState& c : dev_cols) ptrs.push_back(&c);
          dev_wall = run_pool_measured(ptrs, kernel, opts, device_.n_workers,
                                       emulation_repeats(device_), dev_out);
        }
      } catch (...) {
        dev_err = std::current_exception();
      }
    });
    try {
      if (first_dev > 0) {
        std::vector<const ColumnState*> ptrs;
        ptrs.reserve(static_cast<std::size_t>(first_dev));
        for (long long c = 0; c < first_dev; ++c) {
          ptrs.push_back(&chunk.cols[static_cast<std::size_t>(c)]);
        }
        host_wall = run_pool_measured(ptrs, kernel, opts, host_.n_workers,
                                      emulation_repeats(host_), host_out);
      }
    } catch (...) {
      dev_thread.join();
      throw;
    }
    dev_thread.join();
    if (dev_err) std::rethrow_exception(dev_err);
  }

  for (long long c = 0; c < first_dev; ++c) {
    res.outputs[static_cast<std::size_t>(c)] =
        std::move(host_out[static_cast<std::size_t>(c)]);
  }
  if (nd > 0) collect_device();

  // --- Timing summary. -----------------------------------------------------
  m.host_busy_s = host_wall;
  m.device_busy_s = dev_wall;
  m.bytes_out = bytes_out;
  m.transfers = nd > 0 ? 2 : 0;
  if (mode_ == ExecMode::Simulated) {
    m.transfer_in_s =
        nd > 0 ? setup + static_cast<double>(m.bytes_in) / model_.bandwidth_Bps
               : 0.0;
    m.transfer_out_s =
        nd > 0 ? setup + static_cast<double>(m.bytes_out) / model_.bandwidth_Bps
               : 0.0;
    m.wall_s = std::max(m.host_busy_s,
                        m.transfer_in_s + m.device_busy_s + m.transfer_out_s);
  } else {
    m.transfer_in_s = pack_unpack_in_s;
    m.transfer_out_s = collect_s;
    m.wall_s = m.transfer_in_s + std::max(m.host_busy_s, m.device_busy_s) +
               m.transfer_out_s;
  }
  return res;
}

}  // namespace convproxy
