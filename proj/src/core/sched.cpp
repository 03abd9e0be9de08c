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

#include "sched.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstring>
#include <mutex>
#include <numeric>
#include <queue>
#include <thread>
#include <utility>

namespace convproxy {

namespace {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::vector<std::vector<long long>> static_assignment(long long n_columns,
                                                      int n_threads,
                                                      int chunk_size,
                                                      Strategy strategy) {
  const int p = std::max(1, n_threads);
  std::vector<std::vector<long long>> lists(static_cast<std::size_t>(p));
  if (n_columns <= 0) return lists;

  if (strategy == Strategy::StaticCyclic) {
    const long long c = std::max(1, chunk_size);
    for (long long i = 0; i < n_columns; ++i) {
      const long long group = i / c;
      lists[static_cast<std::size_t>(group % p)].push_back(i);
    }
    return lists;
  }

  // StaticBlock: floor(n/p) each, remainder on the last threads so the tail
  // of the grid absorbs the extra columns.
  const long long q = n_columns / p;
  const long long r = n_columns % p;
  long long next = 0;
  for (int t = 0; t < p; ++t) {
    const long long len = q + (t >= p - static_cast<int>(r) ? 1 : 0);
    for (long long i = 0; i < len; ++i) lists[static_cast<std::size_t>(t)].push_back(next++);
  }
  return lists;
}

RunResult run_parallel(const Chunk& chunk, KernelFn kernel,
                       const KernelOptions& opts, const ScheduleSpec& spec) {
  const long long n = static_cast<long long>(chunk.cols.size());
  const int p = std::max(1, spec.n_threads);
  const long long grab = std::max(1, spec.omp_chunk_size);

  RunResult res;
  res.outputs.resize(static_cast<std::size_t>(n));
  res.metrics.busy_s.assign(static_cast<std::size_t>(p), 0.0);
  res.metrics.dispatched.assign(static_cast<std::size_t>(p), 0);

  // Master data environment.  Copies are serialized under copy_mu and timed
  // inside the lock: each worker sees exclusive bandwidth, so the summed
  // copy cost grows linearly with the number of copying workers.
  std::vector<unsigned char> workspace;
  if (spec.data_env.mode == DataEnvMode::CopyAll) {
    workspace.assign(spec.data_env.workspace_bytes, 0xa5);
  }
  std::mutex copy_mu;
  double copy_total = 0.0;

  std::vector<std::vector<long long>> static_lists;
  if (spec.strategy == Strategy::StaticBlock ||
      spec.strategy == Strategy::StaticCyclic) {
    static_lists = static_assignment(n, p, spec.omp_chunk_size, spec.strategy);
  }

  std::atomic<long long> cursor{0};
  std::mutex task_mu;
  long long task_next = 0;

  std::atomic<bool> abort{false};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));

  auto worker = [&](int tid) {
    try {
      KernelOptions local_opts = opts;
      const KernelOptions* use_opts = &opts;
      if (spec.data_env.mode == DataEnvMode::CopyAll ||
          spec.data_env.mode == DataEnvMode::CopyScalarsOnly) {
        std::vector<unsigned char> priv;
        if (spec.data_env.mode == DataEnvMode::CopyAll) {
          priv.resize(workspace.size());
        }
        {
          std::lock_guard<std::mutex> lk(copy_mu);
          const auto t0 = Clock::now();
          local_opts = opts;  // scalar part of the environment
          if (!priv.empty()) {
            std::memcpy(priv.data(), workspace.data(), priv.size());
          }
          copy_total += seconds_since(t0);
        }
        if (!priv.empty()) {
          // Keep the private block observable so the copy cannot be elided.
          volatile unsigned char sink = priv.front() ^ priv.back();
          (void)sink;
        }
        use_opts = &local_opts;
      }

      double busy = 0.0;
      long long done = 0;

      auto compute_range = [&](long long lo, long long hi) {
        const auto t0 = Clock::now();
        for (long long i = lo; i < hi; ++i) {
          res.outputs[static_cast<std::size_t>(i)] =
              kernel(chunk.cols[static_cast<std::size_t>(i)], *use_opts);
        }
        busy += seconds_since(t0);
        done += hi - lo;
      };

      switch (spec.strategy) {
        case Strategy::StaticBlock:
        case Strategy::StaticCyclic: {
          const auto& mine = static_lists[static_cast<std::size_t>(tid)];
          const auto t0 = Clock::now();
          for (long long i : mine) {
            if (abort.load(std::memory_order_relaxed)) break;
            res.outputs[static_cast<std::size_t>(i)] =
                kernel(chunk.cols[static_cast<std::size_t>(i)], *use_opts);
            ++done;
          }
          busy += seconds_since(t0);
          break;
        }
        case Strategy::Dynamic: {
          while (!abort.load(std::memory_order_relaxed)) {
            const long long lo = cursor.fetch_add(grab, std::memory_order_relaxed);
            if (lo >= n) break;
            compute_range(lo, std::min(n, lo + grab));
          }
          break;
        }
        case Strategy::TaskPerColumn: {
          while (!abort.load(std::memory_order_relaxed)) {
            long long i;
            {
              std::lock_guard<std::mutex> lk(task_mu);
              if (task_next >= n) break;
              i = task_next++;
            }
            compute_range(i, i + 1);
          }
          break;
        }
      }

      res.metrics.busy_s[static_cast<std::size_t>(tid)] = busy;
      res.metrics.dispatched[static_cast<std::size_t>(tid)] = done;
    } catch (...) {
      errors[static_cast<std::size_t>(tid)] = std::current_exception();
      abort.store(true, std::memory_order_relaxed);
    }
  };

  const auto t_start = Clock::now();
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(p));
  for (int t = 0; t < p; ++t) threads.emplace_back(worker, t);
  for (auto& th : threads) th.join();
  res.metrics.wall_s = seconds_since(t_start);
  res.metrics.copy_s = copy_total;

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return res;
}

double overhead_pct(double wall_s, double mean_busy_s) {
  if (wall_s <= 0.0) return 0.0;
  return 100.0 * (wall_s - mean_busy_s) / wall_s;
}

double overhead_pct(const RunMetrics& m) {
  if (m.busy_s.empty()) return 0.0;
  const double mean =
      std::accumulate(m.busy_s.begin(), m.busy_s.end(), 0.0) /
      static_cast<double>(m.busy_s.size());
  return overhead_pct(m.wall_s, mean);
}

double imbalance_ratio(const RunMetrics& m) {
  if (m.busy_s.empty()) return 1.0;
  const double mx = *std::max_element(m.busy_s.begin(), m.busy_s.end());
  const double mean =
      std::accumulate(m.busy_s.begin(), m.busy_s.end(), 0.0) /
      static_cast<double>(m.busy_s.size());
  if (mean <= 0.0) return 1.0;
  return mx / mean;
}

SimResult simulate_makespan(std::span<const double> work,
                            const ScheduleSpec& spec, double grab_overhead) {
  const long long n = static_cast<long long>(work.size());
  const int p = std::max(1, spec.n_threads);

  SimResult sim;
  sim.busy.assign(static_cast<std::size_t>(p), 0.0);
  sim.dispatched.assign(static_cast<std::size_t>(p), 0);
  if (n == 0) return sim;

  std::vector<double> finish(static_cast<std::size_t>(p), 0.0);

  if (spec.strategy == Strategy::StaticBlock ||
      spec.strategy == Strategy::StaticCyclic) {
    const auto lists = static_assignment(n, p, spec.omp_chunk_size, spec.strategy);
    for (int t = 0; t < p; ++t) {
      double acc = 0.0;
      for (long long i : lists[static_cast<std::size_t>(t)]) {
        acc += work[static_cast<std::size_t>(i)];
      }
      sim.busy[static_cast<std::size_t>(t)] = acc;
      sim.dispatched[static_cast<std::size_t>(t)] =
          static_cast<long long>(lists[static_cast<std::size_t>(t)].size());
      finish[static_cast<std::size_t>(t)] = acc;
    }
  } else {
    const long long grab = spec.strategy == Strategy::TaskPerColumn
                               ? 1
                               : std::max(1, spec.omp_chunk_size);
    // Earliest-free-worker queue; ties resolved toward the lowest id.
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
    for (int t = 0; t < p; ++t) pq.emplace(0.0, t);
    long long next = 0;
    while (next < n) {
      auto [when, tid] = pq.top();
      pq.pop();
      const long long lo = next;
      const long long hi = std::min(n, lo + grab);
      next = hi;
      double batch = 0.0;
      for (long long i = lo; i < hi; ++i) batch += work[static_cast<std::size_t>(i)];
      sim.busy[static_cast<std::size_t>(tid)] += batch;
      sim.dispatched[static_cast<std::size_t>(tid)] += hi - lo;
      const double done = when + grab_overhead + batch;
      finish[static_cast<std::size_t>(tid)] = done;
      pq.emplace(done, tid);
    }
  }

  sim.makespan = *std::max_element(finish.begin(), finish.end());
  return sim;
}

std::vector<double> work_vector(const Chunk& chunk, KernelFn kernel,
                                const KernelOptions& opts) {
  std::vector<double> w;
  w.reserve(chunk.cols.size());
  for (const ColumnState& c : chunk.cols) {
    w.push_back(static_cast<double>(kernel(c, opts).work_units));
  }
  return w;
}

std::vector<SweepPoint> chunk_size_sweep(const Chunk& chunk, KernelFn kernel,
                                         const KernelOptions& opts,
                                         ScheduleSpec base,
                                         std::span<const int> sizes,
                                         int repetitions, ExecMode mode,
                                         double sim_grab_overhead) {
  base.strategy = Strategy::Dynamic;
  const int reps = std::max(1, repetitions);

  std::vector<double> work;
  if (mode == ExecMode::Simulated) {
    work = work_vector(chunk, kernel, opts);
  }

  std::vector<SweepPoint> points;
  points.reserve(sizes.size());
  for (int size : sizes) {
    ScheduleSpec spec = base;
    spec.omp_chunk_size = size;
    SweepPoint pt;
    pt.chunk_size = size;
    if (mode == ExecMode::Simulated) {
      const SimResult sim = simulate_makespan(work, spec, sim_grab_overhead);
      pt.wall_median = sim.makespan;
      pt.wall_mean = sim.makespan;
    } else {
      std::vector<double> walls;
      walls.reserve(static_cast<std::size_t>(reps));
      for (int r = 0; r < reps; ++r) {
        walls.push_back(run_parallel(chunk, kernel, opts, spec).metrics.wall_s);
      }
      pt.wall_median = median_of(walls);
      pt.wall_mean = std::accumulate(walls.begin(), walls.end(), 0.0) /
                     static_cast<double>(walls.size());
    }
    points.push_back(pt);
  }
  return points;
}

}  // namespace convproxy
