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

#include "core/sched.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core/prng.hpp"
#include "core/validate.hpp"
#include "doctest.h"

using namespace convproxy;

namespace {

ScheduleSpec make_spec(Strategy st, int chunk, int threads) {
  ScheduleSpec s;
  s.strategy = st;
  s.omp_chunk_size = chunk;
  s.n_threads = threads;
  return s;
}

double total(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TEST_CASE("overhead percentage matches the frozen reference pairs") {
  CHECK(std::abs(overhead_pct(16.26, 15.15) - 6.8) < 0.1);
  CHECK(std::abs(overhead_pct(49.16, 36.9) - 25.0) < 0.1);
  CHECK(overhead_pct(0.0, 0.0) == 0.0);
}

TEST_CASE("imbalance ratio is max over mean busy time") {
  RunMetrics m;
  m.busy_s = {1.0, 2.0, 3.0, 4.0};
  CHECK(imbalance_ratio(m) == doctest::Approx(1.6).epsilon(1e-12));

  RunMetrics idle;
  idle.busy_s = {0.0, 0.0};
  CHECK(imbalance_ratio(idle) == 1.0);
  CHECK(imbalance_ratio(RunMetrics{}) == 1.0);
}

TEST_CASE("static block assignment splits contiguously, remainder last") {
  const auto lists = static_assignment(10, 4, 1, Strategy::StaticBlock);
  REQUIRE(lists.size() == 4);
  CHECK(lists[0] == std::vector<long long>{0, 1});
  CHECK(lists[1] == std::vector<long long>{2, 3});
  CHECK(lists[2] == std::vector<long long>{4, 5, 6});
  CHECK(lists[3] == std::vector<long long>{7, 8, 9});

  // Fewer columns than threads: work lands on the trailing threads.
  const auto small = static_assignment(3, 8, 1, Strategy::StaticBlock);
  for (int t = 0; t < 5; ++t) CHECK(small[static_cast<std::size_t>(t)].empty());
  CHECK(small[5] == std::vector<long long>{0});
  CHECK(small[6] == std::vector<long long>{1});
  CHECK(small[7] == std::vector<long long>{2});
}

TEST_CASE("static cyclic assignment deals chunk groups round-robin") {
  const auto lists = static_assignment(10, 3, 2, Strategy::StaticCyclic);
  REQUIRE(lists.size() == 3);
  CHECK(lists[0] == std::vector<long long>{0, 1, 6, 7});
  CHECK(lists[1] == std::vector<long long>{2, 3, 8, 9});
  CHECK(lists[2] == std::vector<long long>{4, 5});
}

TEST_CASE("static assignments partition the index range exactly") {
  for (long long n : {0LL, 1LL, 7LL, 64LL, 129LL}) {
    for (int p : {1, 2, 3, 8}) {
      for (int c : {1, 2, 8}) {
        for (Strategy st : {Strategy::StaticBlock, Strategy::StaticCyclic}) {
          const auto lists = static_assignment(n, p, c, st);
          std::vector<long long> all;
          for (const auto& l : lists) {
            all.insert(all.end(), l.begin(), l.end());
          }
          std::sort(all.begin(), all.end());
          REQUIRE(static_cast<long long>(all.size()) == n);
          for (long long i = 0; i < n; ++i) {
            CHECK(all[static_cast<std::size_t>(i)] == i);
          }
        }
      }
    }
  }
}

TEST_CASE("hand-traced makespans on the five-column work vector") {
  const std::vector<double> w = {3.0, 3.0, 2.0, 2.0, 2.0};

  SUBCASE("static block on two workers balances to six") {
    const SimResult r =
        simulate_makespan(w, make_spec(Strategy::StaticBlock, 1, 2), 0.0);
    CHECK(r.makespan == 6.0);
    CHECK(r.busy == std::vector<double>{6.0, 6.0});
    CHECK(r.dispatched == std::vector<long long>{2, 3});
  }

  SUBCASE("dynamic single-column grabbing serializes the tail to seven") {
    const SimResult r =
        simulate_makespan(w, make_spec(Strategy::Dynamic, 1, 2), 0.0);
    CHECK(r.makespan == 7.0);
  }

  SUBCASE("grab overhead is charged per dispatch event") {
    // dynamic chunk 1: five grabs; worker 0 takes columns 0, 2, 4.
    CHECK(simulate_makespan(w, make_spec(Strategy::Dynamic, 1, 2), 0.5)
              .makespan == 8.5);
    // dynamic chunk 2: three grabs; worker 1 finishes {2,2} then {2}.
    CHECK(simulate_makespan(w, make_spec(Strategy::Dynamic, 2, 2), 0.5)
              .makespan == 7.0);
    // task grabbing is per column regardless of the configured chunk.
    CHECK(simulate_makespan(w, make_spec(Strategy::TaskPerColumn, 8, 2), 0.5)
              .makespan == 8.5);
    // static schedules pay no dispatch overhead at all.
    CHECK(simulate_makespan(w, make_spec(Strategy::StaticBlock, 1, 2), 0.5)
              .makespan == 6.0);
  }
}

TEST_CASE("simulated busy time always sums to the total work") {
  std::vector<double> w;
  for (int i = 0; i < 57; ++i) {
    w.push_back(static_cast<double>(1 + rng_u64(9, 0, static_cast<std::uint64_t>(i)) % 40));
  }
  for (Strategy st : {Strategy::StaticBlock, Strategy::StaticCyclic,
                      Strategy::Dynamic, Strategy::TaskPerColumn}) {
    for (int p : {1, 2, 5}) {
      const SimResult r = simulate_makespan(w, make_spec(st, 3, p), 0.125);
      CHECK(total(r.busy) == total(w));  // integer-valued, exact
      CHECK(std::accumulate(r.dispatched.begin(), r.dispatched.end(), 0LL) ==
            static_cast<long long>(w.size()));
      CHECK(r.makespan >= *std::max_element(w.begin(), w.end()));
    }
  }
}

TEST_CASE("dynamic scheduling respects the greedy list bounds") {
  // Greedy dispatch: max(sum/p, max item) <= makespan <= sum/p + max item.
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint64_t t = static_cast<std::uint64_t>(trial);
    const int n = 1 + static_cast<int>(rng_u64(4, 0, t) % 40);
    const int p = 1 + static_cast<int>(rng_u64(4, 1, t) % 6);
    std::vector<double> w;
    for (int i = 0; i < n; ++i) {
      w.push_back(0.05 + rng_u01(4, 2, t * 64 + static_cast<std::uint64_t>(i)));
    }
    const double sum = total(w);
    const double mx = *std::max_element(w.begin(), w.end());
    const double lower = std::max(sum / p, mx);
    const SimResult r =
        simulate_makespan(w, make_spec(Strategy::Dynamic, 1, p), 0.0);
    CHECK(r.makespan >= lower - 1e-12);
    CHECK(r.makespan <= sum / p + mx + 1e-12);
  }
}

TEST_CASE("banded grid: dynamic scheduling beats static blocks by >= 10%") {
  GridSpec spec;
  spec.n_columns = 64;
  const Chunk grid = make_grid(spec);
  KernelOptions opts;
  const std::vector<double> w = work_vector(grid, deep_column, opts);

  const double stat =
      simulate_makespan(w, make_spec(Strategy::StaticBlock, 1, 4), 0.0).makespan;
  const double dyn =
      simulate_makespan(w, make_spec(Strategy::Dynamic, 1, 4), 0.0).makespan;
  CHECK(dyn <= 0.9 * stat);
}

TEST_CASE("task dispatch grabs per column whatever the configured chunk") {
  GridSpec spec;
  spec.n_columns = 64;
  const Chunk grid = make_grid(spec);
  KernelOptions opts;
  const std::vector<double> w = work_vector(grid, deep_column, opts);
  for (double overhead : {0.0, 0.5, 4.0}) {
    for (int p : {2, 4, 8}) {
      const double task =
          simulate_makespan(w, make_spec(Strategy::TaskPerColumn, 8, p), overhead)
              .makespan;
      const double dyn1 =
          simulate_makespan(w, make_spec(Strategy::Dynamic, 1, p), overhead)
              .makespan;
      CHECK(task == dyn1);  // same grab pattern, chunk setting ignored
    }
  }

  // Uniform work makes the dispatch-cost ordering exact: per-column grabbing
  // pays the overhead n/p times per worker, batching pays it once, static
  // pays nothing.
  const std::vector<double> uniform(16, 1.0);
  const double stat =
      simulate_makespan(uniform, make_spec(Strategy::StaticBlock, 1, 2), 0.5)
          .makespan;
  const double batched =
      simulate_makespan(uniform, make_spec(Strategy::Dynamic, 8, 2), 0.5)
          .makespan;
  const double task =
      simulate_makespan(uniform, make_spec(Strategy::TaskPerColumn, 1, 2), 0.5)
          .makespan;
  CHECK(stat == 8.0);
  CHECK(batched == 8.5);
  CHECK(task == 12.0);
}

TEST_CASE("simulated chunk sweep is reproduced exactly by the simulator") {
  GridSpec spec;
  spec.n_columns = 64;
  const Chunk grid = make_grid(spec);
  KernelOptions opts;
  const std::vector<double> w = work_vector(grid, deep_column, opts);
  const std::vector<int> sizes = {1, 2, 4, 8, 16};

  ScheduleSpec base = make_spec(Strategy::Dynamic, 1, 4);
  const auto points = chunk_size_sweep(grid, deep_column, opts, base, sizes, 1,
                                       ExecMode::Simulated, 0.25);
  REQUIRE(points.size() == sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    CHECK(points[i].chunk_size == sizes[i]);
    const SimResult direct = simulate_makespan(
        w, make_spec(Strategy::Dynamic, sizes[i], 4), 0.25);
    CHECK(points[i].wall_median == direct.makespan);
    CHECK(points[i].wall_mean == direct.makespan);
  }
}

TEST_CASE("all strategies produce bitwise-identical outputs and full coverage") {
  GridSpec spec;
  spec.n_columns = 48;
  spec.seed = 11;
  const Chunk grid = make_grid(spec);
  KernelOptions opts;
  const std::vector<ColumnOutput> reference = deep_convection(grid, opts);

  for (Strategy st : {Strategy::StaticBlock, Strategy::StaticCyclic,
                      Strategy::Dynamic, Strategy::TaskPerColumn}) {
    for (int p : {1, 3, 5}) {
      for (int chunk : {1, 4}) {
        const RunResult r =
            run_parallel(grid, deep_column, opts, make_spec(st, chunk, p));
        CHECK(bitwise_compare(r.outputs, reference).equal);
        CHECK(std::accumulate(r.metrics.dispatched.begin(),
                              r.metrics.dispatched.end(),
                              0LL) == 48);
        CHECK(r.metrics.wall_s > 0.0);
      }
    }
  }
}

TEST_CASE("data environment copies are serialized, timed and priced by mode") {
  GridSpec spec;
  spec.n_columns = 16;
  const Chunk grid = make_grid(spec);
  KernelOptions opts;

  ScheduleSpec shared = make_spec(Strategy::Dynamic, 1, 4);
  shared.data_env.mode = DataEnvMode::SharedArrays;
  CHECK(run_parallel(grid, deep_column, opts, shared).metrics.copy_s == 0.0);

  ScheduleSpec scalars = shared;
  scalars.data_env.mode = DataEnvMode::CopyScalarsOnly;
  const double scalars_cost =
      run_parallel(grid, deep_column, opts, scalars).metrics.copy_s;
  CHECK(scalars_cost >= 0.0);

  ScheduleSpec all2 = shared;
  all2.data_env.mode = DataEnvMode::CopyAll;
  all2.data_env.workspace_bytes = std::size_t{8} << 20;
  all2.n_threads = 2;
  const double cost2 = run_parallel(grid, deep_column, opts, all2).metrics.copy_s;

  ScheduleSpec all8 = all2;
  all8.n_threads = 8;
  const double cost8 = run_parallel(grid, deep_column, opts, all8).metrics.copy_s;

  CHECK(cost2 > scalars_cost);   // an 8 MiB block dwarfs a scalar struct copy
  CHECK(cost8 > 1.5 * cost2);    // four times the copies, serialized
}

TEST_CASE("kernel failure inside a worker aborts and rethrows") {
  GridSpec spec;
  spec.n_columns = 24;
  spec.tropics_band = 1.0;
  Chunk grid = make_grid(spec);
  grid.cols[13].T[0] = std::nan("");
  for (Strategy st : {Strategy::StaticBlock, Strategy::Dynamic,
                      Strategy::TaskPerColumn}) {
    try {
      run_parallel(grid, deep_column, KernelOptions{}, make_spec(st, 2, 3));
      FAIL("expected KernelError");
    } catch (const KernelError& e) {
      CHECK(e.column() == 13);
    }
  }
}
