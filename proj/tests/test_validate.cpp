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

#include "core/validate.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "core/prng.hpp"
#include "doctest.h"

using namespace convproxy;

namespace {

SimPath nominal_path() {
  SimPath p;
  p.sched.strategy = Strategy::StaticBlock;
  p.sched.n_threads = 1;
  return p;
}

ColumnOutput doubling_kernel(const ColumnState& c, const KernelOptions&) {
  // Tendency equal to the state: T doubles every step, so seeding any level
  // with a huge value overflows on the second advance.
  ColumnOutput o;
  o.tend_T = c.T;
  o.tend_q.assign(c.q.size(), 0.0);
  return o;
}

}  // namespace

TEST_CASE("lsb perturbation flips exactly the last significand bit") {
  CHECK(perturb_lsb(1.0) == std::nextafter(1.0, 2.0));
  CHECK(perturb_lsb(0.0) == std::numeric_limits<double>::denorm_min());

  const double x = 287.4375;
  const double p = perturb_lsb(x);
  CHECK(p != x);
  CHECK(std::abs(p - x) <= std::abs(x) * 0x1.0p-51);
  CHECK(std::abs(p - x) > 0.0);

  SUBCASE("applying it twice restores the original bits") {
    for (std::uint64_t i = 0; i < 100; ++i) {
      const double v = (rng_u01(1, 0, i) - 0.5) * 600.0;
      CHECK(perturb_lsb(perturb_lsb(v)) == v);
    }
    CHECK(perturb_lsb(perturb_lsb(-2.0)) == -2.0);
    CHECK(perturb_lsb(perturb_lsb(0.0)) == 0.0);
  }

  SUBCASE("non-finite values are rejected") {
    CHECK_THROWS_AS(perturb_lsb(std::numeric_limits<double>::infinity()),
                    ValidationError);
    CHECK_THROWS_AS(perturb_lsb(std::nan("")), ValidationError);
  }

  SUBCASE("field perturbation is elementwise") {
    std::vector<double> xs = {250.0, 251.5, 0.0, -3.25};
    const std::vector<double> orig = xs;
    perturb_lsb_field(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(xs[i] == perturb_lsb(orig[i]));
    }
  }
}

TEST_CASE("rms difference matches the hand-computed value") {
  const std::vector<double> a = {0.0, 0.0};
  const std::vector<double> b = {3.0, 4.0};
  CHECK(rms_diff(a, b) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(rms_diff(b, b) == 0.0);
  CHECK(rms_diff(std::span<const double>{}, std::span<const double>{}) == 0.0);

  const std::vector<double> c = {1.0};
  CHECK_THROWS_AS(rms_diff(a, c), ValidationError);
}

TEST_CASE("bitwise comparison reports the first difference precisely") {
  GridSpec spec;
  spec.n_columns = 4;
  const Chunk grid = make_grid(spec);
  KernelOptions opts;
  const std::vector<ColumnOutput> a = shallow_convection(grid, opts);

  SUBCASE("equal sets compare equal") {
    const BitwiseReport r = bitwise_compare(a, a);
    CHECK(r.equal);
    CHECK(r.col == -1);
  }

  SUBCASE("a tendency flip is located by column, level and field") {
    std::vector<ColumnOutput> b = a;
    b[2].tend_q[5] = perturb_lsb(b[2].tend_q[5]);
    const BitwiseReport r = bitwise_compare(a, b);
    CHECK_FALSE(r.equal);
    CHECK(r.col == 2);
    CHECK(r.level == 5);
    CHECK(std::string(r.field) == "tend_q");
  }

  SUBCASE("scalar fields report level -1") {
    std::vector<ColumnOutput> b = a;
    b[1].precip += 1.0;
    const BitwiseReport r = bitwise_compare(a, b);
    CHECK_FALSE(r.equal);
    CHECK(r.col == 1);
    CHECK(r.level == -1);
    CHECK(std::string(r.field) == "precip");

    std::vector<ColumnOutput> c = a;
    c[3].work_units += 1;
    CHECK(std::string(bitwise_compare(a, c).field) == "work_units");

    std::vector<ColumnOutput> d = a;
    d[0].exited_early = !d[0].exited_early;
    CHECK(std::string(bitwise_compare(a, d).field) == "exited_early");
  }

  SUBCASE("shape problems are reported as such") {
    std::vector<ColumnOutput> b = a;
    b.pop_back();
    CHECK(std::string(bitwise_compare(a, b).field) == "count");

    std::vector<ColumnOutput> c = a;
    c[1].tend_T.push_back(0.0);
    const BitwiseReport r = bitwise_compare(a, c);
    CHECK(std::string(r.field) == "shape");
    CHECK(r.col == 1);
  }
}

TEST_CASE("identical paths yield an exactly zero modification signal") {
  GridSpec spec;
  spec.n_columns = 32;
  const Chunk grid = make_grid(spec);

  const SimPath base = nominal_path();
  const ErrorGrowthSeries s = error_growth(grid, deep_column, base, base, 6);
  REQUIRE(s.rms_mod.size() == 6);
  for (double v : s.rms_mod) CHECK(v == 0.0);
  for (double v : s.rms_pert) CHECK(v > 0.0);
  CHECK(s.envelope_ok);
  CHECK(s.worst_ratio == 0.0);
  CHECK(s.rms_pert.back() > s.rms_pert.front());  // chaotic amplification
}

TEST_CASE("rescheduled and offloaded legs stay exactly on the baseline") {
  GridSpec spec;
  spec.n_columns = 32;
  const Chunk grid = make_grid(spec);
  const SimPath base = nominal_path();

  SimPath resched = base;
  resched.sched.strategy = Strategy::Dynamic;
  resched.sched.n_threads = 4;
  resched.sched.omp_chunk_size = 2;
  const ErrorGrowthSeries s1 = error_growth(grid, deep_column, base, resched, 5);
  for (double v : s1.rms_mod) CHECK(v == 0.0);
  CHECK(s1.worst_ratio == 0.0);

  SimPath offload = base;
  offload.use_hetero = true;
  offload.f_device = 0.5;
  offload.host = PoolProfile{"host", 2, 1.0};
  offload.device = PoolProfile{"device", 8, 0.25};
  const ErrorGrowthSeries s2 = error_growth(grid, deep_column, base, offload, 5);
  for (double v : s2.rms_mod) CHECK(v == 0.0);
  CHECK(s2.envelope_ok);
}

TEST_CASE("approximate transcendentals stay inside the rounding envelope") {
  GridSpec spec;
  spec.n_columns = 48;
  const Chunk grid = make_grid(spec);
  const SimPath base = nominal_path();

  SimPath approx = base;
  approx.opts.variant = Variant::ApproxTranscendental;
  const ErrorGrowthSeries s = error_growth(grid, deep_column, base, approx, 15);
  CHECK(s.envelope_ok);
  CHECK(s.worst_ratio < 1.0);
  bool any_mod = false;
  for (double v : s.rms_mod) {
    if (v > 0.0) any_mod = true;
  }
  CHECK(any_mod);  // the variant genuinely changes answers
}

TEST_CASE("an answer-changing modification is caught by the envelope") {
  GridSpec spec;
  spec.n_columns = 48;
  const Chunk grid = make_grid(spec);
  const SimPath base = nominal_path();

  // Lowering the activity threshold wakes up extra columns: a macroscopic
  // change, far outside rounding noise.
  SimPath loose = base;
  loose.opts.activity_threshold = 0.4;
  const ErrorGrowthSeries s = error_growth(grid, deep_column, base, loose, 5);
  CHECK_FALSE(s.envelope_ok);
  CHECK(s.worst_ratio > 1.0);
}

TEST_CASE("divergence is reported with its timestep") {
  GridSpec spec;
  spec.n_columns = 4;
  Chunk grid = make_grid(spec);
  grid.cols[1].T[0] = 5e307;  // doubles once, overflows on the second step

  try {
    error_growth(grid, doubling_kernel, nominal_path(), nominal_path(), 5);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.timestep() == 1);
  }
}

TEST_CASE("a non-finite initial state cannot be perturbed") {
  GridSpec spec;
  spec.n_columns = 4;
  Chunk grid = make_grid(spec);
  grid.cols[0].T[3] = std::nan("");
  CHECK_THROWS_AS(
      error_growth(grid, deep_column, nominal_path(), nominal_path(), 3),
      ValidationError);
}

TEST_CASE("zero timesteps produce an empty, passing series") {
  GridSpec spec;
  spec.n_columns = 8;
  const Chunk grid = make_grid(spec);
  const ErrorGrowthSeries s =
      error_growth(grid, deep_column, nominal_path(), nominal_path(), 0);
  CHECK(s.rms_mod.empty());
  CHECK(s.rms_pert.empty());
  CHECK(s.envelope_ok);
  CHECK(s.worst_ratio == 0.0);
}
