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

#include "validate.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

#include "errors.hpp"

namespace convproxy {

double perturb_lsb(double x) {
  if (!std::isfinite(x)) {
    throw ValidationError("perturb_lsb: non-finite value");
  }
  return std::bit_cast<double>(std::bit_cast<std::uint64_t>(x) ^ 1u);
}

void perturb_lsb_field(std::span<double> xs) {
  for (double& x : xs) x = perturb_lsb(x);
}

double rms_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("rms_diff: length mismatch");
  }
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

namespace {

bool bits_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

BitwiseReport bitwise_compare(const std::vector<ColumnOutput>& a,
                              const std::vector<ColumnOutput>& b) {
  BitwiseReport rep;
  if (a.size() != b.size()) {
    rep.equal = false;
    rep.field = "count";
    return rep;
  }
  for (std::size_t c = 0; c < a.size(); ++c) {
    const ColumnOutput& x = a[c];
    const ColumnOutput& y = b[c];
    auto fail = [&](const char* field, int level) {
      rep.equal = false;
      rep.col = static_cast<long long>(c);
      rep.level = level;
      rep.field = field;
    };
    if (x.tend_T.size() != y.tend_T.size() ||
        x.tend_q.size() != y.tend_q.size()) {
      fail("shape", -1);
      return rep;
    }
    for (std::size_t k = 0; k < x.tend_T.size(); ++k) {
      if (!bits_equal(x.tend_T[k], y.tend_T[k])) {
        fail("tend_T", static_cast<int>(k));
        return rep;
      }
    }
    for (std::size_t k = 0; k < x.tend_q.size(); ++k) {
      if (!bits_equal(x.tend_q[k], y.tend_q[k])) {
        fail("tend_q", static_cast<int>(k));
        return rep;
      }
    }
    if (!bits_equal(x.precip, y.precip)) {
      fail("precip", -1);
      return rep;
    }
    if (x.work_units != y.work_units) {
      fail("work_units", -1);
      return rep;
    }
    if (x.exited_early != y.exited_early) {
      fail("exited_early", -1);
      return rep;
    }
  }
  return rep;
}

namespace {

std::vector<ColumnOutput> run_path(const Chunk& state, KernelFn kernel,
                                   const SimPath& path, int timestep) {
  if (path.use_hetero) {
    // A fresh engine per step keeps run_path stateless; buffer persistence
    // across steps only affects modeled timing, never values.
    HeteroEngine engine(path.host, path.device, path.transfer,
                        path.hetero_mode);
    const PartitionPlan plan = plan_from_fraction(
        path.f_device, static_cast<long long>(state.cols.size()));
    return engine.step(state, kernel, path.opts, plan, timestep).outputs;
  }
  return run_parallel(state, kernel, path.opts, path.sched).outputs;
}

void advance(Chunk& state, const std::vector<ColumnOutput>& outs) {
  for (std::size_t c = 0; c < state.cols.size(); ++c) {
    ColumnState& col = state.cols[c];
    const ColumnOutput& o = outs[c];
    for (std::size_t k = 0; k < col.T.size(); ++k) {
      col.T[k] += o.tend_T[k];
      col.q[k] += o.tend_q[k];
    }
  }
}

void check_finite(const Chunk& state, int timestep, const char* leg) {
  for (const ColumnState& col : state.cols) {
    for (double v : col.T) {
      if (!std::isfinite(v)) {
        throw ValidationError(std::string("error_growth: ") + leg +
                                  " leg diverged",
                              timestep);
      }
    }
    for (double v : col.q) {
      if (!std::isfinite(v)) {
        throw ValidationError(std::string("error_growth: ") + leg +
                                  " leg diverged",
                              timestep);
      }
    }
  }
}

std::vector<double> flat_T(const Chunk& state) {
  std::vector<double> flat;
  flat.reserve(state.cols.size() * (state.cols.empty() ? 0 : state.cols[0].T.size()));
  for (const ColumnState& col : state.cols) {
    flat.insert(flat.end(), col.T.begin(), col.T.end());
  }
  return flat;
}

}  // namespace

ErrorGrowthSeries error_growth(const Chunk& initial, KernelFn kernel,
                               const SimPath& baseline, const SimPath& modified,
                               int timesteps) {
  Chunk base = initial;
  Chunk mod = initial;
  Chunk pert = initial;
  for (ColumnState& col : pert.cols) {
    perturb_lsb_field(col.T);
  }

  ErrorGrowthSeries series;
  series.rms_mod.reserve(static_cast<std::size_t>(timesteps));
  series.rms_pert.reserve(static_cast<std::size_t>(timesteps));

  for (int t = 0; t < timesteps; ++t) {
    advance(base, run_path(base, kernel, baseline, t));
    advance(mod, run_path(mod, kernel, modified, t));
    advance(pert, run_path(pert, kernel, baseline, t));
    check_finite(base, t, "baseline");
    check_finite(mod, t, "modified");
    check_finite(pert, t, "perturbed");

    const std::vector<double> tb = flat_T(base);
    const double r_mod = rms_diff(flat_T(mod), tb);
    const double r_pert = rms_diff(flat_T(pert), tb);
    series.rms_mod.push_back(r_mod);
    series.rms_pert.push_back(r_pert);
    if (r_mod > r_pert) {
      series.envelope_ok = false;
    }
    double ratio;
    if (r_pert > 0.0) {
      ratio = r_mod / r_pert;
    } else {
      ratio = r_mod > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (ratio > series.worst_ratio) series.worst_ratio = ratio;
  }
  return series;
}

}  // namespace convproxy
