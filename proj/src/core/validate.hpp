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

#include "hetero.hpp"

namespace convproxy {

// Answer-changing optimizations are accepted when their deviation stays
// inside the envelope of pure rounding noise.  The envelope is measured by
// a twin run whose initial temperature field is perturbed by one unit in
// the last place; a code modification whose RMS difference never exceeds
// the perturbed run's RMS difference is indistinguishable from roundoff.

// Flips the least significant significand bit.  An involution: applying it
// twice restores the original bits.  0.0 becomes the smallest subnormal.
// Throws ValidationError for non-finite input.
double perturb_lsb(double x);
void perturb_lsb_field(std::span<double> xs);

// sqrt(mean((a[i] - b[i])^2)); the spans must have equal length.
double rms_diff(std::span<const double> a, std::span<const double> b);

// First bitwise difference between two output sets, if any.
struct BitwiseReport {
  bool equal = true;
  long long col = -1;
  int level = -1;       // -1 for scalar fields
  const char* field = "";
};
BitwiseReport bitwise_compare(const std::vector<ColumnOutput>& a,
                              const std::vector<ColumnOutput>& b);

// How one simulation leg executes: kernel variant plus the execution
// machinery (schedule, or a host/device partition) whose reordering must
// never change results.
struct SimPath {
  KernelOptions opts;
  ScheduleSpec sched;
  bool use_hetero = false;
  double f_device = 0.0;
  PoolProfile host;
  PoolProfile device;
  TransferModel transfer;
  ExecMode hetero_mode = ExecMode::Simulated;
};

struct ErrorGrowthSeries {
  std::vector<double> rms_mod;   // modified leg vs baseline, per timestep
  std::vector<double> rms_pert;  // lsb-perturbed leg vs baseline
  bool envelope_ok = true;       // rms_mod[t] <= rms_pert[t] for every t
  double worst_ratio = 0.0;      // max over t of rms_mod / rms_pert
};

// Runs three legs from the same initial grid for `timesteps` steps of the
// feedback loop T += tend_T, q += tend_q:
//   baseline   initial state, baseline path
//   modified   initial state, modified path
//   perturbed  initial T flipped by one ulp everywhere, baseline path
// After every step the temperature-field RMS difference of the modified and
// perturbed legs against baseline is recorded.  NaN divergence in any leg
// raises ValidationError carrying the first failing timestep.
ErrorGrowthSeries error_growth(const Chunk& initial, KernelFn kernel,
                               const SimPath& baseline, const SimPath& modified,
                               int timesteps);

}  // namespace convproxy
