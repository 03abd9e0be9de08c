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
#include <vector>

#include "errors.hpp"

namespace convproxy {

// Desk-scale stand-ins for column-physics convection kernels.  Each column is
// independent: the kernels read one ColumnState and write one ColumnOutput,
// never touching neighbours.  That independence is what makes every result in
// this project bit-reproducible across thread counts, schedules, layouts and
// host/device partitions.

struct ColumnState {
  long long col_id = 0;
  double s = 0.0;              // column activity scalar in [0, 1]
  std::vector<double> T;       // per-level temperature-like field
  std::vector<double> q;       // per-level moisture-like field
};

struct Chunk {
  int n_levels = 0;
  long long first_col = 0;
  std::vector<ColumnState> cols;
};

struct GridSpec {
  long long n_columns = 256;
  int n_levels = 30;
  double tropics_band = 0.3;   // fraction of columns in the active middle band
  std::uint64_t seed = 42;
};

struct ColumnOutput {
  std::vector<double> tend_T;
  std::vector<double> tend_q;
  double precip = 0.0;
  long long work_units = 0;
  // True when the kernel wrote no tendencies for this column (inactive deep
  // column, or a shallow column that failed an inter-phase predicate).
  bool exited_early = false;
};

enum class Variant {
  Exact,                 // library transcendentals, per-level divisions
  StrengthReduced,       // hoisted loop invariants, division by squared term
  ApproxTranscendental,  // polynomial exp replacing the library call
};

struct KernelOptions {
  Variant variant = Variant::Exact;
  double activity_threshold = 0.5;
  double newton_tol = 1e-12;   // absolute residual tolerance
  int newton_max_iter = 100;
};

struct IentropyResult {
  double root = 0.0;
  int iterations = 0;
};

// ---------------------------------------------------------------------------
// Transcendental proxy.
//
// approx_exp: range reduction x = k*ln2 + r with |r| <= ln2/2, degree-12
// Taylor polynomial for e^r, exact 2^k scaling.  Valid for |x| <= 64.
// Documented error budget: relative error <= 1e-7 versus the library exp.
// The implementation lands far inside that budget (near 1 ulp), which is why
// the approximate variant stays inside the rounding-perturbation envelope in
// the error-growth harness.
double approx_exp(double x);

// Division-by-squared-denominator site shared by both kernels.  The reduced
// form replaces two divisions with one; bit-identical to the naive form only
// when num == 0 or den == 1.
inline double div_by_square(double num, double den, bool reduced) {
  return reduced ? num / (den * den) : num / den / den;
}

// ---------------------------------------------------------------------------
// Inverse-entropy solve: Newton iteration for f(T) = y where
//
//   f(T) = exp(0.05*T) + 0.01*T
//
// f is strictly increasing and convex, so from a guess at or right of the
// root the iterates descend monotonically and the iteration count is
// non-decreasing in the guess.  The deep kernel exploits this: the guess is
// displaced right proportionally to column activity, making per-column work
// grow with s.  Returns the root and the number of Newton updates taken; a
// guess already inside tolerance costs zero updates.  Throws KernelError on
// NaN input or non-convergence.
IentropyResult ientropy_solve(double y, double guess, const KernelOptions& opts);

// ---------------------------------------------------------------------------
// Deep convection proxy.  Columns with s <= activity_threshold are skipped
// with zeroed outputs.  Active columns run two per-level passes:
//
//   guess = 24 + 160*s
//   rho   = 1 + 0.05*s                      (loop-invariant)
//   m     = q[k] / rho / rho                (variant site)
//
//   entrainment:   y_e = 1 + 1e-3*T[k] + 0.1*m
//                  r_e = ientropy(y_e, guess)
//                  tend_T[k] = 0.02*(250 + 2*r_e - T[k])
//                              + 0.3*sin(6*T[k] + 50*q[k])
//
//   precipitation: y_p = 1 + 8e-4*T[k] + 0.05*m + 0.1*s
//                  r_p = ientropy(y_p, guess)
//                  tend_q[k] = 0.05*(0.01 + 0.002*sin(3*r_p) - q[k])
//                  precip   += q[k] * max(0, r_p - 4.5)
//
// work_units counts Newton updates over both passes.
ColumnOutput deep_column(const ColumnState& col, const KernelOptions& opts);

// ---------------------------------------------------------------------------
// Shallow convection proxy: four sequential phases with an exit predicate
// after each.  Phase j accumulates
//
//   acc += mean_k( 1e-3*w1[j]*T[k] + w2[j]*m[k] + [j==1] 0.02*exp(-50*q[k]) )
//          + w3[j]*s
//
// and exits early when s * (1 + 0.05*sin(3*acc)) < theta[j].  Each executed
// phase costs n_levels work units.  A column that exits has zeroed outputs
// and exited_early set; a column that survives all four phases writes
//
//   tend_T[k] = 0.005*(256 + 2*sin(acc) - T[k])
//   tend_q[k] = 0.02*(0.012 - q[k])
//   precip    = (s - 0.5) * max(0, sin(acc) + 0.5)
ColumnOutput shallow_column(const ColumnState& col, const KernelOptions& opts);

inline constexpr double kShallowTheta[4] = {0.15, 0.30, 0.45, 0.60};

// Column-kernel entry point used by the scheduling and offload layers.
using KernelFn = ColumnOutput (*)(const ColumnState&, const KernelOptions&);

// Serial whole-chunk drivers (reference execution order).
std::vector<ColumnOutput> deep_convection(const Chunk& chunk,
                                          const KernelOptions& opts);
std::vector<ColumnOutput> shallow_convection(const Chunk& chunk,
                                             const KernelOptions& opts);

// ---------------------------------------------------------------------------
// Grid synthesis.  Pure function of (seed, stream, counter): any column can
// be generated in isolation and the result never depends on generation order.
// Columns inside the contiguous middle band of width tropics_band*n_columns
// draw s from [0.5, 1); the rest draw from [0, 0.5).  Per level,
// T[k] in [250, 310) and q[k] in [0, 0.022).
ColumnState make_column(const GridSpec& spec, long long col);
Chunk make_grid(const GridSpec& spec);

// Split a grid into contiguous chunks of at most chunk_cols columns.
std::vector<Chunk> split_chunks(const Chunk& grid, long long chunk_cols);

}  // namespace convproxy
