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

#include "physics.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "prng.hpp"

namespace convproxy {

namespace {

// Cody-Waite split of ln2 so k*ln2 subtracts exactly in the high part.
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;

inline double exp_eval(double x, Variant v) {
  return v == Variant::ApproxTranscendental ? approx_exp(x) : std::exp(x);
}

}  // namespace

double approx_exp(double x) {
  assert(std::abs(x) <= 64.0 && "approx_exp domain is |x| <= 64");
  const double kd = std::nearbyint(x * kInvLn2);
  const int k = static_cast<int>(kd);
  const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;
  // Degree-12 Taylor for e^r, |r| <= ln2/2; truncation under 2e-16 relative.
  double p = 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  return std::ldexp(p, k);
}

namespace {

IentropyResult ientropy_impl(double y, double guess, const KernelOptions& opts,
                             long long col) {
  if (!std::isfinite(y) || !std::isfinite(guess)) {
    throw KernelError("ientropy: non-finite input", col);
  }
  double t = guess;
  double e = exp_eval(0.05 * t, opts.variant);
  double resid = e + 0.01 * t - y;
  for (int it = 0; it <= opts.newton_max_iter; ++it) {
    if (std::abs(resid) <= opts.newton_tol) {
      return IentropyResult{t, it};
    }
    const double deriv = 0.05 * e + 0.01;
    t -= resid / deriv;
    if (!std::isfinite(t)) {
      throw KernelError("ientropy: iterate diverged", col);
    }
    e = exp_eval(0.05 * t, opts.variant);
    resid = e + 0.01 * t - y;
  }
  throw KernelError("ientropy: no convergence within " +
                        std::to_string(opts.newton_max_iter) + " iterations",
                    col);
}

ColumnOutput zero_output(int n_levels) {
  ColumnOutput out;
  out.tend_T.assign(static_cast<size_t>(n_levels), 0.0);
  out.tend_q.assign(static_cast<size_t>(n_levels), 0.0);
  out.precip = 0.0;
  out.work_units = 0;
  out.exited_early = true;
  return out;
}

}  // namespace

IentropyResult ientropy_solve(double y, double guess,
                              const KernelOptions& opts) {
  return ientropy_impl(y, guess, opts, -1);
}

ColumnOutput deep_column(const ColumnState& col, const KernelOptions& opts) {
  const int nl = static_cast<int>(col.T.size());
  if (!std::isfinite(col.s)) {
    throw KernelError("deep: non-finite activity", col.col_id);
  }
  if (col.s <= opts.activity_threshold) {
    return zero_output(nl);
  }

  ColumnOutput out;
  out.tend_T.assign(static_cast<size_t>(nl), 0.0);
  out.tend_q.assign(static_cast<size_t>(nl), 0.0);
  out.exited_early = false;

  const bool reduced = opts.variant == Variant::StrengthReduced;
  const double guess = 24.0 + 160.0 * col.s;
  long long work = 0;

  if (reduced) {
    // Hoisted invariant; recomputing it per level is bit-identical, the
    // reduced form only saves the repeated evaluation.
    const double rho = 1.0 + 0.05 * col.s;
    for (int k = 0; k < nl; ++k) {
      const double m = div_by_square(col.q[k], rho, true);
      const double ye = 1.0 + 1.0e-3 * col.T[k] + 0.1 * m;
      const IentropyResult re = ientropy_impl(ye, guess, opts, col.col_id);
      work += re.iterations;
      out.tend_T[k] = 0.02 * (250.0 + 2.0 * re.root - col.T[k]) +
                      0.3 * std::sin(6.0 * col.T[k] + 50.0 * col.q[k]);
    }
    for (int k = 0; k < nl; ++k) {
      const double m = div_by_square(col.q[k], rho, true);
      const double yp = 1.0 + 8.0e-4 * col.T[k] + 0.05 * m + 0.1 * col.s;
      const IentropyResult rp = ientropy_impl(yp, guess, opts, col.col_id);
      work += rp.iterations;
      out.tend_q[k] = 0.05 * (0.01 + 0.002 * std::sin(3.0 * rp.root) - col.q[k]);
      out.precip += col.q[k] * std::max(0.0, rp.root - 4.5);
    }
  } else {
    for (int k = 0; k < nl; ++k) {
      const double rho = 1.0 + 0.05 * col.s;
      const double m = div_by_square(col.q[k], rho, false);
      const double ye = 1.0 + 1.0e-3 * col.T[k] + 0.1 * m;
      const IentropyResult re = ientropy_impl(ye, guess, opts, col.col_id);
      work += re.iterations;
      out.tend_T[k] = 0.02 * (250.0 + 2.0 * re.root - col.T[k]) +
                      0.3 * std::sin(6.0 * col.T[k] + 50.0 * col.q[k]);
    }
    for (int k = 0; k < nl; ++k) {
      const double rho = 1.0 + 0.05 * col.s;
      const double m = div_by_square(col.q[k], rho, false);
      const double yp = 1.0 + 8.0e-4 * col.T[k] + 0.05 * m + 0.1 * col.s;
      const IentropyResult rp = ientropy_impl(yp, guess, opts, col.col_id);
      work += rp.iterations;
      out.tend_q[k] = 0.05 * (0.01 + 0.002 * std::sin(3.0 * rp.root) - col.q[k]);
      out.precip += col.q[k] * std::max(0.0, rp.root - 4.5);
    }
  }
  out.work_units = work;
  return out;
}

ColumnOutput shallow_column(const ColumnState& col, const KernelOptions& opts) {
  const int nl = static_cast<int>(col.T.size());
  if (!std::isfinite(col.s)) {
    throw KernelError("shallow: non-finite activity", col.col_id);
  }

  static constexpr double w1[4] = {0.8, 1.1, 0.9, 1.2};
  static constexpr double w2[4] = {30.0, 20.0, 40.0, 25.0};
  static constexpr double w3[4] = {0.5, 0.3, 0.4, 0.2};

  const bool reduced = opts.variant == Variant::StrengthReduced;
  double acc = 0.0;
  long long work = 0;

  for (int j = 0; j < 4; ++j) {
    double phase_sum = 0.0;
    if (reduced) {
      const double rho = 1.0 + 0.05 * col.s;
      for (int k = 0; k < nl; ++k) {
        double term = 1.0e-3 * w1[j] * col.T[k] +
                      w2[j] * div_by_square(col.q[k], rho, true);
        if (j == 1) {
          term += 0.02 * exp_eval(-50.0 * col.q[k], opts.variant);
        }
        phase_sum += term;
      }
    } else {
      for (int k = 0; k < nl; ++k) {
        const double rho = 1.0 + 0.05 * col.s;
        double term = 1.0e-3 * w1[j] * col.T[k] +
                      w2[j] * div_by_square(col.q[k], rho, false);
        if (j == 1) {
          term += 0.02 * exp_eval(-50.0 * col.q[k], opts.variant);
        }
        phase_sum += term;
      }
    }
    acc += phase_sum / static_cast<double>(nl) + w3[j] * col.s;
    work += nl;
    if (col.s * (1.0 + 0.05 * std::sin(3.0 * acc)) < kShallowTheta[j]) {
      ColumnOutput out = zero_output(nl);
      out.work_units = work;
      return out;
    }
  }

  ColumnOutput out;
  out.tend_T.assign(static_cast<size_t>(nl), 0.0);
  out.tend_q.assign(static_cast<size_t>(nl), 0.0);
  out.exited_early = false;
  out.work_units = work;
  for (int k = 0; k < nl; ++k) {
    out.tend_T[k] = 0.005 * (256.0 + 2.0 * std::sin(acc) - col.T[k]);
    out.tend_q[k] = 0.02 * (0.012 - col.q[k]);
  }
  out.precip = (col.s - 0.5) * std::max(0.0, std::sin(acc) + 0.5);
  return out;
}

std::vector<ColumnOutput> deep_convection(const Chunk& chunk,
                                          const KernelOptions& opts) {
  std::vector<ColumnOutput> outs;
  outs.reserve(chunk.cols.size());
  for (const ColumnState& c : chunk.cols) {
    outs.push_back(deep_column(c, opts));
  }
  return outs;
}

std::vector<ColumnOutput> shallow_convection(const Chunk& chunk,
                                             const KernelOptions& opts) {
  std::vector<ColumnOutput> outs;
  outs.reserve(chunk.cols.size());
  for (const ColumnState& c : chunk.cols) {
    outs.push_back(shallow_column(c, opts));
  }
  return outs;
}

ColumnState make_column(const GridSpec& spec, long long col) {
  ColumnState c;
  c.col_id = col;
  const long long band =
      std::llround(spec.tropics_band * static_cast<double>(spec.n_columns));
  const long long lo = (spec.n_columns - band) / 2;
  const bool tropical = col >= lo && col < lo + band;
  const double us = rng_u01(spec.seed, 0, static_cast<std::uint64_t>(col));
  c.s = tropical ? 0.5 + 0.5 * us : 0.5 * us;
  c.T.resize(static_cast<size_t>(spec.n_levels));
  c.q.resize(static_cast<size_t>(spec.n_levels));
  for (int k = 0; k < spec.n_levels; ++k) {
    const std::uint64_t ctr =
        static_cast<std::uint64_t>(col) * static_cast<std::uint64_t>(spec.n_levels) +
        static_cast<std::uint64_t>(k);
    c.T[static_cast<size_t>(k)] = 250.0 + 60.0 * rng_u01(spec.seed, 1, ctr);
    c.q[static_cast<size_t>(k)] = 0.022 * rng_u01(spec.seed, 2, ctr);
  }
  return c;
}

Chunk make_grid(const GridSpec& spec) {
  Chunk g;
  g.n_levels = spec.n_levels;
  g.first_col = 0;
  g.cols.reserve(static_cast<size_t>(spec.n_columns));
  for (long long c = 0; c < spec.n_columns; ++c) {
    g.cols.push_back(make_column(spec, c));
  }
  return g;
}

std::vector<Chunk> split_chunks(const Chunk& grid, long long chunk_cols) {
  std::vector<Chunk> chunks;
  const long long n = static_cast<long long>(grid.cols.size());
  if (chunk_cols <= 0) chunk_cols = n > 0 ? n : 1;
  for (long long start = 0; start < n; start += chunk_cols) {
    const long long stop = std::min(n, start + chunk_cols);
    Chunk ch;
    ch.n_levels = grid.n_levels;
    ch.first_col = grid.first_col + start;
    ch.cols.assign(grid.cols.begin() + start, grid.cols.begin() + stop);
    chunks.push_back(std::move(ch));
  }
  return chunks;
}

}  // namespace convproxy
