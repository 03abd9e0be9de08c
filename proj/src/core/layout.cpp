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

#include "layout.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace convproxy {

int compute_padding(int inner_extent, int elem_bytes, int line_bytes) {
  if (inner_extent < 0 || elem_bytes <= 0 || line_bytes <= 0) {
    throw std::invalid_argument("compute_padding: non-positive argument");
  }
  for (int pad = 0;; ++pad) {
    const long long bytes =
        static_cast<long long>(inner_extent + pad) * elem_bytes;
    if (bytes % line_bytes == 0) return pad;
  }
}

Field2D::Field2D(const Layout& layout, int align_bytes) : layout_(layout) {
  if (layout.n_cols < 0 || layout.n_levels < 0 || layout.pad_elems < 0) {
    throw std::invalid_argument("Field2D: negative extent");
  }
  const std::size_t align = static_cast<std::size_t>(align_bytes);
  std::size_t bytes = static_cast<std::size_t>(layout.size_elems()) * sizeof(double);
  bytes = (bytes + align - 1) / align * align;  // aligned_alloc size rule
  if (bytes == 0) bytes = align;
  double* p = static_cast<double*>(std::aligned_alloc(align, bytes));
  if (p == nullptr) throw std::bad_alloc();
  std::memset(p, 0, bytes);
  data_.reset(p);
}

long long line_collision_count(const Layout& layout,
                               std::span<const int> col_to_thread,
                               const CacheSpec& cache) {
  if (static_cast<long long>(col_to_thread.size()) != layout.n_cols) {
    throw std::invalid_argument("line_collision_count: assignment size");
  }
  if (cache.line_bytes <= 0) {
    throw std::invalid_argument("line_collision_count: line_bytes");
  }
  const long long total_bytes = layout.size_elems() * layout.elem_bytes;
  const long long n_lines =
      (total_bytes + cache.line_bytes - 1) / cache.line_bytes;
  // first_writer[l] == -1: untouched; == -2: two or more distinct threads.
  std::vector<long long> first_writer(static_cast<std::size_t>(n_lines), -1);

  const long long inner_real = layout.inner_extent();
  const long long inner_pad = layout.padded_inner();
  for (long long e = 0; e < layout.size_elems(); ++e) {
    const long long inner = e % inner_pad;
    if (inner >= inner_real) continue;  // padding, never written
    const long long outer = e / inner_pad;
    const long long col =
        layout.orientation == Orientation::ColumnOuter ? outer : inner;
    const int thr = col_to_thread[static_cast<std::size_t>(col)];
    const long long b0 = e * layout.elem_bytes;
    const long long b1 = b0 + layout.elem_bytes - 1;
    for (long long line = b0 / cache.line_bytes; line <= b1 / cache.line_bytes;
         ++line) {
      long long& w = first_writer[static_cast<std::size_t>(line)];
      if (w == -1) {
        w = thr;
      } else if (w >= 0 && w != thr) {
        w = -2;
      }
    }
  }

  long long collisions = 0;
  for (long long w : first_writer) {
    if (w == -2) ++collisions;
  }
  return collisions;
}

StrideProfile stride_profile(const Layout& layout) {
  StrideProfile p;
  if (layout.orientation == Orientation::ColumnOuter) {
    p.intra_stride = 1;
    p.inter_stride = layout.padded_inner();
  } else {
    p.intra_stride = layout.padded_inner();
    p.inter_stride = 1;
  }
  return p;
}

WriteBenchResult write_loop_bench(Field2D& a, Field2D& b, int n_threads,
                                  int rounds) {
  const Layout& lay = a.layout();
  if (b.layout().n_cols != lay.n_cols || b.layout().n_levels != lay.n_levels) {
    throw std::invalid_argument("write_loop_bench: field shape mismatch");
  }
  const long long n_cols = lay.n_cols;
  const int n_levels = lay.n_levels;
  const int p = std::max(1, n_threads);
  const int reps = std::max(1, rounds);

  std::atomic<long long> cursor{0};
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(p));
  for (int t = 0; t < p; ++t) {
    threads.emplace_back([&] {
      for (;;) {
        const long long lo = cursor.fetch_add(2, std::memory_order_relaxed);
        if (lo >= n_cols * reps) break;
        const long long hi = std::min(n_cols * reps, lo + 2);
        for (long long i = lo; i < hi; ++i) {
          const long long col = i % n_cols;
          for (int k = 0; k < n_levels; ++k) {
            a.set(col, k, 0.5 * static_cast<double>(col) + 0.25 * k);
            b.set(col, k, 0.125 * static_cast<double>(col) - 1.0 * k);
          }
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  WriteBenchResult res;
  res.seconds = secs;
  const double writes =
      2.0 * static_cast<double>(n_cols) * n_levels * reps;
  res.writes_per_s = secs > 0.0 ? writes / secs : 0.0;
  return res;
}

}  // namespace convproxy
