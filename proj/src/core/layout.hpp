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
#include <memory>
#include <span>
#include <vector>

namespace convproxy {

// Storage-layout experiments for per-column fields.  A field is logically
// (column, level); physically either the levels of one column are contiguous
// (ColumnOuter, with optional padding after each column so columns start on
// distinct cache lines) or all columns of one level are contiguous
// (LevelOuter, where neighbouring columns share lines and concurrent
// writers invite false sharing).

enum class Orientation { ColumnOuter, LevelOuter };

struct CacheSpec {
  int line_bytes = 64;
};

struct Layout {
  long long n_cols = 0;
  int n_levels = 0;
  Orientation orientation = Orientation::ColumnOuter;
  int pad_elems = 0;   // padding elements appended to each inner extent
  int elem_bytes = 8;

  long long inner_extent() const {
    return orientation == Orientation::ColumnOuter
               ? static_cast<long long>(n_levels)
               : n_cols;
  }
  long long padded_inner() const { return inner_extent() + pad_elems; }
  long long outer_extent() const {
    return orientation == Orientation::ColumnOuter
               ? n_cols
               : static_cast<long long>(n_levels);
  }
  long long size_elems() const { return outer_extent() * padded_inner(); }
  long long index_of(long long col, int level) const {
    return orientation == Orientation::ColumnOuter
               ? col * padded_inner() + level
               : static_cast<long long>(level) * padded_inner() + col;
  }
};

// Smallest pad >= 0 making (inner + pad) * elem_bytes a whole number of
// cache lines, so consecutive outer slots start on line boundaries.
int compute_padding(int inner_extent, int elem_bytes, int line_bytes);

// Line-aligned, zero-initialised 2-D double field.
class Field2D {
 public:
  explicit Field2D(const Layout& layout, int align_bytes = 64);

  const Layout& layout() const { return layout_; }
  double at(long long col, int level) const {
    return data_[static_cast<std::size_t>(layout_.index_of(col, level))];
  }
  void set(long long col, int level, double v) {
    data_[static_cast<std::size_t>(layout_.index_of(col, level))] = v;
  }
  double* data() { return data_.get(); }
  const double* data() const { return data_.get(); }
  std::span<double> raw() {
    return {data_.get(), static_cast<std::size_t>(layout_.size_elems())};
  }

 private:
  struct FreeDeleter {
    void operator()(double* p) const { std::free(p); }
  };
  Layout layout_;
  std::unique_ptr<double[], FreeDeleter> data_;
};

// Number of cache lines written by two or more distinct threads when thread
// col_to_thread[c] writes every level of column c.  The base address is
// assumed aligned to line_bytes (Field2D guarantees 64).  Padding elements
// are dead space: they are written by nobody.
long long line_collision_count(const Layout& layout,
                               std::span<const int> col_to_thread,
                               const CacheSpec& cache);

// Access strides, in elements, for the kernel's natural traversal (inner
// loop over the levels of one column, outer loop over columns):
//   intra_stride  distance between successive levels of one column
//   inter_stride  distance between the starts of successive columns
struct StrideProfile {
  long long intra_stride = 0;
  long long inter_stride = 0;
};
StrideProfile stride_profile(const Layout& layout);

struct WriteBenchResult {
  double seconds = 0.0;
  double writes_per_s = 0.0;
};

// Concurrent write benchmark: n_threads workers claim columns from a shared
// cursor in groups of two and store a deterministic value pattern into every
// level of A and B, `rounds` times over.  The value pattern depends only on
// (column, level), so logical contents are layout-independent.
WriteBenchResult write_loop_bench(Field2D& a, Field2D& b, int n_threads,
                                  int rounds);

}  // namespace convproxy
