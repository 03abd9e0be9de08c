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

#include "bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "errors.hpp"

namespace convproxy {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string sanitize_note(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

class NoteBuilder {
 public:
  NoteBuilder& add(const std::string& k, const std::string& v) {
    if (!out_.empty()) out_ += ';';
    out_ += k;
    out_ += '=';
    out_ += v;
    return *this;
  }
  NoteBuilder& add(const std::string& k, double v) { return add(k, fmt(v)); }
  NoteBuilder& add(const std::string& k, long long v) {
    return add(k, std::to_string(v));
  }
  std::string str() const { return out_; }

 private:
  std::string out_;
};

RunMetrics metrics_from_sim(const SimResult& sim) {
  RunMetrics m;
  m.wall_s = sim.makespan;
  m.busy_s = sim.busy;
  m.dispatched = sim.dispatched;
  return m;
}

const char* strategy_note(Strategy s) {
  switch (s) {
    case Strategy::StaticBlock: return "static-block";
    case Strategy::StaticCyclic: return "static-cyclic";
    case Strategy::Dynamic: return "dynamic";
    case Strategy::TaskPerColumn: return "task-per-column";
  }
  return "dynamic";
}

const char* env_note(DataEnvMode m) {
  switch (m) {
    case DataEnvMode::CopyAll: return "copy-all";
    case DataEnvMode::CopyScalarsOnly: return "copy-scalars";
    case DataEnvMode::SharedArrays: return "shared";
  }
  return "shared";
}

// Device share: explicit fraction when configured, otherwise calibrated on a
// sample strided evenly across the grid so a centered activity band is
// represented.  Falls back to the full grid before giving up; a grid with no
// work anywhere has no meaningful split and keeps the calibration error.
// Error-growth always calibrates in simulated mode so the result is
// machine-independent.
double resolve_f_device(const ExperimentConfig& cfg, const Chunk& grid,
                        ExecMode calibrate_mode) {
  if (cfg.hetero.f_device >= 0.0) return cfg.hetero.f_device;
  Chunk sample;
  sample.n_levels = grid.n_levels;
  sample.first_col = grid.first_col;
  const std::size_t stride = std::max<std::size_t>(1, grid.cols.size() / 64);
  for (std::size_t i = 0; i < grid.cols.size(); i += stride) {
    sample.cols.push_back(grid.cols[i]);
  }
  try {
    const CalibrationResult rates =
        calibrate(sample, config_kernel(cfg), config_kernel_options(cfg),
                  config_host_pool(cfg), config_device_pool(cfg),
                  calibrate_mode);
    return rates.device_rate / (rates.host_rate + rates.device_rate);
  } catch (const CalibrationError&) {
    if (sample.cols.size() == grid.cols.size()) throw;
  }
  const CalibrationResult rates =
      calibrate(grid, config_kernel(cfg), config_kernel_options(cfg),
                config_host_pool(cfg), config_device_pool(cfg), calibrate_mode);
  return rates.device_rate / (rates.host_rate + rates.device_rate);
}

std::vector<BenchRecord> family_run(const ExperimentConfig& cfg) {
  const Chunk grid = make_grid(config_grid(cfg));
  const std::vector<Chunk> chunks = split_chunks(grid, cfg.grid.chunk_columns);
  const KernelFn kernel = config_kernel(cfg);
  const KernelOptions opts = config_kernel_options(cfg);
  const ScheduleSpec sched = config_schedule(cfg);
  const std::string hash = config_hash(cfg);
  const int p = sched.n_threads;

  std::vector<std::vector<double>> sim_work;
  if (!cfg.hetero.enabled && cfg.run.mode == ExecMode::Simulated) {
    sim_work.reserve(chunks.size());
    for (const Chunk& ch : chunks) {
      sim_work.push_back(work_vector(ch, kernel, opts));
    }
  }

  double f_dev = 0.0;
  if (cfg.hetero.enabled) {
    f_dev = resolve_f_device(cfg, grid, cfg.run.mode);
  }

  std::vector<BenchRecord> recs;
  for (int rep = 0; rep < cfg.run.repetitions; ++rep) {
    BenchRecord r;
    r.experiment = "run";
    r.config_hash = hash;
    r.rep = rep;

    if (cfg.hetero.enabled) {
      HeteroEngine engine(config_host_pool(cfg), config_device_pool(cfg),
                          cfg.hetero.transfer, cfg.run.mode);
      double host_busy = 0.0, dev_busy = 0.0;
      long long bytes = 0;
      for (int t = 0; t < cfg.run.timesteps; ++t) {
        for (const Chunk& ch : chunks) {
          const PartitionPlan plan = plan_from_fraction(
              f_dev, static_cast<long long>(ch.cols.size()));
          const auto step = engine.step(ch, kernel, opts, plan, t);
          r.wall_s += step.metrics.wall_s;
          r.transfer_s +=
              step.metrics.transfer_in_s + step.metrics.transfer_out_s;
          host_busy += step.metrics.host_busy_s;
          dev_busy += step.metrics.device_busy_s;
          bytes += step.metrics.bytes_in + step.metrics.bytes_out;
        }
      }
      const double mean_pool = 0.5 * (host_busy + dev_busy);
      r.imbalance = mean_pool > 0.0 ? std::max(host_busy, dev_busy) / mean_pool : 1.0;
      r.notes = NoteBuilder()
                    .add("kernel", cfg.run.kernel == KernelKind::Deep ? "deep" : "shallow")
                    .add("mode", cfg.run.mode == ExecMode::Measured ? "measured" : "simulated")
                    .add("columns", static_cast<long long>(grid.cols.size()))
                    .add("chunks", static_cast<long long>(chunks.size()))
                    .add("f_device", f_dev)
                    .add("host_busy_s", host_busy)
                    .add("device_busy_s", dev_busy)
                    .add("bytes_moved", bytes)
                    .str();
    } else {
      RunMetrics agg;
      agg.busy_s.assign(static_cast<std::size_t>(p), 0.0);
      agg.dispatched.assign(static_cast<std::size_t>(p), 0);
      for (int t = 0; t < cfg.run.timesteps; ++t) {
        for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
          RunMetrics m;
          if (cfg.run.mode == ExecMode::Simulated) {
            m = metrics_from_sim(simulate_makespan(
                sim_work[ci], sched, cfg.run.grab_overhead_units));
          } else {
            m = run_parallel(chunks[ci], kernel, opts, sched).metrics;
          }
          agg.wall_s += m.wall_s;
          agg.copy_s += m.copy_s;
          for (int th = 0; th < p; ++th) {
            agg.busy_s[static_cast<std::size_t>(th)] +=
                m.busy_s[static_cast<std::size_t>(th)];
            agg.dispatched[static_cast<std::size_t>(th)] +=
                m.dispatched[static_cast<std::size_t>(th)];
          }
        }
      }
      r.wall_s = agg.wall_s;
      r.copy_s = agg.copy_s;
      r.overhead_pct = overhead_pct(agg);
      r.imbalance = imbalance_ratio(agg);
      const long long dispatched = std::accumulate(
          agg.dispatched.begin(), agg.dispatched.end(), 0LL);
      r.notes = NoteBuilder()
                    .add("kernel", cfg.run.kernel == KernelKind::Deep ? "deep" : "shallow")
                    .add("strategy", strategy_note(sched.strategy))
                    .add("mode", cfg.run.mode == ExecMode::Measured ? "measured" : "simulated")
                    .add("columns", static_cast<long long>(grid.cols.size()))
                    .add("chunks", static_cast<long long>(chunks.size()))
                    .add("timesteps", static_cast<long long>(cfg.run.timesteps))
                    .add("dispatched", dispatched)
                    .str();
    }
    recs.push_back(std::move(r));
  }
  return recs;
}

std::vector<BenchRecord> family_sweep_chunk(const ExperimentConfig& cfg) {
  const Chunk grid = make_grid(config_grid(cfg));
  const KernelFn kernel = config_kernel(cfg);
  const KernelOptions opts = config_kernel_options(cfg);
  ScheduleSpec sched = config_schedule(cfg);
  sched.strategy = Strategy::Dynamic;
  const std::string hash = config_hash(cfg);

  std::vector<double> work;
  if (cfg.run.mode == ExecMode::Simulated) {
    work = work_vector(grid, kernel, opts);
  }

  std::vector<BenchRecord> recs;
  for (int size : cfg.sweep.chunk_sizes) {
    sched.omp_chunk_size = size;
    const int reps =
        cfg.run.mode == ExecMode::Simulated ? 1 : cfg.run.repetitions;
    for (int rep = 0; rep < reps; ++rep) {
      RunMetrics m;
      if (cfg.run.mode == ExecMode::Simulated) {
        m = metrics_from_sim(
            simulate_makespan(work, sched, cfg.run.grab_overhead_units));
      } else {
        m = run_parallel(grid, kernel, opts, sched).metrics;
      }
      BenchRecord r;
      r.experiment = "sweep-chunk";
      r.config_hash = hash;
      r.rep = rep;
      r.wall_s = m.wall_s;
      r.overhead_pct = overhead_pct(m);
      r.imbalance = imbalance_ratio(m);
      r.copy_s = m.copy_s;
      r.notes = NoteBuilder()
                    .add("omp_chunk", static_cast<long long>(size))
                    .add("mode", cfg.run.mode == ExecMode::Measured ? "measured" : "simulated")
                    .str();
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

std::vector<BenchRecord> family_firstprivate(const ExperimentConfig& cfg) {
  if (cfg.run.mode != ExecMode::Measured) {
    throw ConfigError(
        "bench-firstprivate compares real copy costs and requires "
        "[run] mode = measured");
  }
  const Chunk grid = make_grid(config_grid(cfg));
  const KernelFn kernel = config_kernel(cfg);
  const KernelOptions opts = config_kernel_options(cfg);
  ScheduleSpec sched = config_schedule(cfg);
  sched.strategy = Strategy::Dynamic;
  const std::string hash = config_hash(cfg);

  std::vector<BenchRecord> recs;
  for (DataEnvMode env : {DataEnvMode::CopyAll, DataEnvMode::CopyScalarsOnly,
                          DataEnvMode::SharedArrays}) {
    sched.data_env.mode = env;
    for (int rep = 0; rep < cfg.run.repetitions; ++rep) {
      const RunMetrics m = run_parallel(grid, kernel, opts, sched).metrics;
      BenchRecord r;
      r.experiment = "bench-firstprivate";
      r.config_hash = hash;
      r.rep = rep;
      r.wall_s = m.wall_s;
      r.overhead_pct = overhead_pct(m);
      r.imbalance = imbalance_ratio(m);
      r.copy_s = m.copy_s;
      r.notes = NoteBuilder()
                    .add("data_env", env_note(env))
                    .add("workspace_bytes",
                         static_cast<long long>(sched.data_env.workspace_bytes))
                    .add("threads", static_cast<long long>(sched.n_threads))
                    .str();
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

std::vector<BenchRecord> family_falseshare(const ExperimentConfig& cfg) {
  const std::string hash = config_hash(cfg);
  const long long n_cols = cfg.grid.columns;
  const int n_levels = cfg.grid.levels;
  const int threads = cfg.schedule.threads;
  const CacheSpec cache;

  std::vector<int> assign(static_cast<std::size_t>(n_cols));
  for (long long c = 0; c < n_cols; ++c) {
    assign[static_cast<std::size_t>(c)] = static_cast<int>(c % threads);
  }

  struct Candidate {
    const char* label;
    Layout layout;
  };
  Layout shared_lay{n_cols, n_levels, Orientation::LevelOuter, 0, 8};
  const int pad = cfg.layout.pad >= 0
                      ? cfg.layout.pad
                      : compute_padding(n_levels, 8, cache.line_bytes);
  Layout padded_lay{n_cols, n_levels, Orientation::ColumnOuter, pad, 8};
  const Candidate candidates[] = {
      {"level-outer", shared_lay},
      {"col-outer", padded_lay},
  };

  std::vector<BenchRecord> recs;
  for (const Candidate& cand : candidates) {
    const long long collisions =
        line_collision_count(cand.layout, assign, cache);
    const StrideProfile strides = stride_profile(cand.layout);
    for (int rep = 0; rep < cfg.run.repetitions; ++rep) {
      Field2D a(cand.layout);
      Field2D b(cand.layout);
      const WriteBenchResult res =
          write_loop_bench(a, b, threads, cfg.run.falseshare_rounds);
      BenchRecord r;
      r.experiment = "bench-falseshare";
      r.config_hash = hash;
      r.rep = rep;
      r.wall_s = res.seconds;
      r.notes = NoteBuilder()
                    .add("orientation", cand.label)
                    .add("pad", static_cast<long long>(cand.layout.pad_elems))
                    .add("collisions", collisions)
                    .add("intra_stride", strides.intra_stride)
                    .add("inter_stride", strides.inter_stride)
                    .add("writes_per_s", res.writes_per_s)
                    .str();
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

std::vector<BenchRecord> family_hetero(const ExperimentConfig& cfg) {
  const Chunk grid = make_grid(config_grid(cfg));
  const std::vector<Chunk> chunks = split_chunks(grid, cfg.grid.chunk_columns);
  const KernelFn kernel = config_kernel(cfg);
  const KernelOptions opts = config_kernel_options(cfg);
  const std::string hash = config_hash(cfg);
  const double f_split = resolve_f_device(cfg, grid, cfg.run.mode);

  struct PartCase {
    const char* label;
    double f;
  };
  const PartCase cases[] = {
      {"host-only", 0.0},
      {"device-only", 1.0},
      {"split", f_split},
  };

  std::vector<BenchRecord> recs;
  for (const PartCase& pc : cases) {
    for (int rep = 0; rep < cfg.run.repetitions; ++rep) {
      HeteroEngine engine(config_host_pool(cfg), config_device_pool(cfg),
                          cfg.hetero.transfer, cfg.run.mode);
      BenchRecord r;
      r.experiment = "bench-hetero";
      r.config_hash = hash;
      r.rep = rep;
      double host_busy = 0.0, dev_busy = 0.0;
      long long bytes_in = 0, bytes_out = 0;
      for (int t = 0; t < cfg.run.timesteps; ++t) {
        for (const Chunk& ch : chunks) {
          const PartitionPlan plan =
              plan_from_fraction(pc.f, static_cast<long long>(ch.cols.size()));
          const auto step = engine.step(ch, kernel, opts, plan, t);
          r.wall_s += step.metrics.wall_s;
          r.transfer_s +=
              step.metrics.transfer_in_s + step.metrics.transfer_out_s;
          host_busy += step.metrics.host_busy_s;
          dev_busy += step.metrics.device_busy_s;
          bytes_in += step.metrics.bytes_in;
          bytes_out += step.metrics.bytes_out;
        }
      }
      const double mean_pool = 0.5 * (host_busy + dev_busy);
      r.imbalance =
          mean_pool > 0.0 ? std::max(host_busy, dev_busy) / mean_pool : 1.0;
      r.notes = NoteBuilder()
                    .add("part", pc.label)
                    .add("f_device", pc.f)
                    .add("host_busy_s", host_busy)
                    .add("device_busy_s", dev_busy)
                    .add("bytes_in", bytes_in)
                    .add("bytes_out", bytes_out)
                    .add("mode", cfg.run.mode == ExecMode::Measured ? "measured" : "simulated")
                    .str();
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

std::vector<BenchRecord> family_error_growth(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const ErrorGrowthSeries series = error_growth_experiment(cfg, nullptr);
  BenchRecord r;
  r.experiment = "error-growth";
  r.config_hash = config_hash(cfg);
  r.rep = 0;
  r.wall_s = seconds_since(t0);
  r.notes = NoteBuilder()
                .add("envelope_ok", series.envelope_ok ? "true" : "false")
                .add("worst_ratio", series.worst_ratio)
                .add("timesteps", static_cast<long long>(cfg.run.timesteps))
                .add("variant",
                     cfg.run.variant == Variant::Exact
                         ? "exact"
                         : (cfg.run.variant == Variant::StrengthReduced
                                ? "strength-reduced"
                                : "approx-exp"))
                .str();
  return {r};
}

}  // namespace

std::string records_to_csv(const std::vector<BenchRecord>& recs) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const BenchRecord& r : recs) {
    out += sanitize_note(r.experiment);
    out += ',';
    out += r.config_hash;
    out += ',';
    out += std::to_string(r.rep);
    out += ',';
    out += fmt(r.wall_s);
    out += ',';
    out += fmt(r.overhead_pct);
    out += ',';
    out += fmt(r.imbalance);
    out += ',';
    out += fmt(r.copy_s);
    out += ',';
    out += fmt(r.transfer_s);
    out += ',';
    out += sanitize_note(r.notes);
    out += '\n';
  }
  return out;
}

std::vector<BenchRecord> records_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("records: empty CSV");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) {
    throw ConfigError("records: unexpected CSV header '" + line + "'");
  }
  std::vector<BenchRecord> recs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (int i = 0; i < 8; ++i) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        throw ConfigError("records: short row", lineno);
      }
      parts.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    parts.push_back(line.substr(start));  // notes, never contains commas
    try {
      BenchRecord r;
      r.experiment = parts[0];
      r.config_hash = parts[1];
      r.rep = static_cast<int>(std::stoll(parts[2]));
      r.wall_s = std::stod(parts[3]);
      r.overhead_pct = std::stod(parts[4]);
      r.imbalance = std::stod(parts[5]);
      r.copy_s = std::stod(parts[6]);
      r.transfer_s = std::stod(parts[7]);
      r.notes = parts[8];
      recs.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("records: bad row (") + e.what() + ")",
                        lineno);
    }
  }
  return recs;
}

std::vector<BenchRecord> run_experiment(const ExperimentConfig& cfg,
                                        const std::string& family) {
  if (family == "run") return family_run(cfg);
  if (family == "sweep-chunk") return family_sweep_chunk(cfg);
  if (family == "bench-firstprivate") return family_firstprivate(cfg);
  if (family == "bench-falseshare") return family_falseshare(cfg);
  if (family == "bench-hetero") return family_hetero(cfg);
  if (family == "error-growth") return family_error_growth(cfg);
  throw ConfigError("unknown experiment family '" + family + "'");
}

ErrorGrowthSeries error_growth_experiment(const ExperimentConfig& cfg,
                                          std::string* series_csv) {
  const Chunk grid = make_grid(config_grid(cfg));
  const KernelFn kernel = config_kernel(cfg);

  SimPath baseline;
  baseline.opts = config_kernel_options(cfg);
  baseline.opts.variant = Variant::Exact;
  baseline.sched.strategy = Strategy::StaticBlock;
  baseline.sched.n_threads = 1;

  SimPath modified;
  modified.opts = config_kernel_options(cfg);
  modified.sched = config_schedule(cfg);
  if (cfg.hetero.enabled) {
    modified.use_hetero = true;
    modified.host = config_host_pool(cfg);
    modified.device = config_device_pool(cfg);
    modified.transfer = cfg.hetero.transfer;
    modified.hetero_mode = ExecMode::Simulated;
    modified.f_device = cfg.hetero.f_device >= 0.0
                            ? cfg.hetero.f_device
                            : resolve_f_device(cfg, grid, ExecMode::Simulated);
  }

  const ErrorGrowthSeries series =
      error_growth(grid, kernel, baseline, modified, cfg.run.timesteps);

  if (series_csv != nullptr) {
    std::string out = "timestep,rms_mod,rms_pert\n";
    for (std::size_t t = 0; t < series.rms_mod.size(); ++t) {
      out += std::to_string(t + 1);
      out += ',';
      out += fmt(series.rms_mod[t]);
      out += ',';
      out += fmt(series.rms_pert[t]);
      out += '\n';
    }
    *series_csv = std::move(out);
  }
  return series;
}

double extrapolate_savings(double sec_saved_per_run, double run_interval_days,
                           double years) {
  if (!std::isfinite(sec_saved_per_run) || !std::isfinite(run_interval_days) ||
      !std::isfinite(years) || run_interval_days <= 0.0 || years < 0.0) {
    throw ConfigError("extrapolate: interval must be > 0 and years >= 0");
  }
  const double runs = 365.0 * years / run_interval_days;
  return sec_saved_per_run * runs / 86400.0;
}

std::string note_value(const std::string& notes, const std::string& key) {
  std::size_t pos = 0;
  while (pos < notes.size()) {
    auto end = notes.find(';', pos);
    if (end == std::string::npos) end = notes.size();
    const auto eq = notes.find('=', pos);
    if (eq != std::string::npos && eq < end &&
        notes.compare(pos, eq - pos, key) == 0) {
      return notes.substr(eq + 1, end - eq - 1);
    }
    pos = end + 1;
  }
  return {};
}

}  // namespace convproxy
