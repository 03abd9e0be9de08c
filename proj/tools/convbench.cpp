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

// convbench: command-line front end over the convproxy C API.
//
// Exit codes: 0 success, 2 configuration problem, 3 kernel numeric failure,
// 4 failed validation check, 1 anything else.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "convproxy.h"

namespace {

int exit_code_for(cvp_status st) {
  switch (st) {
    case CVP_OK: return 0;
    case CVP_ERR_CONFIG: return 2;
    case CVP_ERR_NUMERIC: return 3;
    case CVP_ERR_CHECK: return 4;
    case CVP_ERR_IO: return 2;
    default: return 1;
  }
}

int fail(cvp_status st) {
  std::fprintf(stderr, "convbench: error: %s\n", cvp_last_error());
  return exit_code_for(st);
}

struct ConfigHandle {
  cvp_config* ptr = nullptr;
  ~ConfigHandle() { cvp_config_free(ptr); }
};

struct RecordsHandle {
  cvp_records* ptr = nullptr;
  ~RecordsHandle() { cvp_records_free(ptr); }
};

struct StringHandle {
  char* ptr = nullptr;
  ~StringHandle() { cvp_string_free(ptr); }
};

// Options shared by the experiment subcommands; empty string means
// "no override".
struct CommonOpts {
  std::string config_path;
  std::string csv_path;
  int threads = -1;
  int omp_chunk = -1;
  std::string strategy;
  std::string layout;
  std::string pad;
  std::string mode;
  long long seed = -1;
};

void add_common_options(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--config", opts->config_path, "INI config file");
  cmd->add_option("--csv", opts->csv_path, "write benchmark records to this CSV file");
  cmd->add_option("--threads", opts->threads, "worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--omp-chunk", opts->omp_chunk, "dynamic-schedule chunk size")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--strategy", opts->strategy, "scheduling strategy")
      ->check(CLI::IsMember(
          {"static", "static-block", "static-cyclic", "dynamic", "task"}));
  cmd->add_option("--layout", opts->layout, "field orientation")
      ->check(CLI::IsMember({"level-outer", "col-outer"}));
  cmd->add_option("--pad", opts->pad, "padding elements, or 'auto'");
  cmd->add_option("--mode", opts->mode, "execution mode")
      ->check(CLI::IsMember({"measured", "simulated"}));
  cmd->add_option("--seed", opts->seed, "grid random seed");
}

cvp_status build_config(const CommonOpts& opts, ConfigHandle& cfg) {
  cvp_status st = opts.config_path.empty()
                      ? cvp_config_create(&cfg.ptr)
                      : cvp_config_load(opts.config_path.c_str(), &cfg.ptr);
  if (st != CVP_OK) return st;

  auto set = [&](const char* key, const std::string& value) {
    return cvp_config_set(cfg.ptr, key, value.c_str());
  };
  if (opts.threads > 0) {
    if ((st = set("schedule.threads", std::to_string(opts.threads)))) return st;
  }
  if (opts.omp_chunk > 0) {
    if ((st = set("schedule.omp_chunk", std::to_string(opts.omp_chunk)))) return st;
  }
  if (!opts.strategy.empty()) {
    if ((st = set("schedule.strategy", opts.strategy))) return st;
  }
  if (!opts.layout.empty()) {
    if ((st = set("layout.orientation", opts.layout))) return st;
  }
  if (!opts.pad.empty()) {
    if ((st = set("layout.pad", opts.pad))) return st;
  }
  if (!opts.mode.empty()) {
    if ((st = set("run.mode", opts.mode))) return st;
  }
  if (opts.seed >= 0) {
    if ((st = set("grid.seed", std::to_string(opts.seed)))) return st;
  }
  return CVP_OK;
}

int run_family(const CommonOpts& opts, const std::string& family,
               const std::vector<std::pair<std::string, std::string>>& extra) {
  ConfigHandle cfg;
  cvp_status st = build_config(opts, cfg);
  if (st != CVP_OK) return fail(st);
  for (const auto& [key, value] : extra) {
    if ((st = cvp_config_set(cfg.ptr, key.c_str(), value.c_str()))) {
      return fail(st);
    }
  }

  RecordsHandle recs;
  if ((st = cvp_run_experiment(cfg.ptr, family.c_str(), &recs.ptr))) {
    return fail(st);
  }

  StringHandle md;
  if ((st = cvp_report_markdown(recs.ptr, &md.ptr))) return fail(st);
  std::printf("%s", md.ptr);

  if (!opts.csv_path.empty()) {
    if ((st = cvp_records_save(recs.ptr, opts.csv_path.c_str()))) {
      return fail(st);
    }
    std::printf("\nrecords written to %s\n", opts.csv_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convection-proxy benchmark driver"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, fp_opts, fs_opts, het_opts, eg_opts;

  CLI::App* cmd_run = app.add_subcommand("run", "execute the configured experiment");
  add_common_options(cmd_run, &run_opts);

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep-chunk", "dynamic-schedule chunk-size sweep");
  add_common_options(cmd_sweep, &sweep_opts);

  CLI::App* cmd_fp = app.add_subcommand(
      "bench-firstprivate", "data-environment copy cost comparison");
  add_common_options(cmd_fp, &fp_opts);

  CLI::App* cmd_fs = app.add_subcommand(
      "bench-falseshare", "write-loop layout benchmark with line-sharing model");
  add_common_options(cmd_fs, &fs_opts);

  CLI::App* cmd_het = app.add_subcommand(
      "bench-hetero", "host-only / device-only / partitioned comparison");
  add_common_options(cmd_het, &het_opts);

  CLI::App* cmd_eg = app.add_subcommand(
      "error-growth", "rounding-envelope validation of the configured variant");
  add_common_options(cmd_eg, &eg_opts);
  int eg_timesteps = 50;
  std::string eg_series_path;
  cmd_eg->add_option("--timesteps", eg_timesteps, "feedback steps to run")
      ->check(CLI::PositiveNumber);
  cmd_eg->add_option("--series", eg_series_path,
                     "write the per-timestep RMS series to this CSV file");

  std::string report_input;
  CLI::App* cmd_report =
      app.add_subcommand("report", "render a markdown report from saved records");
  cmd_report->add_option("--input", report_input, "records CSV file")
      ->required();

  double ex_seconds = 0.0, ex_interval = 5.0, ex_years = 1000.0;
  CLI::App* cmd_ex = app.add_subcommand(
      "extrapolate", "project long-horizon compute savings");
  cmd_ex->add_option("--seconds-saved", ex_seconds, "seconds saved per run")
      ->required();
  cmd_ex->add_option("--interval-days", ex_interval, "days between runs");
  cmd_ex->add_option("--years", ex_years, "projection horizon in years");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (cmd_run->parsed()) return run_family(run_opts, "run", {});
  if (cmd_sweep->parsed()) return run_family(sweep_opts, "sweep-chunk", {});
  if (cmd_fp->parsed()) return run_family(fp_opts, "bench-firstprivate", {});
  if (cmd_fs->parsed()) return run_family(fs_opts, "bench-falseshare", {});
  if (cmd_het->parsed()) return run_family(het_opts, "bench-hetero", {});

  if (cmd_eg->parsed()) {
    ConfigHandle cfg;
    cvp_status st = build_config(eg_opts, cfg);
    if (st != CVP_OK) return fail(st);
    if ((st = cvp_config_set(cfg.ptr, "run.timesteps",
                             std::to_string(eg_timesteps).c_str()))) {
      return fail(st);
    }

    StringHandle series;
    int envelope_ok = 0;
    double worst = 0.0;
    if ((st = cvp_error_growth(cfg.ptr, &series.ptr, &envelope_ok, &worst))) {
      return fail(st);
    }

    RecordsHandle recs;
    if ((st = cvp_run_experiment(cfg.ptr, "error-growth", &recs.ptr))) {
      return fail(st);
    }
    StringHandle md;
    if ((st = cvp_report_markdown(recs.ptr, &md.ptr))) return fail(st);
    std::printf("%s", md.ptr);

    if (!eg_series_path.empty()) {
      FILE* f = std::fopen(eg_series_path.c_str(), "w");
      if (f == nullptr) {
        std::fprintf(stderr, "convbench: cannot write %s\n",
                     eg_series_path.c_str());
        return 2;
      }
      std::fputs(series.ptr, f);
      std::fclose(f);
      std::printf("\nseries written to %s\n", eg_series_path.c_str());
    }
    if (!eg_opts.csv_path.empty()) {
      if ((st = cvp_records_save(recs.ptr, eg_opts.csv_path.c_str()))) {
        return fail(st);
      }
    }
    if (envelope_ok == 0) {
      std::fprintf(stderr,
                   "convbench: modification left the rounding envelope "
                   "(worst ratio %.6g)\n",
                   worst);
      return 4;
    }
    return 0;
  }

  if (cmd_report->parsed()) {
    RecordsHandle recs;
    cvp_status st = cvp_records_load(report_input.c_str(), &recs.ptr);
    if (st != CVP_OK) return fail(st);
    StringHandle md;
    if ((st = cvp_report_markdown(recs.ptr, &md.ptr))) return fail(st);
    std::printf("%s", md.ptr);
    return 0;
  }

  if (cmd_ex->parsed()) {
    StringHandle md;
    cvp_status st =
        cvp_extrapolation_report(ex_seconds, ex_interval, ex_years, &md.ptr);
    if (st != CVP_OK) return fail(st);
    std::printf("%s", md.ptr);
    return 0;
  }

  return 2;
}
