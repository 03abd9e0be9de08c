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

#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "errors.hpp"

namespace convproxy {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

long long parse_ll(const std::string& v) {
  std::size_t pos = 0;
  const long long x = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

std::uint64_t parse_u64(const std::string& v) {
  std::size_t pos = 0;
  const unsigned long long x = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true/false");
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) throw std::invalid_argument("empty list element");
    out.push_back(static_cast<int>(parse_ll(t)));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

Strategy parse_strategy(const std::string& v) {
  if (v == "static-block" || v == "static") return Strategy::StaticBlock;
  if (v == "static-cyclic") return Strategy::StaticCyclic;
  if (v == "dynamic") return Strategy::Dynamic;
  if (v == "task-per-column" || v == "task") return Strategy::TaskPerColumn;
  throw std::invalid_argument("unknown strategy");
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::StaticBlock: return "static-block";
    case Strategy::StaticCyclic: return "static-cyclic";
    case Strategy::Dynamic: return "dynamic";
    case Strategy::TaskPerColumn: return "task-per-column";
  }
  return "dynamic";
}

DataEnvMode parse_data_env(const std::string& v) {
  if (v == "copy-all") return DataEnvMode::CopyAll;
  if (v == "copy-scalars") return DataEnvMode::CopyScalarsOnly;
  if (v == "shared") return DataEnvMode::SharedArrays;
  throw std::invalid_argument("unknown data_env");
}

const char* data_env_name(DataEnvMode m) {
  switch (m) {
    case DataEnvMode::CopyAll: return "copy-all";
    case DataEnvMode::CopyScalarsOnly: return "copy-scalars";
    case DataEnvMode::SharedArrays: return "shared";
  }
  return "shared";
}

Orientation parse_orientation(const std::string& v) {
  if (v == "col-outer") return Orientation::ColumnOuter;
  if (v == "level-outer") return Orientation::LevelOuter;
  throw std::invalid_argument("unknown orientation");
}

KernelKind parse_kernel(const std::string& v) {
  if (v == "deep") return KernelKind::Deep;
  if (v == "shallow") return KernelKind::Shallow;
  throw std::invalid_argument("unknown kernel");
}

Variant parse_variant(const std::string& v) {
  if (v == "exact") return Variant::Exact;
  if (v == "strength-reduced") return Variant::StrengthReduced;
  if (v == "approx-exp") return Variant::ApproxTranscendental;
  throw std::invalid_argument("unknown variant");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Exact: return "exact";
    case Variant::StrengthReduced: return "strength-reduced";
    case Variant::ApproxTranscendental: return "approx-exp";
  }
  return "exact";
}

ExecMode parse_mode(const std::string& v) {
  if (v == "measured") return ExecMode::Measured;
  if (v == "simulated") return ExecMode::Simulated;
  throw std::invalid_argument("unknown mode");
}

struct KeyDef {
  const char* section;
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"grid", "columns",
       [](ExperimentConfig& c, const std::string& v) { c.grid.columns = parse_ll(v); },
       [](const ExperimentConfig& c) { return std::to_string(c.grid.columns); }},
      {"grid", "levels",
       [](ExperimentConfig& c, const std::string& v) { c.grid.levels = static_cast<int>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.grid.levels); }},
      {"grid", "chunk_columns",
       [](ExperimentConfig& c, const std::string& v) { c.grid.chunk_columns = parse_ll(v); },
       [](const ExperimentConfig& c) { return std::to_string(c.grid.chunk_columns); }},
      {"grid", "tropics_band",
       [](ExperimentConfig& c, const std::string& v) { c.grid.tropics_band = parse_double(v); },
       [](const ExperimentConfig& c) { return fmt_double(c.grid.tropics_band); }},
      {"grid", "seed",
       [](ExperimentConfig& c, const std::string& v) { c.grid.seed = parse_u64(v); },
       [](const ExperimentConfig& c) { return std::to_string(c.grid.seed); }},

      {"schedule", "strategy",
       [](ExperimentConfig& c, const std::string& v) { c.schedule.strategy = parse_strategy(v); },
       [](const ExperimentConfig& c) { return std::string(strategy_name(c.schedule.strategy)); }},
      {"schedule", "omp_chunk",
       [](ExperimentConfig& c, const std::string& v) { c.schedule.omp_chunk = static_cast<int>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.schedule.omp_chunk); }},
      {"schedule", "threads",
       [](ExperimentConfig& c, const std::string& v) { c.schedule.threads = static_cast<int>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.schedule.threads); }},
      {"schedule", "data_env",
       [](ExperimentConfig& c, const std::string& v) { c.schedule.data_env = parse_data_env(v); },
       [](const ExperimentConfig& c) { return std::string(data_env_name(c.schedule.data_env)); }},
      {"schedule", "workspace_bytes",
       [](ExperimentConfig& c, const std::string& v) { c.schedule.workspace_bytes = static_cast<std::size_t>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.schedule.workspace_bytes); }},

      {"layout", "orientation",
       [](ExperimentConfig& c, const std::string& v) { c.layout.orientation = parse_orientation(v); },
       [](const ExperimentConfig& c) {
         return std::string(c.layout.orientation == Orientation::ColumnOuter ? "col-outer" : "level-outer");
       }},
      {"layout", "pad",
       [](ExperimentConfig& c, const std::string& v) {
         c.layout.pad = v == "auto" ? -1 : static_cast<int>(parse_ll(v));
       },
       [](const ExperimentConfig& c) {
         return c.layout.pad < 0 ? std::string("auto") : std::to_string(c.layout.pad);
       }},

      {"hetero", "enabled",
       [](ExperimentConfig& c, const std::string& v) { c.hetero.enabled = parse_bool(v); },
       [](const ExperimentConfig& c) { return std::string(c.hetero.enabled ? "true" : "false"); }},
      {"hetero", "device_workers",
       [](ExperimentConfig& c, const std::string& v) { c.hetero.device_workers = static_cast<int>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.hetero.device_workers); }},
      {"hetero", "device_speed",
       [](ExperimentConfig& c, const std::string& v) { c.hetero.device_speed = parse_double(v); },
       [](const ExperimentConfig& c) { return fmt_double(c.hetero.device_speed); }},
      {"hetero", "f_device",
       [](ExperimentConfig& c, const std::string& v) {
         c.hetero.f_device = v == "auto" ? -1.0 : parse_double(v);
       },
       [](const ExperimentConfig& c) {
         return c.hetero.f_device < 0.0 ? std::string("auto") : fmt_double(c.hetero.f_device);
       }},
      {"hetero", "setup_s",
       [](ExperimentConfig& c, const std::string& v) { c.hetero.transfer.setup_s = parse_double(v); },
       [](const ExperimentConfig& c) { return fmt_double(c.hetero.transfer.setup_s); }},
      {"hetero", "bandwidth_bps",
       [](ExperimentConfig& c, const std::string& v) { c.hetero.transfer.bandwidth_Bps = parse_double(v); },
       [](const ExperimentConfig& c) { return fmt_double(c.hetero.transfer.bandwidth_Bps); }},
      {"hetero", "resident_scalars",
       [](ExperimentConfig& c, const std::string& v) { c.hetero.transfer.resident_scalars = parse_bool(v); },
       [](const ExperimentConfig& c) { return std::string(c.hetero.transfer.resident_scalars ? "true" : "false"); }},
      {"hetero", "persistent_buffers",
       [](ExperimentConfig& c, const std::string& v) { c.hetero.transfer.persistent_buffers = parse_bool(v); },
       [](const ExperimentConfig& c) { return std::string(c.hetero.transfer.persistent_buffers ? "true" : "false"); }},

      {"run", "kernel",
       [](ExperimentConfig& c, const std::string& v) { c.run.kernel = parse_kernel(v); },
       [](const ExperimentConfig& c) { return std::string(c.run.kernel == KernelKind::Deep ? "deep" : "shallow"); }},
      {"run", "variant",
       [](ExperimentConfig& c, const std::string& v) { c.run.variant = parse_variant(v); },
       [](const ExperimentConfig& c) { return std::string(variant_name(c.run.variant)); }},
      {"run", "timesteps",
       [](ExperimentConfig& c, const std::string& v) { c.run.timesteps = static_cast<int>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.run.timesteps); }},
      {"run", "repetitions",
       [](ExperimentConfig& c, const std::string& v) { c.run.repetitions = static_cast<int>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.run.repetitions); }},
      {"run", "mode",
       [](ExperimentConfig& c, const std::string& v) { c.run.mode = parse_mode(v); },
       [](const ExperimentConfig& c) { return std::string(c.run.mode == ExecMode::Measured ? "measured" : "simulated"); }},
      {"run", "activity_threshold",
       [](ExperimentConfig& c, const std::string& v) { c.run.activity_threshold = parse_double(v); },
       [](const ExperimentConfig& c) { return fmt_double(c.run.activity_threshold); }},
      {"run", "grab_overhead_units",
       [](ExperimentConfig& c, const std::string& v) { c.run.grab_overhead_units = parse_double(v); },
       [](const ExperimentConfig& c) { return fmt_double(c.run.grab_overhead_units); }},
      {"run", "falseshare_rounds",
       [](ExperimentConfig& c, const std::string& v) { c.run.falseshare_rounds = static_cast<int>(parse_ll(v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.run.falseshare_rounds); }},

      {"sweep", "chunk_sizes",
       [](ExperimentConfig& c, const std::string& v) { c.sweep.chunk_sizes = parse_int_list(v); },
       [](const ExperimentConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.sweep.chunk_sizes.size(); ++i) {
           if (i) out += ',';
           out += std::to_string(c.sweep.chunk_sizes[i]);
         }
         return out;
       }},
  };
  return table;
}

void apply_key(ExperimentConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value, int line) {
  for (const KeyDef& def : key_table()) {
    if (section == def.section && key == def.key) {
      try {
        def.set(cfg, value);
      } catch (const std::exception& e) {
        throw ConfigError("[" + section + "] " + key + ": bad value '" +
                              value + "' (" + e.what() + ")",
                          line, key);
      }
      return;
    }
  }
  throw ConfigError("unknown key [" + section + "] " + key, line, key);
}

bool known_section(const std::string& s) {
  for (const KeyDef& def : key_table()) {
    if (s == def.section) return true;
  }
  return false;
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.grid.columns < 1) fail("[grid] columns must be >= 1");
  if (c.grid.levels < 1) fail("[grid] levels must be >= 1");
  if (c.grid.chunk_columns < 0) fail("[grid] chunk_columns must be >= 0");
  if (!(c.grid.tropics_band >= 0.0 && c.grid.tropics_band <= 1.0)) {
    fail("[grid] tropics_band must be in [0, 1]");
  }
  if (c.schedule.omp_chunk < 1) fail("[schedule] omp_chunk must be >= 1");
  if (c.schedule.threads < 1) fail("[schedule] threads must be >= 1");
  if (c.layout.pad < -1) fail("[layout] pad must be 'auto' or >= 0");
  if (c.hetero.device_workers < 1) fail("[hetero] device_workers must be >= 1");
  if (!(c.hetero.device_speed > 0.0)) fail("[hetero] device_speed must be > 0");
  if (c.hetero.f_device > 1.0) fail("[hetero] f_device must be 'auto' or in [0, 1]");
  if (c.hetero.transfer.setup_s < 0.0) fail("[hetero] setup_s must be >= 0");
  if (!(c.hetero.transfer.bandwidth_Bps > 0.0)) fail("[hetero] bandwidth_bps must be > 0");
  if (c.run.timesteps < 1) fail("[run] timesteps must be >= 1");
  if (c.run.repetitions < 1) fail("[run] repetitions must be >= 1");
  if (c.run.falseshare_rounds < 1) fail("[run] falseshare_rounds must be >= 1");
  for (int s : c.sweep.chunk_sizes) {
    if (s < 1) fail("[sweep] chunk_sizes entries must be >= 1");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto cut = raw.find_first_of("#;");
    std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("unterminated section header", lineno);
      }
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) {
        throw ConfigError("unknown section [" + section + "]", lineno, section);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value'", lineno);
    }
    if (section.empty()) {
      throw ConfigError("key outside any section", lineno);
    }
    apply_key(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)),
              lineno);
  }
  validate_config(cfg);
  return cfg;
}

void set_config_value(ExperimentConfig& cfg, const std::string& dotted_key,
                      const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) {
    throw ConfigError("expected 'section.key': " + dotted_key, -1, dotted_key);
  }
  apply_key(cfg, dotted_key.substr(0, dot), dotted_key.substr(dot + 1), value,
            -1);
  validate_config(cfg);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string current;
  for (const KeyDef& def : key_table()) {
    if (current != def.section) {
      if (!current.empty()) out += '\n';
      current = def.section;
      out += '[';
      out += current;
      out += "]\n";
    }
    out += def.key;
    out += " = ";
    out += def.get(cfg);
    out += '\n';
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon = serialize_config(cfg);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

KernelFn config_kernel(const ExperimentConfig& cfg) {
  return cfg.run.kernel == KernelKind::Deep ? deep_column : shallow_column;
}

KernelOptions config_kernel_options(const ExperimentConfig& cfg) {
  KernelOptions o;
  o.variant = cfg.run.variant;
  o.activity_threshold = cfg.run.activity_threshold;
  return o;
}

ScheduleSpec config_schedule(const ExperimentConfig& cfg) {
  ScheduleSpec s;
  s.strategy = cfg.schedule.strategy;
  s.omp_chunk_size = cfg.schedule.omp_chunk;
  s.n_threads = cfg.schedule.threads;
  s.data_env.mode = cfg.schedule.data_env;
  s.data_env.workspace_bytes = cfg.schedule.workspace_bytes;
  return s;
}

GridSpec config_grid(const ExperimentConfig& cfg) {
  GridSpec g;
  g.n_columns = cfg.grid.columns;
  g.n_levels = cfg.grid.levels;
  g.tropics_band = cfg.grid.tropics_band;
  g.seed = cfg.grid.seed;
  return g;
}

PoolProfile config_host_pool(const ExperimentConfig& cfg) {
  PoolProfile p;
  p.name = "host";
  p.n_workers = cfg.schedule.threads;
  p.speed_factor = 1.0;
  return p;
}

PoolProfile config_device_pool(const ExperimentConfig& cfg) {
  PoolProfile p;
  p.name = "device";
  p.n_workers = cfg.hetero.device_workers;
  p.speed_factor = cfg.hetero.device_speed;
  return p;
}

}  // namespace convproxy
