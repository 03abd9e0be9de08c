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

#include <stdexcept>
#include <string>

namespace convproxy {

// Numeric failure inside a column kernel (non-convergence, NaN input, ...).
// Carries the column so a parallel run can abort with the offending id.
class KernelError : public std::runtime_error {
public:
  KernelError(const std::string& what, long long column, int level = -1)
      : std::runtime_error(what), column_(column), level_(level) {}
  long long column() const noexcept { return column_; }
  int level() const noexcept { return level_; }

private:
  long long column_;
  int level_;
};

// Config-file problem: unknown key, bad value, malformed line.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, int line = -1, std::string key = {})
      : std::runtime_error(what), line_(line), key_(std::move(key)) {}
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

private:
  int line_;
  std::string key_;
};

// Throughput calibration produced an unusable rate (zero/negative).
class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Packed-buffer manifest does not describe its payload.
class PackError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Validation-run failure, e.g. NaN divergence at a known timestep.
class ValidationError : public std::runtime_error {
public:
  ValidationError(const std::string& what, int timestep = -1)
      : std::runtime_error(what), timestep_(timestep) {}
  int timestep() const noexcept { return timestep_; }

private:
  int timestep_;
};

}  // namespace convproxy
