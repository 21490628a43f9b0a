// Copyright 2026 The repchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "repchain/core.hpp"
#include "repchain/simulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace repchain::cli {

/// Bad configuration text or option value. line() is 0 when the value came
/// from the command line.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(int line, std::string key, const std::string &message);
    int line() const { return line_; }
    const std::string &key() const { return key_; }

  private:
    int line_;
    std::string key_;
};

/// Hardware section, in the units of its key names.
struct HardwareConfig {
    double e_b = 0.5;
    double e_s = 0.5;
    double e_m = 0.9;
    double e_d = 0.8;
    double alpha_db_per_km = 0.2;
    double v_km_per_s = 2.0e5;
    double tau_mem_ms = std::numeric_limits<double>::infinity();

    HardwareParams to_params() const;
    bool operator==(const HardwareConfig &) const = default;
};

/// Everything a run can be configured with. Grammar, one `key = value` per
/// line under `[section]` headers, `#` starts a comment line:
///
///   [hardware]  e_b e_s e_m e_d alpha_db_per_km v_km_per_s tau_mem_ms
///   [run]       seed threads fast_forward target_successes max_time_s model_mu_repetitions
///   [rate]      protocol length_km repeaters
///   [sweep]     protocol lengths_km repeaters tau_mem_ms   (comma-separated lists)
///   [mu]        n_min n_max p1 repetitions
///   [trace]     successes
///   [output]    path trace_path verbosity
///
/// Reals accept `inf`. Unknown sections or keys and repeated keys are errors.
struct RunConfig {
    HardwareConfig hardware;

    std::uint64_t seed = 1;
    unsigned threads = 1;  ///< 0 picks the hardware concurrency
    bool fast_forward = true;
    std::uint64_t target_successes = 10'000;
    double max_time_s = 1'000.0;
    std::uint64_t model_mu_repetitions = analytics::kDefaultMuRepetitions;

    simulation::Protocol rate_protocol = simulation::Protocol::synchronous;
    double rate_length_km = 50.0;
    int rate_repeaters = 0;

    simulation::Protocol sweep_protocol = simulation::Protocol::synchronous;
    std::vector<double> sweep_lengths_km{1.0, 10.0, 50.0, 100.0};
    std::vector<int> sweep_repeaters{0};
    std::vector<double> sweep_tau_mem_ms{std::numeric_limits<double>::infinity()};

    int mu_n_min = 1;
    int mu_n_max = 8;
    double mu_p1 = 1e-3;
    std::uint64_t mu_repetitions = analytics::kDefaultMuRepetitions;

    std::uint64_t trace_successes = 1;

    std::string output_path;  ///< empty writes to stdout
    std::string trace_path;
    int verbosity = 0;

    /// Throws ConfigError for out-of-range values.
    void validate() const;
    simulation::StopSpec stop() const { return {target_successes, max_time_s}; }
    simulation::SweepSpec sweep_spec() const;

    bool operator==(const RunConfig &) const = default;
};

RunConfig parse_config(std::string_view text);
/// Throws ConfigError (line 0) if the file cannot be read.
RunConfig load_config(const std::string &path);
std::string serialize_config(const RunConfig &config);

/// Shortest decimal that parses back to exactly `x`; `inf`, `-inf`, `nan`.
std::string format_real(double x);

inline constexpr std::string_view kCsvHeader =
    "L_km,r,tau_mem_s,protocol,rate_sim_per_s,rate_sim_stderr,rate_model_per_s,rel_dev,mean_dt_s,successes,seed";

void write_csv(const simulation::SweepResult &result, std::ostream &out);
/// Throws std::runtime_error on I/O failure.
void emit_csv(const simulation::SweepResult &result, const std::string &path);

/// "3", "1..8" or "1,2,4". Throws ConfigError.
std::vector<int> parse_int_range(std::string_view text);

/// Command-line entry point. Returns 0 on success, 2 on a configuration or
/// usage error, 1 on a runtime failure.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace repchain::cli
