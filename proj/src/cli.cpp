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

#include "repchain/cli.hpp"

#include "repchain/analytics.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace repchain::cli {

ConfigError::ConfigError(int line, std::string key, const std::string &message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + key + ": " + message
                                  : key + ": " + message),
      line_(line),
      key_(std::move(key)) {}

HardwareParams HardwareConfig::to_params() const {
    HardwareParams p;
    p.e_b = e_b;
    p.e_s = e_s;
    p.e_m = e_m;
    p.e_d = e_d;
    p.alpha_db_per_km = alpha_db_per_km;
    p.v_km_per_s = v_km_per_s;
    p.tau_mem_s = std::isinf(tau_mem_ms) ? tau_mem_ms : tau_mem_ms / 1e3;
    return p;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(trim(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

// Parse errors carry the key; the caller adds the line.
struct ValueError {
    std::string message;
};

double to_real(std::string_view s) {
    double x = 0.0;
    const auto *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, x);
    if (s.empty() || ec != std::errc{} || ptr != end || std::isnan(x)) {
        throw ValueError{"expected a real number, got '" + std::string(s) + "'"};
    }
    return x;
}

template <class Int>
Int to_int(std::string_view s) {
    Int x{};
    const auto *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, x);
    if (s.empty() || ec != std::errc{} || ptr != end) {
        throw ValueError{"expected an integer, got '" + std::string(s) + "'"};
    }
    return x;
}

bool to_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ValueError{"expected true or false, got '" + std::string(s) + "'"};
}

simulation::Protocol to_protocol(std::string_view s) {
    if (auto p = simulation::parse_protocol(s)) return *p;
    throw ValueError{"expected synchronous or independent, got '" + std::string(s) + "'"};
}

template <class T, class F>
std::vector<T> to_list(std::string_view s, F convert) {
    std::vector<T> out;
    for (auto item : split_list(s)) out.push_back(convert(item));
    return out;
}

std::string join_reals(const std::vector<double> &xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_real(xs[i]);
    return out;
}

std::string join_ints(const std::vector<int> &xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + std::to_string(xs[i]);
    return out;
}

struct Key {
    std::function<void(RunConfig &, std::string_view)> set;
    std::function<std::string(const RunConfig &)> get;
};

using KeyTable = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>>;

#define REAL(field) Key{[](RunConfig &c, std::string_view v) { c.field = to_real(v); }, \
                        [](const RunConfig &c) { return format_real(c.field); }}
#define UINT(field) Key{[](RunConfig &c, std::string_view v) { c.field = to_int<std::uint64_t>(v); }, \
                        [](const RunConfig &c) { return std::to_string(c.field); }}
#define INT(field) Key{[](RunConfig &c, std::string_view v) { c.field = to_int<int>(v); }, \
                       [](const RunConfig &c) { return std::to_string(c.field); }}
#define PROTOCOL(field) Key{[](RunConfig &c, std::string_view v) { c.field = to_protocol(v); }, \
                            [](const RunConfig &c) { return std::string(simulation::to_string(c.field)); }}
#define TEXT(field) Key{[](RunConfig &c, std::string_view v) { c.field = std::string(v); }, \
                        [](const RunConfig &c) { return c.field; }}

const KeyTable &key_table() {
    static const KeyTable table{
        {"hardware",
         {{"e_b", REAL(hardware.e_b)},
          {"e_s", REAL(hardware.e_s)},
          {"e_m", REAL(hardware.e_m)},
          {"e_d", REAL(hardware.e_d)},
          {"alpha_db_per_km", REAL(hardware.alpha_db_per_km)},
          {"v_km_per_s", REAL(hardware.v_km_per_s)},
          {"tau_mem_ms", REAL(hardware.tau_mem_ms)}}},
        {"run",
         {{"seed", UINT(seed)},
          {"threads", Key{[](RunConfig &c, std::string_view v) { c.threads = to_int<unsigned>(v); },
                          [](const RunConfig &c) { return std::to_string(c.threads); }}},
          {"fast_forward", Key{[](RunConfig &c, std::string_view v) { c.fast_forward = to_bool(v); },
                               [](const RunConfig &c) { return std::string(c.fast_forward ? "true" : "false"); }}},
          {"target_successes", UINT(target_successes)},
          {"max_time_s", REAL(max_time_s)},
          {"model_mu_repetitions", UINT(model_mu_repetitions)}}},
        {"rate", {{"protocol", PROTOCOL(rate_protocol)}, {"length_km", REAL(rate_length_km)}, {"repeaters", INT(rate_repeaters)}}},
        {"sweep",
         {{"protocol", PROTOCOL(sweep_protocol)},
          {"lengths_km", Key{[](RunConfig &c, std::string_view v) { c.sweep_lengths_km = to_list<double>(v, to_real); },
                             [](const RunConfig &c) { return join_reals(c.sweep_lengths_km); }}},
          {"repeaters", Key{[](RunConfig &c, std::string_view v) { c.sweep_repeaters = to_list<int>(v, to_int<int>); },
                            [](const RunConfig &c) { return join_ints(c.sweep_repeaters); }}},
          {"tau_mem_ms", Key{[](RunConfig &c, std::string_view v) { c.sweep_tau_mem_ms = to_list<double>(v, to_real); },
                             [](const RunConfig &c) { return join_reals(c.sweep_tau_mem_ms); }}}}},
        {"mu", {{"n_min", INT(mu_n_min)}, {"n_max", INT(mu_n_max)}, {"p1", REAL(mu_p1)}, {"repetitions", UINT(mu_repetitions)}}},
        {"trace", {{"successes", UINT(trace_successes)}}},
        {"output", {{"path", TEXT(output_path)}, {"trace_path", TEXT(trace_path)}, {"verbosity", INT(verbosity)}}},
    };
    return table;
}

#undef REAL
#undef UINT
#undef INT
#undef PROTOCOL
#undef TEXT

const Key *find_key(std::string_view section, std::string_view key) {
    for (const auto &[name, keys] : key_table()) {
        if (name != section) continue;
        for (const auto &[k, entry] : keys) {
            if (k == key) return &entry;
        }
    }
    return nullptr;
}

bool known_section(std::string_view section) {
    for (const auto &entry : key_table()) {
        if (entry.first == section) return true;
    }
    return false;
}

void check(bool ok, const char *key, const std::string &message) {
    if (!ok) throw ConfigError(0, key, message);
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void RunConfig::validate() const {
    const auto &h = hardware;
    check(probability(h.e_b), "e_b", "must lie in [0, 1]");
    check(probability(h.e_s), "e_s", "must lie in [0, 1]");
    check(probability(h.e_m), "e_m", "must lie in [0, 1]");
    check(probability(h.e_d), "e_d", "must lie in [0, 1]");
    check(h.alpha_db_per_km >= 0.0 && std::isfinite(h.alpha_db_per_km), "alpha_db_per_km", "must be finite and >= 0");
    check(h.v_km_per_s > 0.0 && std::isfinite(h.v_km_per_s), "v_km_per_s", "must be finite and > 0");
    check(h.tau_mem_ms > 0.0, "tau_mem_ms", "must be > 0 or inf");
    check(target_successes > 0 || std::isfinite(max_time_s), "target_successes",
          "needs a success target or a finite max_time_s");
    check(max_time_s > 0.0 && max_time_s < 9.0e6, "max_time_s", "must lie in (0, 9e6) s or be inf");
    check(model_mu_repetitions > 0, "model_mu_repetitions", "must be > 0");
    check(rate_length_km > 0.0 && std::isfinite(rate_length_km), "length_km", "must be finite and > 0");
    check(rate_repeaters >= 0, "repeaters", "must be >= 0");
    check(!sweep_lengths_km.empty(), "lengths_km", "needs at least one value");
    for (double len : sweep_lengths_km) check(len > 0.0 && std::isfinite(len), "lengths_km", "values must be finite and > 0");
    check(!sweep_repeaters.empty(), "repeaters", "needs at least one value");
    for (int r : sweep_repeaters) check(r >= 0, "repeaters", "values must be >= 0");
    check(!sweep_tau_mem_ms.empty(), "tau_mem_ms", "needs at least one value");
    for (double tau : sweep_tau_mem_ms) check(tau > 0.0, "tau_mem_ms", "values must be > 0 or inf");
    check(mu_n_min >= 1 && mu_n_max >= mu_n_min, "n_min", "need 1 <= n_min <= n_max");
    check(mu_p1 > 0.0 && mu_p1 <= 1.0, "p1", "must lie in (0, 1]");
    check(mu_repetitions > 0, "repetitions", "must be > 0");
    check(trace_successes > 0, "successes", "must be > 0");
    check(verbosity >= 0, "verbosity", "must be >= 0");
}

simulation::SweepSpec RunConfig::sweep_spec() const {
    simulation::SweepSpec spec;
    spec.lengths_km = sweep_lengths_km;
    spec.repeaters = sweep_repeaters;
    for (double tau_ms : sweep_tau_mem_ms) {
        spec.tau_mem_s.push_back(std::isinf(tau_ms) ? tau_ms : tau_ms / 1e3);
    }
    spec.protocol = sweep_protocol;
    spec.stop = stop();
    spec.master_seed = seed;
    spec.params = hardware.to_params();
    spec.fast_forward = fast_forward;
    spec.mu_repetitions = model_mu_repetitions;
    spec.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    return spec;
}

RunConfig parse_config(std::string_view text) {
    RunConfig config;
    std::string section;
    std::set<std::pair<std::string, std::string>> seen;
    int line_no = 0;
    while (!text.empty() || line_no == 0) {
        ++line_no;
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.empty() || line.front() == '#') {
            if (text.empty()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, std::string(line), "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_section(section)) throw ConfigError(line_no, section, "unknown section");
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError(line_no, std::string(line), "expected key = value");
            const auto key = std::string(trim(line.substr(0, eq)));
            const auto value = trim(line.substr(eq + 1));
            if (section.empty()) throw ConfigError(line_no, key, "key outside of any [section]");
            const auto *entry = find_key(section, key);
            if (entry == nullptr) throw ConfigError(line_no, key, "unknown key in [" + section + "]");
            if (!seen.emplace(section, key).second) throw ConfigError(line_no, key, "repeated key");
            try {
                entry->set(config, value);
            } catch (const ValueError &e) {
                throw ConfigError(line_no, key, e.message);
            }
        }
        if (text.empty()) break;
    }
    return config;
}

RunConfig load_config(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, path, "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig &config) {
    std::string out;
    for (const auto &[section, keys] : key_table()) {
        if (!out.empty()) out += '\n';
        out += '[' + section + "]\n";
        for (const auto &[key, entry] : keys) {
            const auto value = entry.get(config);
            out += key + (value.empty() ? " =" : " = ") + value + '\n';
        }
    }
    return out;
}

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

void write_csv(const simulation::SweepResult &result, std::ostream &out) {
    out << kCsvHeader << '\n';
    for (const auto &p : result.points) {
        out << format_real(p.length_km) << ',' << p.repeaters << ',' << format_real(p.tau_mem_s) << ','
            << simulation::to_string(p.protocol) << ',' << format_real(p.rate_sim_per_s) << ','
            << format_real(p.rate_sim_stderr) << ',' << format_real(p.rate_model_per_s) << ','
            << format_real(p.rel_dev) << ',' << format_real(p.mean_dt_s) << ',' << p.successes << ',' << p.seed
            << '\n';
    }
}

void emit_csv(const simulation::SweepResult &result, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(result, out);
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<int> parse_int_range(std::string_view text) {
    try {
        text = trim(text);
        if (const auto dots = text.find(".."); dots != std::string_view::npos) {
            const int lo = to_int<int>(trim(text.substr(0, dots)));
            const int hi = to_int<int>(trim(text.substr(dots + 2)));
            if (hi < lo) throw ValueError{"empty range"};
            std::vector<int> out;
            for (int n = lo; n <= hi; ++n) out.push_back(n);
            return out;
        }
        return to_list<int>(text, to_int<int>);
    } catch (const ValueError &e) {
        throw ConfigError(0, "n", e.message);
    }
}

namespace {

// Value of a command-line override, applied after the config file.
struct Override {
    std::string value;
    CLI::Option *option = nullptr;
    bool given() const { return option != nullptr && option->count() > 0; }
};

template <class F>
void apply(const Override &o, const char *key, F set) {
    if (!o.given()) return;
    try {
        set(o.value);
    } catch (const ValueError &e) {
        throw ConfigError(0, key, e.message);
    }
}

// Writes to --out when given, otherwise to `fallback`.
class Sink {
  public:
    Sink(const std::string &path, std::ostream &fallback) : out_(&fallback), path_(path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw std::runtime_error("cannot open '" + path + "' for writing");
            out_ = &file_;
        }
    }
    std::ostream &stream() { return *out_; }
    void finish() {
        out_->flush();
        if (!*out_) throw std::runtime_error("write to '" + (path_.empty() ? std::string("stdout") : path_) + "' failed");
    }

  private:
    std::ofstream file_;
    std::ostream *out_;
    std::string path_;
};

void print_zero_reason(const simulation::SweepPoint &p, std::ostream &err) {
    if (p.error) {
        err << "point L_km=" << format_real(p.length_km) << " r=" << p.repeaters << " failed: " << *p.error << '\n';
    } else if (p.successes == 0) {
        err << "point L_km=" << format_real(p.length_km) << " r=" << p.repeaters
            << ": zero successes (" << simulation::to_string(p.zero_reason)
            << "); rate_sim_stderr holds the 95% upper bound\n";
    }
}

int run_sweep_command(const simulation::SweepSpec &spec, const RunConfig &config, std::ostream &out,
                      std::ostream &err) {
    const auto result = simulation::run_sweep(spec);
    Sink sink(config.output_path, out);
    write_csv(result, sink.stream());
    sink.finish();
    bool failed = false;
    for (const auto &p : result.points) {
        if (config.verbosity > 0 || p.error || p.successes == 0) print_zero_reason(p, err);
        failed = failed || p.error.has_value();
    }
    return failed ? 1 : 0;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Entanglement distribution over a quantum repeater chain", "repchain"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    Override seed, threads, out_path, e_b, e_s, e_m, e_d, alpha, v, tau;
    int verbose = 0;
    app.add_option("--config", config_path, "Configuration file");
    seed.option = app.add_option("--seed", seed.value, "Master seed");
    threads.option = app.add_option("--threads", threads.value, "Sweep worker threads (0 = all cores)");
    out_path.option = app.add_option("--out", out_path.value, "Output file (default stdout)");
    e_b.option = app.add_option("--e-b", e_b.value, "Heralding success probability");
    e_s.option = app.add_option("--e-s", e_s.value, "Swap success probability");
    e_m.option = app.add_option("--e-m", e_m.value, "Memory efficiency");
    e_d.option = app.add_option("--e-d", e_d.value, "Detector efficiency");
    alpha.option = app.add_option("--alpha-db-per-km", alpha.value, "Fiber attenuation");
    v.option = app.add_option("--v-km-per-s", v.value, "Signal velocity");
    tau.option = app.add_option("--tau-mem-ms", tau.value, "Memory lifetime in ms, or inf");
    app.add_flag("-v,--verbose", verbose, "More diagnostics on stderr");

    Override protocol, length, repeaters;
    struct StopFlags {
        Override successes, max_time;
    } rate_stop, sweep_stop;
    bool exact = false;
    auto add_point = [&](CLI::App *sub) {
        protocol.option = sub->add_option("--protocol", protocol.value, "synchronous | independent");
        length.option = sub->add_option("--L-km", length.value, "End-to-end distance");
        repeaters.option = sub->add_option("--r", repeaters.value, "Number of repeaters");
    };
    auto add_stop = [&](CLI::App *sub, StopFlags &flags) {
        flags.successes.option =
            sub->add_option("--successes", flags.successes.value, "Success target (0 = time limit only)");
        flags.max_time.option = sub->add_option("--max-time-s", flags.max_time.value, "Simulated time limit");
        sub->add_flag("--exact", exact, "Simulate every attempt instead of fast-forwarding failures");
    };

    auto *rate_cmd = app.add_subcommand("rate", "Simulate one (L, r) point and print a CSV row");
    add_point(rate_cmd);
    add_stop(rate_cmd, rate_stop);

    auto *sweep_cmd = app.add_subcommand("sweep", "Simulate a grid of points and write CSV");
    Override lengths, repeaters_list, taus;
    lengths.option = sweep_cmd->add_option("--lengths-km", lengths.value, "Comma-separated distances");
    repeaters_list.option = sweep_cmd->add_option("--repeaters", repeaters_list.value, "Comma-separated r values");
    taus.option = sweep_cmd->add_option("--tau-mem-ms-list", taus.value, "Comma-separated memory lifetimes");
    Override sweep_protocol;
    sweep_protocol.option = sweep_cmd->add_option("--protocol", sweep_protocol.value, "synchronous | independent");
    add_stop(sweep_cmd, sweep_stop);

    auto *mu_cmd = app.add_subcommand("mu", "Monte Carlo estimate of the normalized max of N geometric counts");
    Override mu_n, mu_p1, mu_reps;
    mu_n.option = mu_cmd->add_option("--n", mu_n.value, "N values: 4, 1..8 or 1,2,4");
    mu_p1.option = mu_cmd->add_option("--p1", mu_p1.value, "Per-attempt success probability");
    mu_reps.option = mu_cmd->add_option("--reps", mu_reps.value, "Repetitions per N");

    auto *analytic_cmd = app.add_subcommand("analytic", "Evaluate a closed-form model");
    std::string model;
    std::string mu_method = "mc";
    Override a_length, a_repeaters, a_reps;
    analytic_cmd->add_option("--model", model, "p-single | no-repeater | synchronous | independent | dt")
        ->required()
        ->check(CLI::IsMember({"p-single", "no-repeater", "synchronous", "independent", "dt"}));
    a_length.option = analytic_cmd->add_option("--L-km", a_length.value, "Distance (link length for p-single)");
    a_repeaters.option = analytic_cmd->add_option("--r", a_repeaters.value, "Number of repeaters");
    analytic_cmd->add_option("--mu", mu_method, "mc | sqrt")->check(CLI::IsMember({"mc", "sqrt"}));
    a_reps.option = analytic_cmd->add_option("--reps", a_reps.value, "Monte Carlo repetitions for mu");

    auto *trace_cmd = app.add_subcommand("trace", "Print the event trace of one trial");
    Override trace_protocol, trace_length, trace_repeaters, trace_successes;
    trace_protocol.option = trace_cmd->add_option("--protocol", trace_protocol.value, "synchronous | independent");
    trace_length.option = trace_cmd->add_option("--L-km", trace_length.value, "End-to-end distance");
    trace_repeaters.option = trace_cmd->add_option("--r", trace_repeaters.value, "Number of repeaters");
    trace_successes.option = trace_cmd->add_option("--successes", trace_successes.value, "Successes to trace");
    trace_cmd->add_flag("--exact", exact, "Simulate every attempt instead of fast-forwarding failures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    RunConfig config;
    try {
        if (!config_path.empty()) config = load_config(config_path);
        apply(seed, "seed", [&](auto s) { config.seed = to_int<std::uint64_t>(s); });
        apply(threads, "threads", [&](auto s) { config.threads = to_int<unsigned>(s); });
        apply(out_path, "out", [&](auto s) { config.output_path = s; });
        apply(e_b, "e_b", [&](auto s) { config.hardware.e_b = to_real(s); });
        apply(e_s, "e_s", [&](auto s) { config.hardware.e_s = to_real(s); });
        apply(e_m, "e_m", [&](auto s) { config.hardware.e_m = to_real(s); });
        apply(e_d, "e_d", [&](auto s) { config.hardware.e_d = to_real(s); });
        apply(alpha, "alpha_db_per_km", [&](auto s) { config.hardware.alpha_db_per_km = to_real(s); });
        apply(v, "v_km_per_s", [&](auto s) { config.hardware.v_km_per_s = to_real(s); });
        apply(tau, "tau_mem_ms", [&](auto s) { config.hardware.tau_mem_ms = to_real(s); });
        config.verbosity += verbose;
        if (exact) config.fast_forward = false;
        for (const auto *flags : {&rate_stop, &sweep_stop}) {
            apply(flags->successes, "target_successes",
                  [&](auto s) { config.target_successes = to_int<std::uint64_t>(s); });
            apply(flags->max_time, "max_time_s", [&](auto s) { config.max_time_s = to_real(s); });
        }
        apply(protocol, "protocol", [&](auto s) { config.rate_protocol = to_protocol(s); });
        apply(length, "length_km", [&](auto s) { config.rate_length_km = to_real(s); });
        apply(repeaters, "repeaters", [&](auto s) { config.rate_repeaters = to_int<int>(s); });
        apply(sweep_protocol, "protocol", [&](auto s) { config.sweep_protocol = to_protocol(s); });
        apply(lengths, "lengths_km", [&](auto s) { config.sweep_lengths_km = to_list<double>(s, to_real); });
        apply(repeaters_list, "repeaters", [&](auto s) { config.sweep_repeaters = to_list<int>(s, to_int<int>); });
        apply(taus, "tau_mem_ms", [&](auto s) { config.sweep_tau_mem_ms = to_list<double>(s, to_real); });
        apply(mu_p1, "p1", [&](auto s) { config.mu_p1 = to_real(s); });
        apply(mu_reps, "repetitions", [&](auto s) { config.mu_repetitions = to_int<std::uint64_t>(s); });
        apply(trace_protocol, "protocol", [&](auto s) { config.rate_protocol = to_protocol(s); });
        apply(trace_length, "length_km", [&](auto s) { config.rate_length_km = to_real(s); });
        apply(trace_repeaters, "repeaters", [&](auto s) { config.rate_repeaters = to_int<int>(s); });
        apply(trace_successes, "successes", [&](auto s) { config.trace_successes = to_int<std::uint64_t>(s); });
        if (mu_n.given()) {
            const auto ns = parse_int_range(mu_n.value);
            config.mu_n_min = ns.front();
            config.mu_n_max = ns.back();
        }
        config.validate();
    } catch (const ConfigError &e) {
        err << "repchain: config error: " << e.what() << '\n';
        return 2;
    }

    try {
        const auto params = config.hardware.to_params();
        if (*rate_cmd) {
            simulation::SweepSpec spec = config.sweep_spec();
            spec.protocol = config.rate_protocol;
            spec.lengths_km = {config.rate_length_km};
            spec.repeaters = {config.rate_repeaters};
            spec.tau_mem_s = {params.tau_mem_s};
            return run_sweep_command(spec, config, out, err);
        }
        if (*sweep_cmd) {
            return run_sweep_command(config.sweep_spec(), config, out, err);
        }
        if (*mu_cmd) {
            Sink sink(config.output_path, out);
            auto &os = sink.stream();
            os << "N,mu,mu_over_sqrtN,stddev,repetitions\n";
            std::vector<int> ns;
            if (mu_n.given()) {
                ns = parse_int_range(mu_n.value);
            } else {
                for (int n = config.mu_n_min; n <= config.mu_n_max; ++n) ns.push_back(n);
            }
            for (int n : ns) {
                const auto est = analytics::estimate_mu(n, config.mu_p1, config.mu_repetitions, config.seed);
                os << n << ',' << format_real(est.mean_normalized) << ','
                   << format_real(est.mean_normalized / std::sqrt(static_cast<double>(n))) << ','
                   << format_real(est.stddev_normalized) << ',' << est.repetitions << '\n';
            }
            sink.finish();
            return 0;
        }
        if (*analytic_cmd) {
            const double len = a_length.given() ? to_real(a_length.value) : config.rate_length_km;
            const int r = a_repeaters.given() ? to_int<int>(a_repeaters.value) : config.rate_repeaters;
            const analytics::MuOptions mu{
                mu_method == "sqrt" ? analytics::MuMethod::sqrt_approx : analytics::MuMethod::monte_carlo,
                a_reps.given() ? to_int<std::uint64_t>(a_reps.value) : config.model_mu_repetitions, config.seed};
            double value = 0.0;
            if (model == "p-single") {
                value = analytics::p_single(params, len);
            } else if (model == "no-repeater") {
                value = analytics::rate_no_repeater(params, len);
            } else if (model == "synchronous") {
                value = analytics::rate_synchronous(params, len, r);
            } else if (model == "independent") {
                value = analytics::rate_independent(params, len, r, mu);
            } else {
                value = analytics::oldest_memory_age(params, len, r, mu);
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.10g", value);
            out << buf << '\n';
            return 0;
        }
        // trace
        const auto chain = simulation::build_chain(config.rate_length_km, config.rate_repeaters, params);
        Sink sink(config.trace_path.empty() ? config.output_path : config.trace_path, out);
        simulation::StopSpec stop{config.trace_successes, config.max_time_s};
        const auto m = simulation::measure_rate(chain, config.rate_protocol, stop, config.seed,
                                                simulation::MeasureOptions{config.fast_forward, {}, &sink.stream()});
        sink.finish();
        if (m.stats.end_to_end_successes == 0) {
            err << "repchain: no success within " << format_real(config.max_time_s) << " s ("
                << simulation::to_string(m.zero_reason) << ")\n";
        }
        return 0;
    } catch (const ValueError &e) {
        err << "repchain: config error: " << e.message << '\n';
        return 2;
    } catch (const ConfigError &e) {
        err << "repchain: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        err << "repchain: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace repchain::cli
