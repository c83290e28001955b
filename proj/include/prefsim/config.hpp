#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "prefsim/attacks.hpp"
#include "prefsim/engine.hpp"
#include "prefsim/errors.hpp"
#include "prefsim/perf_model.hpp"

namespace prefsim {

// Flat key=value scenario file with bracketed section headers. '#' starts a
// comment. All keys have defaults except [scenario] seed, which run paths
// require explicitly.
struct ScenarioConfig {
    // [topology]
    int physical_cores = 1;
    int smt_ways = 1;
    DomainGranularity granularity = DomainGranularity::per_physical_core;

    // [cache]
    CacheGeometry cache;
    double noise_flush_rate = 0.0;

    // [prefetcher]
    PrefFamily family = PrefFamily::ip_stride;
    int stride_capacity = 16;
    int stride_confidence_threshold = 2;
    int stride_confidence_max = 3;
    int stride_degree = 1;
    int sms_region_size = 1024;
    int sms_capacity = 16;
    std::vector<std::pair<uint64_t, uint64_t>> dmp_ranges;
    int dmp_history_depth = 1;
    int dmp_word_size = 8;
    bool clear_on_disable = false;

    // [scheduler]
    int quantum = 16;
    EnablementPolicy policy = EnablementPolicy::domain_wide;
    bool clear_prefetcher_on_switch = false;

    // [scenario]
    std::string scenario_name;
    bool defended = false;
    int trials = 1000;
    uint64_t seed = 0;
    bool has_seed = false;

    // [perf]
    std::string perf_workload = "streaming";
    int perf_access_count = 10000;
    int perf_phases = 10;
    double perf_critical_fraction = 0.1;
    uint64_t perf_syscall_cost = 430;

    // [sweep]
    std::vector<std::string> sweep_scenarios;
    std::vector<uint64_t> sweep_seeds;
    std::string sweep_defended = "both"; // true | false | both
    int sweep_jobs = 1;

    // [output]
    std::string report_json;
    std::string probe_csv;
    std::string histogram_csv;
    std::string trace_csv;
    std::string summary_json;
    std::string requests_csv;
    std::string sweep_csv;

    bool operator==(const ScenarioConfig&) const = default;

    EngineConfig to_engine_config() const {
        EngineConfig e;
        e.physical_cores = physical_cores;
        e.smt_ways = smt_ways;
        e.granularity = granularity;
        e.cache = cache;
        e.noise_flush_rate = noise_flush_rate;
        e.noise_seed = seed ? seed : 1;
        e.prefetcher.family = family;
        e.prefetcher.stride = stride_config();
        e.prefetcher.sms = sms_config();
        e.prefetcher.dmp = dmp_config();
        e.scheduler.quantum = quantum;
        e.scheduler.policy = policy;
        e.scheduler.clear_prefetcher_on_switch = clear_prefetcher_on_switch;
        return e;
    }

    StrideConfig stride_config() const {
        StrideConfig s;
        s.capacity = stride_capacity;
        s.confidence_threshold = stride_confidence_threshold;
        s.confidence_max = stride_confidence_max;
        s.degree = stride_degree;
        s.line_size = cache.line_size;
        s.clear_on_disable = clear_on_disable;
        return s;
    }

    SmsConfig sms_config() const {
        SmsConfig s;
        s.region_size = sms_region_size;
        s.line_size = cache.line_size;
        s.capacity = sms_capacity;
        s.clear_on_disable = clear_on_disable;
        return s;
    }

    DmpConfig dmp_config() const {
        DmpConfig d;
        d.valid_ranges = dmp_ranges;
        d.history_depth = dmp_history_depth;
        d.word_size = dmp_word_size;
        d.line_size = cache.line_size;
        d.clear_on_disable = clear_on_disable;
        return d;
    }

    AttackTuning to_attack_tuning() const {
        AttackTuning t;
        t.cache = cache;
        t.stride = stride_config();
        t.sms = sms_config();
        t.dmp = dmp_config();
        t.quantum = 1000;
        return t;
    }

    PerfParams to_perf_params() const {
        PerfParams p;
        p.access_count = perf_access_count;
        p.phases = perf_phases;
        p.critical_fraction = perf_critical_fraction;
        p.syscall_cost = perf_syscall_cost;
        p.seed = seed ? seed : 1;
        p.cache = cache;
        p.stride = stride_config();
        return p;
    }

    void require_seed() const {
        if (!has_seed)
            throw ConfigError("config: [scenario] seed is mandatory");
    }
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        uint64_t r = std::stoull(v, &pos, 0);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

inline int parse_int(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        long r = std::stol(v, &pos, 0);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(r);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad bool for " + key + ": '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

} // namespace cfgdetail

inline ScenarioConfig parse_config(const std::string& text) {
    using namespace cfgdetail;
    ScenarioConfig c;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section at line " +
                                  std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " +
                              std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        std::string qual = section + "." + key;

        if (qual == "topology.physical_cores") c.physical_cores = parse_int(val, qual);
        else if (qual == "topology.smt_ways") c.smt_ways = parse_int(val, qual);
        else if (qual == "topology.domain_granularity") {
            if (val == "per_physical_core") c.granularity = DomainGranularity::per_physical_core;
            else if (val == "global") c.granularity = DomainGranularity::global;
            else throw ConfigError("config: unknown granularity '" + val + "'");
        }
        else if (qual == "cache.sets") c.cache.sets = parse_int(val, qual);
        else if (qual == "cache.ways") c.cache.ways = parse_int(val, qual);
        else if (qual == "cache.line_size") c.cache.line_size = parse_int(val, qual);
        else if (qual == "cache.latency_hit") c.cache.latency_hit = parse_u64(val, qual);
        else if (qual == "cache.latency_miss") c.cache.latency_miss = parse_u64(val, qual);
        else if (qual == "cache.noise_flush_rate") c.noise_flush_rate = parse_double(val, qual);
        else if (qual == "prefetcher.family") {
            if (val == "ip_stride") c.family = PrefFamily::ip_stride;
            else if (val == "sms") c.family = PrefFamily::sms;
            else if (val == "dmp") c.family = PrefFamily::dmp;
            else if (val == "xpt") c.family = PrefFamily::xpt;
            else throw ConfigError("config: unknown prefetcher family '" + val + "'");
        }
        else if (qual == "prefetcher.stride_capacity") c.stride_capacity = parse_int(val, qual);
        else if (qual == "prefetcher.stride_confidence_threshold") c.stride_confidence_threshold = parse_int(val, qual);
        else if (qual == "prefetcher.stride_confidence_max") c.stride_confidence_max = parse_int(val, qual);
        else if (qual == "prefetcher.stride_degree") c.stride_degree = parse_int(val, qual);
        else if (qual == "prefetcher.sms_region_size") c.sms_region_size = parse_int(val, qual);
        else if (qual == "prefetcher.sms_capacity") c.sms_capacity = parse_int(val, qual);
        else if (qual == "prefetcher.dmp_history_depth") c.dmp_history_depth = parse_int(val, qual);
        else if (qual == "prefetcher.dmp_word_size") c.dmp_word_size = parse_int(val, qual);
        else if (qual == "prefetcher.clear_on_disable") c.clear_on_disable = parse_bool(val, qual);
        else if (qual == "prefetcher.dmp_ranges") {
            c.dmp_ranges.clear();
            for (const auto& part : split(val, ',')) {
                if (part.empty()) continue;
                size_t dash = part.find('-');
                if (dash == std::string::npos)
                    throw ConfigError("config: dmp_ranges wants lo-hi pairs");
                c.dmp_ranges.emplace_back(parse_u64(trim(part.substr(0, dash)), qual),
                                          parse_u64(trim(part.substr(dash + 1)), qual));
            }
        }
        else if (qual == "scheduler.quantum") c.quantum = parse_int(val, qual);
        else if (qual == "scheduler.enablement_policy") {
            if (val == "domain_wide") c.policy = EnablementPolicy::domain_wide;
            else if (val == "per_core_broken") c.policy = EnablementPolicy::per_core_broken;
            else throw ConfigError("config: unknown enablement policy '" + val + "'");
        }
        else if (qual == "scheduler.clear_prefetcher_on_switch") c.clear_prefetcher_on_switch = parse_bool(val, qual);
        else if (qual == "scenario.name") c.scenario_name = val;
        else if (qual == "scenario.defended") c.defended = parse_bool(val, qual);
        else if (qual == "scenario.trials") c.trials = parse_int(val, qual);
        else if (qual == "scenario.seed") { c.seed = parse_u64(val, qual); c.has_seed = true; }
        else if (qual == "perf.workload") c.perf_workload = val;
        else if (qual == "perf.access_count") c.perf_access_count = parse_int(val, qual);
        else if (qual == "perf.phases") c.perf_phases = parse_int(val, qual);
        else if (qual == "perf.critical_fraction") c.perf_critical_fraction = parse_double(val, qual);
        else if (qual == "perf.syscall_cost") c.perf_syscall_cost = parse_u64(val, qual);
        else if (qual == "sweep.scenarios") c.sweep_scenarios = split(val, ',');
        else if (qual == "sweep.seeds") {
            c.sweep_seeds.clear();
            for (const auto& part : split(val, ','))
                if (!part.empty()) c.sweep_seeds.push_back(parse_u64(part, qual));
        }
        else if (qual == "sweep.defended") {
            if (val != "true" && val != "false" && val != "both")
                throw ConfigError("config: sweep.defended must be true|false|both");
            c.sweep_defended = val;
        }
        else if (qual == "sweep.jobs") c.sweep_jobs = parse_int(val, qual);
        else if (qual == "output.report_json") c.report_json = val;
        else if (qual == "output.probe_csv") c.probe_csv = val;
        else if (qual == "output.histogram_csv") c.histogram_csv = val;
        else if (qual == "output.trace_csv") c.trace_csv = val;
        else if (qual == "output.summary_json") c.summary_json = val;
        else if (qual == "output.requests_csv") c.requests_csv = val;
        else if (qual == "output.sweep_csv") c.sweep_csv = val;
        else throw ConfigError("config: unknown key '" + qual + "' at line " +
                               std::to_string(lineno));
    }
    return c;
}

inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline std::string serialize_config(const ScenarioConfig& c) {
    std::ostringstream o;
    o << "[topology]\n";
    o << "physical_cores = " << c.physical_cores << "\n";
    o << "smt_ways = " << c.smt_ways << "\n";
    o << "domain_granularity = "
      << (c.granularity == DomainGranularity::global ? "global" : "per_physical_core")
      << "\n\n";
    o << "[cache]\n";
    o << "sets = " << c.cache.sets << "\n";
    o << "ways = " << c.cache.ways << "\n";
    o << "line_size = " << c.cache.line_size << "\n";
    o << "latency_hit = " << c.cache.latency_hit << "\n";
    o << "latency_miss = " << c.cache.latency_miss << "\n";
    o << "noise_flush_rate = " << c.noise_flush_rate << "\n\n";
    o << "[prefetcher]\n";
    o << "family = " << to_string(c.family) << "\n";
    o << "stride_capacity = " << c.stride_capacity << "\n";
    o << "stride_confidence_threshold = " << c.stride_confidence_threshold << "\n";
    o << "stride_confidence_max = " << c.stride_confidence_max << "\n";
    o << "stride_degree = " << c.stride_degree << "\n";
    o << "sms_region_size = " << c.sms_region_size << "\n";
    o << "sms_capacity = " << c.sms_capacity << "\n";
    if (!c.dmp_ranges.empty()) {
        o << "dmp_ranges = ";
        for (size_t i = 0; i < c.dmp_ranges.size(); ++i) {
            if (i) o << ",";
            o << "0x" << std::hex << c.dmp_ranges[i].first << "-0x"
              << c.dmp_ranges[i].second << std::dec;
        }
        o << "\n";
    }
    o << "dmp_history_depth = " << c.dmp_history_depth << "\n";
    o << "dmp_word_size = " << c.dmp_word_size << "\n";
    o << "clear_on_disable = " << (c.clear_on_disable ? "true" : "false") << "\n\n";
    o << "[scheduler]\n";
    o << "quantum = " << c.quantum << "\n";
    o << "enablement_policy = "
      << (c.policy == EnablementPolicy::per_core_broken ? "per_core_broken"
                                                        : "domain_wide")
      << "\n";
    o << "clear_prefetcher_on_switch = "
      << (c.clear_prefetcher_on_switch ? "true" : "false") << "\n\n";
    o << "[scenario]\n";
    if (!c.scenario_name.empty()) o << "name = " << c.scenario_name << "\n";
    o << "defended = " << (c.defended ? "true" : "false") << "\n";
    o << "trials = " << c.trials << "\n";
    if (c.has_seed) o << "seed = " << c.seed << "\n";
    o << "\n[perf]\n";
    o << "workload = " << c.perf_workload << "\n";
    o << "access_count = " << c.perf_access_count << "\n";
    o << "phases = " << c.perf_phases << "\n";
    o << "critical_fraction = " << c.perf_critical_fraction << "\n";
    o << "syscall_cost = " << c.perf_syscall_cost << "\n";
    if (!c.sweep_scenarios.empty() || !c.sweep_seeds.empty()) {
        o << "\n[sweep]\n";
        if (!c.sweep_scenarios.empty()) {
            o << "scenarios = ";
            for (size_t i = 0; i < c.sweep_scenarios.size(); ++i) {
                if (i) o << ",";
                o << c.sweep_scenarios[i];
            }
            o << "\n";
        }
        if (!c.sweep_seeds.empty()) {
            o << "seeds = ";
            for (size_t i = 0; i < c.sweep_seeds.size(); ++i) {
                if (i) o << ",";
                o << c.sweep_seeds[i];
            }
            o << "\n";
        }
        o << "defended = " << c.sweep_defended << "\n";
        o << "jobs = " << c.sweep_jobs << "\n";
    }
    o << "\n[output]\n";
    if (!c.report_json.empty()) o << "report_json = " << c.report_json << "\n";
    if (!c.probe_csv.empty()) o << "probe_csv = " << c.probe_csv << "\n";
    if (!c.histogram_csv.empty()) o << "histogram_csv = " << c.histogram_csv << "\n";
    if (!c.trace_csv.empty()) o << "trace_csv = " << c.trace_csv << "\n";
    if (!c.summary_json.empty()) o << "summary_json = " << c.summary_json << "\n";
    if (!c.requests_csv.empty()) o << "requests_csv = " << c.requests_csv << "\n";
    if (!c.sweep_csv.empty()) o << "sweep_csv = " << c.sweep_csv << "\n";
    return o.str();
}

} // namespace prefsim
