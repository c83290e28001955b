#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "prefsim/attacks.hpp"
#include "prefsim/engine.hpp"
#include "prefsim/errors.hpp"
#include "prefsim/perf_model.hpp"

namespace prefsim {

// Report emitter with two fixed properties: object keys are sorted (std::map
// underneath) and doubles print with exactly six decimal places, so a rerun
// with the same seed produces byte-identical files.
class Json {
  public:
    using Array = std::vector<Json>;
    using Object = std::map<std::string, Json>;

    Json() : v_(nullptr) {}
    Json(std::nullptr_t) : v_(nullptr) {}
    Json(bool b) : v_(b) {}
    Json(int i) : v_(int64_t(i)) {}
    Json(int64_t i) : v_(i) {}
    Json(uint64_t u) : v_(u) {}
    Json(double d) : v_(d) {}
    Json(const char* s) : v_(std::string(s)) {}
    Json(std::string s) : v_(std::move(s)) {}
    Json(Array a) : v_(std::move(a)) {}
    Json(Object o) : v_(std::move(o)) {}

    std::string dump() const {
        std::ostringstream out;
        write(out);
        return out.str();
    }

  private:
    void write(std::ostringstream& out) const {
        if (std::holds_alternative<std::nullptr_t>(v_)) {
            out << "null";
        } else if (auto* b = std::get_if<bool>(&v_)) {
            out << (*b ? "true" : "false");
        } else if (auto* i = std::get_if<int64_t>(&v_)) {
            out << *i;
        } else if (auto* u = std::get_if<uint64_t>(&v_)) {
            out << *u;
        } else if (auto* d = std::get_if<double>(&v_)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", *d);
            out << buf;
        } else if (auto* s = std::get_if<std::string>(&v_)) {
            write_string(out, *s);
        } else if (auto* a = std::get_if<Array>(&v_)) {
            out << "[";
            for (size_t i = 0; i < a->size(); ++i) {
                if (i) out << ",";
                (*a)[i].write(out);
            }
            out << "]";
        } else if (auto* o = std::get_if<Object>(&v_)) {
            out << "{";
            bool first = true;
            for (const auto& [k, val] : *o) {
                if (!first) out << ",";
                first = false;
                write_string(out, k);
                out << ":";
                val.write(out);
            }
            out << "}";
        }
    }

    static void write_string(std::ostringstream& out, const std::string& s) {
        out << '"';
        for (char c : s) {
            switch (c) {
                case '"': out << "\\\""; break;
                case '\\': out << "\\\\"; break;
                case '\n': out << "\\n"; break;
                case '\t': out << "\\t"; break;
                case '\r': out << "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out << buf;
                    } else {
                        out << c;
                    }
            }
        }
        out << '"';
    }

    std::variant<std::nullptr_t, bool, int64_t, uint64_t, double, std::string,
                 Array, Object>
        v_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

inline Json leakage_report_json(const LeakageReport& r) {
    Json::Object samples;
    for (const auto& [cls, values] : r.latency_samples) {
        Json::Array arr;
        arr.reserve(values.size());
        for (uint64_t v : values) arr.emplace_back(v);
        samples[cls] = Json(std::move(arr));
    }
    Json::Object o;
    o["scenario"] = r.scenario;
    o["defended"] = r.defended;
    o["trials"] = int64_t(r.trials);
    o["correct"] = int64_t(r.correct);
    o["guess_accuracy"] = r.guess_accuracy;
    o["chance_level"] = r.chance_level;
    o["seed"] = r.seed;
    o["victim_state_mutations"] = int64_t(r.victim_state_mutations);
    o["latency_samples"] = Json(std::move(samples));
    return Json(std::move(o));
}

// (trial, line_index, latency, state) rows for external histogram tooling.
inline std::string probe_csv(const LeakageReport& r) {
    std::ostringstream o;
    o << "trial,line_index,latency,state\n";
    for (const auto& row : r.probe_rows)
        o << row.trial << "," << row.line_index << "," << row.latency << ","
          << (row.hit ? "hit" : "miss") << "\n";
    return o.str();
}

inline std::string histogram_csv(const LeakageReport& r) {
    if (r.trials <= 0) throw InvariantViolation("histogram: empty report");
    std::ostringstream o;
    o << "class,latency\n";
    for (const auto& [cls, values] : r.latency_samples)
        for (uint64_t v : values) o << cls << "," << v << "\n";
    return o.str();
}

inline std::string event_trace_csv(const std::vector<Event>& events) {
    std::ostringstream o;
    o << "tick,core,event,tid,domain,prefetcher_enabled\n";
    for (const auto& e : events)
        o << e.tick << "," << e.core << "," << to_string(e.kind) << "," << e.tid
          << "," << e.domain << "," << (e.prefetcher_enabled ? 1 : 0) << "\n";
    return o.str();
}

inline std::string request_trace_csv(const std::vector<RequestRecord>& reqs) {
    std::ostringstream o;
    o << "tick,core,task,pc,vaddr,requests_emitted\n";
    for (const auto& r : reqs)
        o << r.tick << "," << r.core << "," << r.tid << "," << r.pc << ","
          << r.vaddr << "," << r.requests_emitted << "\n";
    return o.str();
}

inline Json engine_summary_json(const Engine& eng) {
    Json::Array disabled;
    for (uint64_t d : eng.domain_disabled_ticks()) disabled.emplace_back(d);
    Json::Object o;
    o["ticks"] = eng.tick();
    o["switch_counter"] = eng.switch_count();
    o["toggle_counter"] = eng.toggle_count();
    o["per_domain_disabled_ticks"] = Json(std::move(disabled));
    return Json(std::move(o));
}

inline Json perf_result_json(const PerfModelResult& r) {
    Json::Object o;
    o["workload"] = r.workload;
    o["cycles_enabled"] = r.cycles_enabled;
    o["cycles_disabled"] = r.cycles_disabled;
    o["cycles_flag_scoped"] = r.cycles_flag_scoped;
    o["critical_fraction"] = r.critical_fraction;
    return Json(std::move(o));
}

} // namespace prefsim
