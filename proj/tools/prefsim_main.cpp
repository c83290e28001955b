// prefsim: batch front-end for the prefetcher side-channel simulator.
// Subcommands: simulate, attack, sweep, perf, validate-catalog, report.
// Exit codes: 0 ok, 2 config error, 3 invariant violation, 4 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>

#include "prefsim/attacks.hpp"
#include "prefsim/catalog.hpp"
#include "prefsim/config.hpp"
#include "prefsim/engine.hpp"
#include "prefsim/perf_model.hpp"
#include "prefsim/report.hpp"
#include "prefsim/scenarios.hpp"

namespace {

using namespace prefsim;

// Only the output directory may come from the environment; everything else
// is config or flags.
std::string resolve_output(const std::string& path) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    const char* dir = std::getenv("PREFSIM_OUTPUT_DIR");
    if (dir == nullptr || *dir == '\0') return path;
    return (std::filesystem::path(dir) / p).string();
}

void write_output(const std::string& path, const std::string& content) {
    std::string resolved = resolve_output(path);
    std::filesystem::path p(resolved);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    write_file(resolved, content);
}

int cmd_attack(const std::string& config_path, std::string scenario,
               std::optional<bool> defended_flag, std::optional<int> trials_flag,
               std::optional<uint64_t> seed_flag, bool mutant,
               const std::string& report_path, const std::string& probe_path,
               const std::string& hist_path) {
    ScenarioConfig cfg;
    bool have_cfg = !config_path.empty();
    if (have_cfg) cfg = parse_config_file(config_path);
    if (!scenario.empty()) cfg.scenario_name = scenario;
    if (defended_flag) cfg.defended = *defended_flag;
    if (trials_flag) cfg.trials = *trials_flag;
    if (seed_flag) {
        cfg.seed = *seed_flag;
        cfg.has_seed = true;
    }
    if (cfg.scenario_name.empty())
        throw ConfigError("attack: no scenario given (flag or config)");
    cfg.require_seed();

    const ScenarioInfo* info = find_scenario(cfg.scenario_name);
    if (info == nullptr) throw ConfigError("unknown scenario: " + cfg.scenario_name);
    if (have_cfg && info->family != cfg.family)
        throw ConfigError("scenario " + cfg.scenario_name +
                          " requires prefetcher family " + to_string(info->family) +
                          ", config says " + to_string(cfg.family));

    LeakageReport rep;
    if (cfg.scenario_name == "smt-bypass") {
        rep = run_smt_bypass_regression(cfg.trials, cfg.seed,
                                        have_cfg ? cfg.to_attack_tuning() : AttackTuning{},
                                        mutant);
    } else if (have_cfg) {
        AttackTuning tuning = cfg.to_attack_tuning();
        if (cfg.scenario_name == "shin")
            rep = run_shin(cfg.defended, cfg.trials, cfg.seed, tuning);
        else if (cfg.scenario_name == "afterimage")
            rep = run_afterimage_v1(cfg.defended, cfg.trials, cfg.seed, tuning);
        else if (cfg.scenario_name == "sms")
            rep = run_sms(cfg.defended, cfg.trials, cfg.seed, tuning);
        else if (cfg.scenario_name == "dmp")
            rep = run_dmp(cfg.defended, cfg.trials, cfg.seed, tuning);
    } else {
        rep = info->run(cfg.defended, cfg.trials, cfg.seed);
    }

    std::printf("scenario=%s defended=%s trials=%d accuracy=%.6f chance=%.6f\n",
                rep.scenario.c_str(), rep.defended ? "true" : "false", rep.trials,
                rep.guess_accuracy, rep.chance_level);

    std::string rj = !report_path.empty() ? report_path : cfg.report_json;
    std::string pc = !probe_path.empty() ? probe_path : cfg.probe_csv;
    std::string hc = !hist_path.empty() ? hist_path : cfg.histogram_csv;
    if (!rj.empty()) write_output(rj, leakage_report_json(rep).dump() + "\n");
    if (!pc.empty()) write_output(pc, probe_csv(rep));
    if (!hc.empty()) write_output(hc, histogram_csv(rep));
    if (!cfg.requests_csv.empty())
        write_output(cfg.requests_csv, request_trace_csv(rep.request_trace));
    return 0;
}

int cmd_simulate(const std::string& config_path, std::string scenario,
                 const std::string& trace_path, const std::string& summary_path) {
    ScenarioConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    if (!scenario.empty()) cfg.scenario_name = scenario;
    if (cfg.scenario_name.empty())
        throw ConfigError("simulate: no scenario given (flag or config)");

    const SimScenario* s = find_sim_scenario(cfg.scenario_name);
    if (s == nullptr)
        throw ConfigError("unknown simulation scenario: " + cfg.scenario_name);
    Engine eng = s->build();
    eng.run();

    std::printf("scenario=%s ticks=%llu switches=%llu toggles=%llu\n",
                s->name.c_str(), (unsigned long long)eng.tick(),
                (unsigned long long)eng.switch_count(),
                (unsigned long long)eng.toggle_count());
    for (const auto& e : enable_edges(eng.events()))
        std::printf("  tick %llu: prefetcher %s (%s, task %d)\n",
                    (unsigned long long)e.tick, e.enabled ? "enabled" : "disabled",
                    to_string(e.cause).c_str(), e.tid);

    std::string tc = !trace_path.empty() ? trace_path : cfg.trace_csv;
    std::string sj = !summary_path.empty() ? summary_path : cfg.summary_json;
    if (!tc.empty()) write_output(tc, event_trace_csv(eng.events()));
    if (!sj.empty()) write_output(sj, engine_summary_json(eng).dump() + "\n");
    if (!cfg.requests_csv.empty())
        write_output(cfg.requests_csv, request_trace_csv(eng.request_trace()));
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path, int jobs_flag) {
    ScenarioConfig cfg = parse_config_file(config_path);
    if (cfg.sweep_scenarios.empty())
        throw ConfigError("sweep: [sweep] scenarios is empty");
    if (cfg.sweep_seeds.empty()) throw ConfigError("sweep: [sweep] seeds is empty");
    int jobs = jobs_flag > 0 ? jobs_flag : cfg.sweep_jobs;

    struct Cell {
        std::string scenario;
        bool defended;
        uint64_t seed;
    };
    std::vector<Cell> cells;
    std::vector<bool> defended_values;
    if (cfg.sweep_defended == "both")
        defended_values = {false, true};
    else
        defended_values = {cfg.sweep_defended == "true"};
    for (const auto& name : cfg.sweep_scenarios) {
        if (find_scenario(name) == nullptr)
            throw ConfigError("sweep: unknown scenario " + name);
        for (bool d : defended_values)
            for (uint64_t s : cfg.sweep_seeds) cells.push_back({name, d, s});
    }

    auto run_cell = [&](const Cell& c) {
        return find_scenario(c.scenario)->run(c.defended, cfg.trials, c.seed);
    };

    std::vector<LeakageReport> results(cells.size());
    if (jobs <= 1) {
        for (size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(cells[i]);
    } else {
        std::vector<std::future<LeakageReport>> futures(cells.size());
        size_t next = 0;
        while (next < cells.size()) {
            size_t batch = std::min(static_cast<size_t>(jobs), cells.size() - next);
            for (size_t j = 0; j < batch; ++j)
                futures[next + j] = std::async(std::launch::async, run_cell,
                                               cells[next + j]);
            for (size_t j = 0; j < batch; ++j)
                results[next + j] = futures[next + j].get();
            next += batch;
        }
    }

    // deterministic aggregation regardless of completion order
    std::vector<size_t> idx(cells.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        const Cell& x = cells[a];
        const Cell& y = cells[b];
        if (x.scenario != y.scenario) return x.scenario < y.scenario;
        if (x.defended != y.defended) return x.defended < y.defended;
        return x.seed < y.seed;
    });

    std::ostringstream csv;
    csv << "scenario,defended,seed,trials,accuracy\n";
    char buf[64];
    for (size_t i : idx) {
        std::snprintf(buf, sizeof buf, "%.6f", results[i].guess_accuracy);
        csv << cells[i].scenario << "," << (cells[i].defended ? 1 : 0) << ","
            << cells[i].seed << "," << cfg.trials << "," << buf << "\n";
    }
    std::string out = !out_path.empty() ? out_path : cfg.sweep_csv;
    if (out.empty())
        std::fputs(csv.str().c_str(), stdout);
    else
        write_output(out, csv.str());
    std::fprintf(stderr, "sweep: %zu cells done\n", cells.size());
    return 0;
}

int cmd_perf(const std::string& config_path, const std::string& workload_flag,
             const std::string& json_path) {
    ScenarioConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    std::string wl = !workload_flag.empty() ? workload_flag : cfg.perf_workload;

    PerfWorkload workload;
    if (wl == "streaming") workload = PerfWorkload::streaming;
    else if (wl == "pointer_chase") workload = PerfWorkload::pointer_chase;
    else if (wl == "mixed_crypto_app") workload = PerfWorkload::mixed_crypto_app;
    else throw ConfigError("perf: unknown workload '" + wl + "'");

    PerfParams params = cfg.to_perf_params();
    PerfModelResult res = perf_model_result(workload, params);
    std::printf("workload=%s enabled=%llu disabled=%llu flag_scoped=%llu "
                "critical_fraction=%.6f\n",
                res.workload.c_str(), (unsigned long long)res.cycles_enabled,
                (unsigned long long)res.cycles_disabled,
                (unsigned long long)res.cycles_flag_scoped, res.critical_fraction);
    if (!json_path.empty())
        write_output(json_path, perf_result_json(res).dump() + "\n");
    return 0;
}

int cmd_validate_catalog() {
    auto flows = attack_catalog();
    auto v = validate_catalog(flows);
    if (!v.ok) {
        for (const auto& p : v.problems)
            std::fprintf(stderr, "catalog violation: %s\n", p.c_str());
        throw InvariantViolation("attack catalog failed validation");
    }
    std::printf("%d/%d flows valid\n", v.flow_count, v.flow_count);
    for (const auto& [family, count] : v.family_counts)
        std::printf("  %s: %d\n", to_string(family).c_str(), count);
    for (const auto& [scope, count] : v.scope_counts)
        std::printf("  scope %s: %d\n", to_string(scope).c_str(), count);
    return 0;
}

// Rebuild plot-ready histogram data from a stored report.
int cmd_report(const std::string& in_path, const std::string& hist_path) {
    std::ifstream in(in_path);
    if (!in) throw IoError("cannot read report: " + in_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("report: malformed JSON: ") + e.what());
    }
    LeakageReport rep;
    rep.scenario = j.value("scenario", std::string{});
    rep.defended = j.value("defended", false);
    rep.trials = j.value("trials", 0);
    rep.correct = j.value("correct", 0);
    rep.guess_accuracy = j.value("guess_accuracy", 0.0);
    rep.chance_level = j.value("chance_level", 0.5);
    rep.seed = j.value("seed", uint64_t{0});
    if (j.contains("latency_samples"))
        for (auto& [cls, arr] : j["latency_samples"].items())
            for (auto& v : arr)
                rep.latency_samples[cls].push_back(v.get<uint64_t>());
    std::string out = histogram_csv(rep);
    if (hist_path.empty())
        std::fputs(out.c_str(), stdout);
    else
        write_output(hist_path, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"prefetcher side-channel simulator and defense testbed"};
    app.require_subcommand(1);

    // attack
    auto* attack = app.add_subcommand("attack", "run a leakage scenario");
    std::string a_config, a_scenario, a_report, a_probe, a_hist;
    bool a_defended = false, a_undefended = false, a_mutant = false;
    int a_trials = -1;
    uint64_t a_seed = 0;
    bool a_seed_set = false;
    attack->add_option("--config", a_config, "scenario config file");
    attack->add_option("--scenario", a_scenario,
                       "shin | afterimage | sms | dmp | smt-bypass");
    attack->add_flag("--defended", a_defended, "wrap the victim's critical section");
    attack->add_flag("--undefended", a_undefended, "force the unprotected baseline");
    attack->add_flag("--mutant", a_mutant,
                     "smt-bypass only: per-core enablement regression mutant");
    attack->add_option("--trials", a_trials, "number of trials");
    attack->add_option("--seed", a_seed, "64-bit run seed")
        ->each([&](const std::string&) { a_seed_set = true; });
    attack->add_option("--report", a_report, "leakage report JSON path");
    attack->add_option("--probe-csv", a_probe, "per-probe CSV path");
    attack->add_option("--histogram", a_hist, "class,latency CSV path");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a scheduler timeline");
    std::string s_config, s_scenario, s_trace, s_summary;
    simulate->add_option("--config", s_config, "scenario config file");
    simulate->add_option("--scenario", s_scenario,
                         "simple-core | shared-domain | round-robin");
    simulate->add_option("--trace", s_trace, "event trace CSV path");
    simulate->add_option("--summary", s_summary, "summary JSON path");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a grid of scenario cells");
    std::string w_config, w_out;
    int w_jobs = 0;
    sweep->add_option("--config", w_config, "config with a [sweep] section")
        ->required();
    sweep->add_option("--out", w_out, "sweep CSV path");
    sweep->add_option("--jobs", w_jobs, "parallel cells");

    // perf
    auto* perf = app.add_subcommand("perf", "run the performance cycle model");
    std::string p_config, p_workload, p_json;
    perf->add_option("--config", p_config, "scenario config file");
    perf->add_option("--workload", p_workload,
                     "streaming | pointer_chase | mixed_crypto_app");
    perf->add_option("--json", p_json, "result JSON path");

    // validate-catalog
    app.add_subcommand("validate-catalog", "check the encoded attack flows");

    // report
    auto* report = app.add_subcommand("report", "histogram data from a report JSON");
    std::string r_in, r_hist;
    report->add_option("--in", r_in, "leakage report JSON")->required();
    report->add_option("--histogram", r_hist, "output CSV (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (attack->parsed()) {
            std::optional<bool> defended;
            if (a_defended && a_undefended)
                throw ConfigError("attack: pick one of --defended/--undefended");
            if (a_defended) defended = true;
            if (a_undefended) defended = false;
            std::optional<int> trials;
            if (a_trials >= 0) trials = a_trials;
            std::optional<uint64_t> seed;
            if (a_seed_set) seed = a_seed;
            return cmd_attack(a_config, a_scenario, defended, trials, seed, a_mutant,
                              a_report, a_probe, a_hist);
        }
        if (simulate->parsed())
            return cmd_simulate(s_config, s_scenario, s_trace, s_summary);
        if (sweep->parsed()) return cmd_sweep(w_config, w_out, w_jobs);
        if (perf->parsed()) return cmd_perf(p_config, p_workload, p_json);
        if (app.get_subcommand("validate-catalog")->parsed())
            return cmd_validate_catalog();
        if (report->parsed()) return cmd_report(r_in, r_hist);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return ConfigError::exit_code;
    } catch (const InvariantViolation& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return InvariantViolation::exit_code;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return IoError::exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
