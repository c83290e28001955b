#pragma once

#include <map>
#include <string>
#include <vector>

#include "prefsim/engine.hpp"
#include "prefsim/stage.hpp"

namespace prefsim {

enum class Scope { SP, CT, CP, KU, TO };

inline std::string to_string(Scope s) {
    switch (s) {
        case Scope::SP: return "SP";
        case Scope::CT: return "CT";
        case Scope::CP: return "CP";
        case Scope::KU: return "KU";
        case Scope::TO: return "TO";
    }
    return "?";
}

// Marks whether a stage entry is backed by the per-attack prose writeups or
// inferred (NOP placements) from the flow overview, so discrepancies stay
// auditable.
enum class StageSource { prose, figure };

struct Stage {
    StageLabel label = StageLabel::nop;
    ExecContext context = ExecContext::attacker;
    StageSource source = StageSource::prose;
};

struct AttackFlow {
    std::string name;
    PrefFamily family = PrefFamily::ip_stride;
    Scope scope = Scope::CP;     // primary scope, used for counting
    std::string scope_label;     // verbatim label, e.g. "CT/CP"
    std::string target;
    std::vector<Stage> stages;
    bool executable = false;     // has a full simulation scenario
};

namespace detail {
inline Stage st(StageLabel l, ExecContext c, StageSource s = StageSource::prose) {
    return Stage{l, c, s};
}
} // namespace detail

// The 13 published prefetching side channels, one entry per attack row.
inline std::vector<AttackFlow> attack_catalog() {
    using detail::st;
    using L = StageLabel;
    using C = ExecContext;
    using S = StageSource;
    std::vector<AttackFlow> flows;

    flows.push_back({"shin", PrefFamily::ip_stride, Scope::CP, "CP", "OpenSSL ECDH",
                     {st(L::s1_prepare, C::attacker), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::victim),
                      st(L::s5_extract, C::attacker)},
                     true});

    flows.push_back({"augury-oob", PrefFamily::dmp, Scope::SP, "SP", "Custom",
                     {st(L::s1_prepare, C::attacker), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::victim),
                      st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"augury-slh", PrefFamily::dmp, Scope::SP, "SP", "Custom",
                     {st(L::nop, C::attacker, S::figure), st(L::nop, C::attacker, S::figure),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::victim),
                      st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"augury-addr", PrefFamily::dmp, Scope::SP, "SP", "-",
                     {st(L::s1_prepare, C::attacker), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::victim),
                      st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"afterimage-v1", PrefFamily::ip_stride, Scope::CP, "CT/CP", "Custom",
                     {st(L::s1_prepare, C::attacker), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::attacker), st(L::s3_train, C::victim),
                      st(L::s4_trigger, C::victim), st(L::s5_extract, C::attacker)},
                     true});

    flows.push_back({"afterimage-v2", PrefFamily::ip_stride, Scope::KU, "KU", "Custom",
                     {st(L::s1_prepare, C::attacker), st(L::nop, C::attacker, S::figure),
                      st(L::s3_train, C::attacker), st(L::s3_train, C::victim),
                      st(L::s4_trigger, C::victim), st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"afterimage-sgx", PrefFamily::ip_stride, Scope::TO, "TO", "Custom",
                     {st(L::nop, C::attacker, S::figure), st(L::nop, C::attacker, S::figure),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::victim),
                      st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"afterimage-rsa", PrefFamily::ip_stride, Scope::CT, "CT", "MbedTLS RSA",
                     {st(L::s1_prepare, C::attacker), st(L::nop, C::attacker, S::figure),
                      st(L::s3_train, C::attacker), st(L::s3_train, C::victim),
                      st(L::s4_trigger, C::attacker), st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"afterimage-sync", PrefFamily::ip_stride, Scope::CP, "CP", "OpenSSL RSA",
                     {st(L::s1_prepare, C::attacker), st(L::nop, C::attacker, S::figure),
                      st(L::s3_train, C::attacker), st(L::s3_train, C::victim),
                      st(L::s4_trigger, C::attacker), st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"xiao", PrefFamily::ip_stride, Scope::SP, "SP", "AES",
                     {st(L::s1_prepare, C::attacker), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::victim),
                      st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"fetchbench-aes", PrefFamily::sms, Scope::CP, "CP", "MbedTLS AES",
                     {st(L::s1_prepare, C::attacker), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::attacker),
                      st(L::s5_extract, C::attacker)},
                     true});

    flows.push_back({"prefetchx", PrefFamily::xpt, Scope::CP, "CP", "MbedTLS RSA, GnuPG RSA",
                     {st(L::nop, C::attacker, S::figure), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::attacker), st(L::s3_train, C::victim),
                      st(L::s4_trigger, C::attacker), st(L::s5_extract, C::attacker)},
                     false});

    flows.push_back({"gofetch", PrefFamily::dmp, Scope::CP, "CP",
                     "Go RSA, OpenSSL DHKE, CRYSTALS",
                     {st(L::s1_prepare, C::attacker), st(L::s2_reset, C::attacker),
                      st(L::s3_train, C::victim), st(L::s4_trigger, C::victim),
                      st(L::s5_extract, C::attacker)},
                     true});

    return flows;
}

// Family counts as published in the attack overview table.
inline const std::map<PrefFamily, int>& expected_family_counts() {
    static const std::map<PrefFamily, int> counts = {
        {PrefFamily::ip_stride, 7},
        {PrefFamily::dmp, 4},
        {PrefFamily::sms, 1},
        {PrefFamily::xpt, 1},
    };
    return counts;
}

inline const std::map<Scope, int>& expected_scope_counts() {
    static const std::map<Scope, int> counts = {
        {Scope::SP, 4}, {Scope::CT, 1}, {Scope::CP, 6},
        {Scope::KU, 1}, {Scope::TO, 1},
    };
    return counts;
}

struct CatalogValidation {
    bool ok = true;
    std::vector<std::string> problems;
    std::map<PrefFamily, int> family_counts;
    std::map<Scope, int> scope_counts;
    int flow_count = 0;
};

// Structural checks: every flow carries the three mandatory stages, training
// runs in the victim context, and the family/scope tallies match the
// published table.
inline CatalogValidation validate_catalog(const std::vector<AttackFlow>& flows) {
    CatalogValidation v;
    v.flow_count = static_cast<int>(flows.size());
    for (const auto& f : flows) {
        bool has_s3 = false, has_s4 = false, has_s5 = false, s3_victim = false;
        for (const auto& s : f.stages) {
            if (s.label == StageLabel::s3_train) {
                has_s3 = true;
                if (s.context == ExecContext::victim) s3_victim = true;
            }
            if (s.label == StageLabel::s4_trigger) has_s4 = true;
            if (s.label == StageLabel::s5_extract) has_s5 = true;
        }
        if (!has_s3) v.problems.push_back(f.name + ": missing S3");
        if (!has_s4) v.problems.push_back(f.name + ": missing S4");
        if (!has_s5) v.problems.push_back(f.name + ": missing S5");
        if (has_s3 && !s3_victim)
            v.problems.push_back(f.name + ": no S3 in victim context");
        if (f.scope_label.empty())
            v.problems.push_back(f.name + ": empty scope label");
        if (f.executable && f.family == PrefFamily::xpt)
            v.problems.push_back(f.name + ": xpt flows cannot be executable");
        ++v.family_counts[f.family];
        ++v.scope_counts[f.scope];
    }
    if (v.flow_count != 13)
        v.problems.push_back("catalog must hold exactly 13 flows");
    if (v.family_counts != expected_family_counts())
        v.problems.push_back("family counts do not match the published table");
    if (v.scope_counts != expected_scope_counts())
        v.problems.push_back("scope counts do not match the published table");
    v.ok = v.problems.empty();
    return v;
}

} // namespace prefsim
