#pragma once

// Brute-force reference for the stride automaton, written as a straight
// transcription of its rules: tag = low 8 pc bits; a tag miss allocates
// (evicting the least recently touched entry when full); the first hit
// learns the stride and counts as a match; a matching delta bumps
// confidence, a mismatch rewrites the stride and drops confidence; requests
// go to vaddr + k*stride once post-update confidence reaches the threshold.
// Structurally independent of the production table (map keyed by tag,
// victim found by scanning touch times).

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace prefsim_test {

class ReferenceStride {
  public:
    ReferenceStride(int capacity, int threshold, int conf_max, int degree,
                    int line_size)
        : capacity_(capacity), threshold_(threshold), conf_max_(conf_max),
          degree_(degree), line_size_(line_size) {}

    std::vector<uint64_t> observe(uint64_t pc, uint64_t vaddr) {
        ++clock_;
        int tag = static_cast<int>(pc & 0xFF);
        auto it = table_.find(tag);
        if (it == table_.end()) {
            if (static_cast<int>(table_.size()) == capacity_) {
                auto victim = table_.begin();
                for (auto jt = table_.begin(); jt != table_.end(); ++jt)
                    if (jt->second.touched < victim->second.touched) victim = jt;
                table_.erase(victim);
            }
            table_[tag] = Entry{vaddr, std::nullopt, 0, clock_};
            return {};
        }
        Entry& e = it->second;
        int64_t delta = int64_t(vaddr) - int64_t(e.last);
        bool match = !e.stride.has_value() || *e.stride == delta;
        e.stride = delta;
        if (match)
            e.conf = e.conf + 1 > conf_max_ ? conf_max_ : e.conf + 1;
        else
            e.conf = e.conf > 0 ? e.conf - 1 : 0;
        e.last = vaddr;
        e.touched = clock_;

        std::vector<uint64_t> out;
        if (e.conf >= threshold_ && *e.stride != 0) {
            for (int k = 1; k <= degree_; ++k) {
                uint64_t target = uint64_t(int64_t(vaddr) + *e.stride * k);
                if (target / uint64_t(line_size_) != vaddr / uint64_t(line_size_))
                    out.push_back(target);
            }
        }
        return out;
    }

  private:
    struct Entry {
        uint64_t last = 0;
        std::optional<int64_t> stride;
        int conf = 0;
        uint64_t touched = 0;
    };

    int capacity_, threshold_, conf_max_, degree_, line_size_;
    std::map<int, Entry> table_;
    uint64_t clock_ = 0;
};

} // namespace prefsim_test
