#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace prefsim::stats {

// log(n choose k) via lgamma, exact enough for n in the thousands.
inline double log_choose(int64_t n, int64_t k) {
    return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
           std::lgamma(double(n - k) + 1.0);
}

inline double binomial_pmf(int64_t k, int64_t n, double p) {
    if (k < 0 || k > n) return 0.0;
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    double lp = log_choose(n, k) + double(k) * std::log(p) +
                double(n - k) * std::log1p(-p);
    return std::exp(lp);
}

// P(X <= k) for X ~ Binomial(n, p).
inline double binomial_cdf(int64_t k, int64_t n, double p) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    double acc = 0.0;
    for (int64_t i = 0; i <= k; ++i) acc += binomial_pmf(i, n, p);
    return std::min(acc, 1.0);
}

// Two-sided exact test (tail-doubling convention): small p-value means the
// observed count is implausible under Binomial(n, p0).
inline double binomial_two_sided_pvalue(int64_t k, int64_t n, double p0) {
    double lo = binomial_cdf(k, n, p0);
    double hi = 1.0 - binomial_cdf(k - 1, n, p0);
    return std::min(1.0, 2.0 * std::min(lo, hi));
}

// True when `correct` out of `trials` is consistent with chance level p0 at
// significance alpha (default 0.01, i.e. the 99% acceptance region).
inline bool within_chance(int64_t correct, int64_t trials, double p0,
                          double alpha = 0.01) {
    return binomial_two_sided_pvalue(correct, trials, p0) >= alpha;
}

} // namespace prefsim::stats
