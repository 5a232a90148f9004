#pragma once

#include <string>
#include <vector>

namespace covrl {

enum class WilcoxonMethod {
    Auto,    // exact when n+m <= 20, normal approximation beyond
    Exact,   // full enumeration of C(n+m, n) rank assignments, mid-ranks for ties
    Normal,  // tie-corrected variance, continuity correction
};

// Two-sided rank-sum (Mann-Whitney) p-value in (0, 1]. Samples where every
// value is identical are degenerate and report 1.
double wilcoxon_rank_sum(const std::vector<double>& x, const std::vector<double>& y,
                         WilcoxonMethod method = WilcoxonMethod::Auto);

enum class EffectMagnitude { Negligible, Small, Medium, Large };

std::string to_string(EffectMagnitude m);

struct EffectSize {
    double a_hat = 0.5;
    EffectMagnitude magnitude = EffectMagnitude::Negligible;
};

// Vargha-Delaney A-hat: P(x > y) + 0.5 P(x = y); magnitude from the standard
// thresholds on |A - 0.5| (0.06 / 0.14 / 0.21).
EffectSize vargha_delaney(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace covrl
