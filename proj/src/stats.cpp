#include "covrl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace covrl {

std::string to_string(EffectMagnitude m) {
    switch (m) {
        case EffectMagnitude::Negligible: return "negligible";
        case EffectMagnitude::Small: return "small";
        case EffectMagnitude::Medium: return "medium";
        case EffectMagnitude::Large: return "large";
    }
    return "negligible";
}

namespace {

void check_sample(const std::vector<double>& v, const char* name) {
    if (v.empty()) throw std::invalid_argument(std::string(name) + " sample is empty");
    for (double d : v)
        if (!std::isfinite(d))
            throw std::invalid_argument(std::string(name) + " sample has non-finite values");
}

// Mid-ranks of the pooled sample, doubled so they stay integral under ties.
std::vector<int64_t> doubled_midranks(std::vector<double> pooled, const std::vector<double>& x,
                                      int64_t& x_rank_sum2) {
    std::vector<size_t> order(pooled.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return pooled[a] < pooled[b]; });

    std::vector<int64_t> rank2(pooled.size());
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        // average rank of positions i..j (1-based), doubled: (i+1 + j+1)
        int64_t r2 = static_cast<int64_t>(i + 1 + j + 1);
        for (size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
        i = j + 1;
    }

    x_rank_sum2 = 0;
    for (size_t k = 0; k < x.size(); ++k) x_rank_sum2 += rank2[k];
    return rank2;
}

// Counts subsets of size n whose doubled-rank sum is <= / >= the observed one.
struct ExactCounts {
    uint64_t le = 0, ge = 0, total = 0;
};

void enumerate_subsets(const std::vector<int64_t>& rank2, size_t pick, size_t from,
                       int64_t partial, int64_t observed, ExactCounts& counts) {
    if (pick == 0) {
        ++counts.total;
        if (partial <= observed) ++counts.le;
        if (partial >= observed) ++counts.ge;
        return;
    }
    for (size_t i = from; i + pick <= rank2.size(); ++i)
        enumerate_subsets(rank2, pick - 1, i + 1, partial + rank2[i], observed, counts);
}

double normal_two_sided(double t, double mu, double var) {
    if (var <= 0.0) return 1.0;
    double z = t - mu;
    // continuity correction toward the mean
    if (z > 0.5)
        z -= 0.5;
    else if (z < -0.5)
        z += 0.5;
    else
        z = 0.0;
    double p = std::erfc(std::abs(z) / std::sqrt(2.0 * var));
    return std::min(1.0, std::max(p, 1e-300));
}

}  // namespace

double wilcoxon_rank_sum(const std::vector<double>& x, const std::vector<double>& y,
                         WilcoxonMethod method) {
    check_sample(x, "x");
    check_sample(y, "y");
    const size_t n = x.size(), m = y.size(), N = n + m;

    std::vector<double> pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    int64_t t_obs2 = 0;
    std::vector<int64_t> rank2 = doubled_midranks(pooled, x, t_obs2);

    const bool exact = method == WilcoxonMethod::Exact ||
                       (method == WilcoxonMethod::Auto && N <= 20);
    if (exact) {
        ExactCounts counts;
        enumerate_subsets(rank2, n, 0, 0, t_obs2, counts);
        uint64_t tail = std::min(counts.le, counts.ge);
        double p = 2.0 * static_cast<double>(tail) / static_cast<double>(counts.total);
        return std::min(1.0, std::max(p, 1e-300));
    }

    // Normal approximation with tie-corrected variance.
    const double t = static_cast<double>(t_obs2) / 2.0;
    const double mu = static_cast<double>(n) * (N + 1) / 2.0;
    double tie_term = 0.0;
    {
        std::vector<double> sorted = pooled;
        std::sort(sorted.begin(), sorted.end());
        size_t i = 0;
        while (i < sorted.size()) {
            size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            double ties = static_cast<double>(j - i + 1);
            tie_term += ties * ties * ties - ties;
            i = j + 1;
        }
    }
    const double nm = static_cast<double>(n) * static_cast<double>(m);
    const double var =
        nm / 12.0 * (static_cast<double>(N + 1) -
                     tie_term / (static_cast<double>(N) * (static_cast<double>(N) - 1.0)));
    return normal_two_sided(t, mu, var);
}

EffectSize vargha_delaney(const std::vector<double>& x, const std::vector<double>& y) {
    check_sample(x, "x");
    check_sample(y, "y");
    uint64_t greater = 0, equal = 0;
    for (double xi : x)
        for (double yj : y) {
            if (xi > yj)
                ++greater;
            else if (xi == yj)
                ++equal;
        }
    const double a_hat = static_cast<double>(2 * greater + equal) /
                         (2.0 * static_cast<double>(x.size()) * static_cast<double>(y.size()));
    const double d = std::abs(a_hat - 0.5);
    EffectMagnitude mag = d < 0.06   ? EffectMagnitude::Negligible
                          : d < 0.14 ? EffectMagnitude::Small
                          : d < 0.21 ? EffectMagnitude::Medium
                                     : EffectMagnitude::Large;
    return {a_hat, mag};
}

}  // namespace covrl
