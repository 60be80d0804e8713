#pragma once

// Core domain types shared by every design: observed-count tables, the
// candidate grid of scaled treatment effects, test-count ledgers, confidence
// results, and the monotone binary-search inversion skeleton.
//
// Conventions used throughout the library:
//  * Outcomes and assignments are binary.  n_yz counts units with outcome y
//    under assignment z, so n11 + n01 units were treated and n10 + n00 were
//    controls.
//  * Candidate average treatment effects tau0 are represented by integer
//    numerators over the common denominator n: the grid of achievable
//    effects is exactly {(S - n1 + j)/n : j = 0..n} where S = n11 - n10 and
//    n1 = n11 + n01.
//  * All accept/reject decisions compare a floating-point tail probability
//    against an exact rational alpha via double_ge_frac (no epsilon fudge).

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "randci/fraction.hpp"

namespace randci {

enum class Design { balanced_bernoulli, matched_pairs, general_bernoulli };

/// Observed 2x2 table of a Bernoulli-assignment experiment.
struct ObservedCounts {
    long long n11 = 0;  ///< outcome 1, treated
    long long n01 = 0;  ///< outcome 0, treated
    long long n10 = 0;  ///< outcome 1, control
    long long n00 = 0;  ///< outcome 0, control

    long long n() const { return n11 + n01 + n10 + n00; }
    long long n_treated() const { return n11 + n01; }
    long long n_control() const { return n10 + n00; }
};

inline void validate_counts(const ObservedCounts& c) {
    if (c.n11 < 0 || c.n01 < 0 || c.n10 < 0 || c.n00 < 0)
        throw std::invalid_argument("counts must be non-negative");
    if (c.n() == 0) throw std::invalid_argument("no units");
}

/// Tallies unit-level (y, z) records into an ObservedCounts table.
inline ObservedCounts counts_from_units(const std::vector<std::pair<int, int>>& yz) {
    if (yz.empty()) throw std::invalid_argument("no units");
    ObservedCounts c;
    for (const auto& [y, z] : yz) {
        if ((y != 0 && y != 1) || (z != 0 && z != 1))
            throw std::invalid_argument("unit outcomes and assignments must be 0/1");
        if (z == 1)
            ++(y == 1 ? c.n11 : c.n01);
        else
            ++(y == 1 ? c.n10 : c.n00);
    }
    return c;
}

/// The n+1 consecutive integer numerators of achievable effects tau0 = t/n.
struct CandidateGrid {
    long long base = 0;  ///< smallest numerator
    long long n = 0;     ///< common denominator (number of units)

    long long size() const { return n + 1; }
    long long numerator(long long j) const { return base + j; }
    bool contains(long long t) const { return t >= base && t <= base + n; }
};

inline CandidateGrid candidate_grid(const ObservedCounts& c) {
    validate_counts(c);
    return CandidateGrid{(c.n11 - c.n10) - c.n_treated(), c.n()};
}

/// Threshold value/scale for two-sided tails, kept as an exact ratio so that
/// lattice-membership checks are integer comparisons.
struct ScaledThreshold {
    long long value = 0;  ///< non-negative numerator
    long long scale = 1;  ///< positive denominator
};

/// Plain snapshot of test counts.
struct LedgerCounts {
    std::uint64_t tail_evaluations = 0;
    std::uint64_t pmax_evaluations = 0;
};

/// Thread-safe tally of randomization-test work.
///
/// tail_evaluations counts two-sided tail probabilities obtained from a
/// freshly built PMF (each one is "one randomization test" in the complexity
/// accounting); for the general Bernoulli path, tails recomputed after an
/// O(1)-per-step incremental PMF update are deliberately *not* counted, so
/// the ledger tracks the number of from-scratch tests the algorithm needs.
/// pmax_evaluations counts distinct candidates whose p_max was computed.
struct TestLedger {
    std::atomic<std::uint64_t> tail_evaluations{0};
    std::atomic<std::uint64_t> pmax_evaluations{0};

    void add_tail(std::uint64_t k = 1) {
        tail_evaluations.fetch_add(k, std::memory_order_relaxed);
    }
    void add_pmax(std::uint64_t k = 1) {
        pmax_evaluations.fetch_add(k, std::memory_order_relaxed);
    }
    void add(const LedgerCounts& c) {
        add_tail(c.tail_evaluations);
        add_pmax(c.pmax_evaluations);
    }
    LedgerCounts counts() const {
        return LedgerCounts{tail_evaluations.load(std::memory_order_relaxed),
                            pmax_evaluations.load(std::memory_order_relaxed)};
    }
};

/// A confidence set over the candidate grid: the accepted numerators (sorted,
/// possibly empty) over the common denominator.
struct ConfidenceResult {
    std::vector<long long> accepted;  ///< sorted numerators of accepted tau0
    long long denominator = 1;        ///< the common denominator n
    Frac alpha{1, 20};
    LedgerCounts ledger;

    bool empty() const { return accepted.empty(); }
    long long lo_numerator() const {
        if (empty()) throw std::logic_error("empty confidence set has no endpoints");
        return accepted.front();
    }
    long long hi_numerator() const {
        if (empty()) throw std::logic_error("empty confidence set has no endpoints");
        return accepted.back();
    }
    Frac lower() const { return make_frac(lo_numerator(), denominator); }
    Frac upper() const { return make_frac(hi_numerator(), denominator); }
    /// Interval width max - min in effect units (0 for singletons).
    double width() const {
        return static_cast<double>(hi_numerator() - lo_numerator()) /
               static_cast<double>(denominator);
    }
};

/// Horvitz-Thompson estimate of the ATE under assignment probability u/q:
/// (1/n) * (n11/p - n10/(1-p)), returned exactly.
inline Frac ht_observed(const ObservedCounts& c, long long u, long long q) {
    validate_counts(c);
    if (u <= 0 || q <= u) throw std::invalid_argument("assignment probability must be in (0,1)");
    // (1/n)(n11 q/u - n10 q/(q-u)) = q((q-u) n11 - u n10) / (n u (q-u))
    const __int128 num = static_cast<__int128>(q) *
                         ((q - u) * static_cast<__int128>(c.n11) -
                          u * static_cast<__int128>(c.n10));
    const __int128 den = static_cast<__int128>(c.n()) * u * (q - u);
    return make_frac(num, den);
}

/// Scaled distance |T_obs - tau0| between the observed statistic and a
/// candidate, expressed as a ScaledThreshold on the lattice of the centered
/// statistic for the balanced design: the centered statistic lives on the
/// half-integer lattice, and the threshold equals |2(n11-n10) - t| / 2.
inline ScaledThreshold scaled_delta_balanced(const ObservedCounts& c, long long t) {
    if (!candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    return ScaledThreshold{std::llabs(2 * (c.n11 - c.n10) - t), 2};
}

/// Same distance for the general Bernoulli(u/q) design, scaled by
/// s = u(q-u) so the statistic lattice is integral:
/// |q((q-u) n11 - u n10) - t u(q-u)| / s.
inline ScaledThreshold scaled_delta_general(const ObservedCounts& c, long long t,
                                            long long u, long long q) {
    if (!candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    if (u <= 0 || q <= u) throw std::invalid_argument("assignment probability must be in (0,1)");
    const long long s = u * (q - u);
    const long long stat = q * ((q - u) * c.n11 - u * c.n10);
    return ScaledThreshold{std::llabs(stat - t * s), s};
}

inline void validate_alpha(const Frac& alpha) {
    if (alpha <= Frac{0, 1} || alpha >= Frac{1, 1})
        throw std::invalid_argument("alpha must lie strictly between 0 and 1");
}

/// Inverts a staircase-shaped p_max over the grid {base..base+n}/n with
/// O(log n) predicate evaluations.
///
/// Requires the staircase property: pmax_of is non-decreasing on numerators
/// <= t_obs_num and non-increasing on numerators >= t_obs_num, where
/// t_obs_num = n * T_obs (an integer for the balanced and matched-pairs
/// designs).  The returned accepted numerators form a contiguous block.
/// Each distinct candidate is evaluated at most once (memoized).
template <class PmaxFn>
std::vector<long long> invert_staircase(long long base, long long n,
                                        long long t_obs_num, const Frac& alpha,
                                        PmaxFn&& pmax_of) {
    const long long K = n + 1;  // 1-based candidate indices
    std::vector<signed char> memo(static_cast<std::size_t>(K) + 1, -1);
    auto accepted_at = [&](long long k) -> bool {
        auto& slot = memo[static_cast<std::size_t>(k)];
        if (slot < 0) {
            const double p = pmax_of(base + k - 1);
            slot = double_ge_frac(p, alpha) ? 1 : 0;
        }
        return slot == 1;
    };
    // First accepted index within [lo, hi] under the non-decreasing side.
    auto search_min = [&](long long lo, long long hi) -> std::optional<long long> {
        std::optional<long long> ans;
        while (lo <= hi) {
            const long long mid = lo + (hi - lo) / 2;
            if (accepted_at(mid)) {
                ans = mid;
                hi = mid - 1;
            } else {
                lo = mid + 1;
            }
        }
        return ans;
    };
    // Last accepted index within [lo, hi] under the non-increasing side.
    auto search_max = [&](long long lo, long long hi) -> std::optional<long long> {
        std::optional<long long> ans;
        while (lo <= hi) {
            const long long mid = lo + (hi - lo) / 2;
            if (accepted_at(mid)) {
                ans = mid;
                lo = mid + 1;
            } else {
                hi = mid - 1;
            }
        }
        return ans;
    };

    auto make_block = [&](long long klo, long long khi) {
        std::vector<long long> out;
        out.reserve(static_cast<std::size_t>(khi - klo + 1));
        for (long long k = klo; k <= khi; ++k) out.push_back(base + k - 1);
        return out;
    };

    // Off-grid observed statistic: the staircase is one-sided over the
    // whole grid, so a single search suffices.
    if (t_obs_num < base) {
        const auto kmax = search_max(1, K);
        return kmax ? make_block(1, *kmax) : std::vector<long long>{};
    }
    if (t_obs_num > base + n) {
        const auto kmin = search_min(1, K);
        return kmin ? make_block(*kmin, K) : std::vector<long long>{};
    }
    // In range: t_obs_num is itself a grid numerator (the grid holds every
    // integer in range), splitting the staircase at index km.
    const long long km = t_obs_num - base + 1;
    const auto kmin = search_min(1, km);
    const auto kmax = search_max(km, K);
    // If the peak candidate itself is rejected, the staircase property
    // forces rejection everywhere: both searches come back empty.
    if (!kmin && !kmax) return {};
    const long long lo = kmin ? *kmin : km;
    const long long hi = kmax ? *kmax : km;
    if (lo > hi) return {};
    return make_block(lo, hi);
}

}  // namespace randci
