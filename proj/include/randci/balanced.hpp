#pragma once

// Balanced Bernoulli design (p = 1/2): O(log n) randomization tests per
// confidence set.
//
// For a candidate numerator t (tau0 = t/n), the compatible completions are
// parameterized by the pair (a, b): a = number of full-weight (+-1) summands
// and b = number of half-weight (+-1/2) summands of the centered statistic.
// The feasible (a, b) region is the integer polytope below
// (region_params/feasible_ab); the maximal p-value over the region is
// attained at one explicitly computable corner per branch (compute_ab), so
// p_max costs at most two tail evaluations, and the confidence set follows
// by binary search over the staircase-shaped p_max.

#include <cstdlib>
#include <optional>
#include <stdexcept>

#include "randci/core.hpp"
#include "randci/lattice_pmf.hpp"

namespace randci {

/// Linear-constraint bounds of the feasible (a, b) region for one candidate.
struct RegionParams {
    long long L = 0;       ///< lower bound on 2a + b
    long long U = 0;       ///< upper bound on 2a + b
    long long Ub = 0;      ///< upper bound on b
    long long N1star = 0;  ///< lower bound on a + b (= n11 + n10)
    long long n = 0;       ///< upper bound on a + b
};

inline RegionParams region_params(const ObservedCounts& c, long long t) {
    const long long n = c.n();
    RegionParams r;
    r.L = std::max(2 * c.n11 - t, 2 * c.n10 + t);
    r.U = std::min(2 * n - t - 2 * c.n01, 2 * n + t - 2 * c.n00);
    r.Ub = std::min(2 * c.n11 + 2 * c.n00 - t, 2 * c.n01 + 2 * c.n10 + t);
    r.N1star = c.n11 + c.n10;
    r.n = n;
    return r;
}

struct ABPair {
    long long a = 0;
    long long b = 0;
};

/// Full membership test of (a, b) in the feasible region with
/// branch-specific lower bound b >= lb.
inline bool feasible_ab(const ABPair& ab, const ObservedCounts& c, long long t,
                        long long lb) {
    const RegionParams r = region_params(c, t);
    const long long a = ab.a;
    const long long b = ab.b;
    return r.L <= 2 * a + b && 2 * a + b <= r.U && r.N1star <= a + b &&
           a + b <= r.n && 0 <= a && a <= r.N1star &&
           std::max(lb, std::llabs(t)) <= b && b <= r.Ub && (b - t) % 2 == 0;
}

/// The lexicographically maximal feasible (a, b) (a first, then b) subject
/// to b >= lb, where the maximal p-value of the branch is attained.
/// Returns nullopt when the branch is infeasible.
inline std::optional<ABPair> compute_ab(const ObservedCounts& c, long long t,
                                        long long lb) {
    const RegionParams r = region_params(c, t);
    long long a = std::min(std::min((r.U - lb) / 2, r.n - lb),
                           std::min(r.N1star, r.U - r.N1star));
    const long long bcap = std::min(std::min(r.U - 2 * a, r.n - a), r.Ub);
    long long b = ((bcap - t) % 2 == 0) ? bcap : bcap - 1;
    if (a + b < r.N1star) {
        // One repair step: trading a for two b keeps 2a + b fixed.
        a -= 1;
        b += 2;
    }
    const ABPair ab{a, b};
    if (feasible_ab(ab, c, t, lb)) return ab;
    return std::nullopt;
}

/// Maximal randomization p-value over all completions compatible with the
/// candidate numerator t, using at most two tail evaluations.
inline double compute_pmax(const ObservedCounts& c, long long t, TestLedger& ledger) {
    if (!candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    ledger.add_pmax();
    const ScaledThreshold thr = scaled_delta_balanced(c, t);
    if (t != 0) {
        // b >= |t| is implied for every feasible completion, so one branch.
        const auto ab = compute_ab(c, t, std::llabs(t));
        if (!ab)
            throw std::logic_error("internal error: no feasible completion for on-grid candidate");
        return compute_probability_via_fft(ab->a, ab->b, thr, ledger);
    }
    // t == 0 splits into a b == 0 branch and a b >= 2 branch.
    const RegionParams r = region_params(c, 0);
    double best = 0.0;
    bool any = false;
    const long long a0 = std::min(std::min(r.U / 2, r.n),
                                  std::min(r.N1star, r.U - r.N1star));
    if (a0 >= r.N1star && 2 * a0 >= r.L) {
        best = std::max(best, compute_probability_via_fft(a0, 0, thr, ledger));
        any = true;
    }
    if (const auto ab = compute_ab(c, 0, 2)) {
        if (ab->a + ab->b >= r.N1star && 2 * ab->a + ab->b >= r.L && ab->a >= 0) {
            best = std::max(best, compute_probability_via_fft(ab->a, ab->b, thr, ledger));
            any = true;
        }
    }
    if (!any)
        throw std::logic_error("internal error: no feasible completion for on-grid candidate");
    return best;
}

/// Exact (1 - alpha) confidence set for the ATE under the balanced
/// Bernoulli design, via O(log n) p_max evaluations.
inline ConfidenceResult confidence_set(const ObservedCounts& c, const Frac& alpha) {
    validate_alpha(alpha);
    const CandidateGrid grid = candidate_grid(c);
    TestLedger ledger;
    const long long t_obs = 2 * (c.n11 - c.n10);  // n * T_obs, an integer
    ConfidenceResult res;
    res.accepted = invert_staircase(grid.base, grid.n, t_obs, alpha,
                                    [&](long long t) { return compute_pmax(c, t, ledger); });
    res.denominator = grid.n;
    res.alpha = alpha;
    res.ledger = ledger.counts();
    return res;
}

}  // namespace randci
