#pragma once

// General Bernoulli(p) design with rational p = u/q: every unit is treated
// independently with probability u/q, 0 < u < q.
//
// Unlike the balanced case there is no two-parameter reduction of the
// completion space, so p_max(t) maximizes the tail probability over all
// feasible potential-outcome tables v = (v11, v10, v01, v00) with
// v10 - v01 = t.  For fixed v11 the feasible v10 form one contiguous run;
// consecutive tables differ by (v10, v01, v00) -> (v10 + 1, v01 + 1,
// v00 - 2), so within a run the PMF of the scaled statistic is advanced by a
// cheap two-atom convolution (pmf_shift_update) instead of a fresh O(n log n)
// build.  The ledger counts one tail evaluation per run (the fresh FFT
// build); update steps ride along for free, giving O(n) counted evaluations
// per candidate and O(n^2) over the full grid.
//
// The confidence set enumerates every candidate numerator (no early exit):
// correctness does not rely on the accepted set being an interval, and the
// ledger stays deterministic.

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "randci/core.hpp"
#include "randci/lattice_pmf.hpp"

namespace randci {

/// Floor division with Python semantics (rounds toward -infinity; b > 0).
inline long long floor_div(long long a, long long b) {
    long long quot = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --quot;
    return quot;
}

/// Ceiling division with Python semantics (rounds toward +infinity; b > 0).
inline long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

inline void validate_probability(long long u, long long q) {
    if (q <= 0 || u <= 0 || u >= q)
        throw std::invalid_argument("treatment probability must satisfy 0 < u/q < 1");
    if (std::gcd(u, q) != 1)
        throw std::invalid_argument("treatment probability u/q must be in lowest terms");
}

/// Contiguous run of feasible v10 values for a fixed v11 and candidate t:
/// tables (v11, v10, v10 - t, n - v11 - 2 v10 + t) with v10 in [lo, hi].
struct VRun {
    long long v11 = 0;
    long long lo = 0;
    long long hi = -1;

    bool empty() const { return lo > hi; }
};

/// Feasible v10 interval for fixed v11, from the Hall conditions matching
/// the completion table to the observed cells plus non-negativity.  Units
/// with (y(1), y(0)) = (1, 1) are observed as 1 in either arm, so no run
/// exists beyond v11 = n11 + n10.
inline VRun v_run(const ObservedCounts& c, long long t, long long v11) {
    if (v11 < 0 || v11 > c.n11 + c.n10) return VRun{v11, 0, -1};
    const long long n = c.n();
    long long lo = std::max({0LL, t, c.n11 - v11, c.n10 - v11 + t,
                             ceil_div(n - v11 + t - c.n01 - c.n00, 2)});
    long long hi = std::min({c.n11 + c.n00, c.n01 + c.n10 + t,
                             floor_div(n - v11 + t, 2), n - v11 - c.n01,
                             n - v11 + t - c.n00});
    return VRun{v11, lo, hi};
}

/// All non-empty runs for candidate numerator t, in increasing v11 order.
inline std::vector<VRun> feasible_v_runs(const ObservedCounts& c, long long t) {
    std::vector<VRun> runs;
    for (long long v11 = 0; v11 <= c.n(); ++v11) {
        const VRun r = v_run(c, t, v11);
        if (!r.empty()) runs.push_back(r);
    }
    return runs;
}

/// Maximal randomization p-value over completions for candidate numerator t
/// under the Bernoulli(u/q) design.  Counts one tail evaluation per run.
inline double pmax_general(const ObservedCounts& c, long long t, long long u, long long q,
                           TestLedger& ledger) {
    validate_counts(c);
    validate_probability(u, q);
    if (!candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    ledger.add_pmax();
    const ScaledThreshold thr = scaled_delta_general(c, t, u, q);
    const std::vector<VRun> runs = feasible_v_runs(c, t);
    if (runs.empty())
        throw std::logic_error("internal error: no feasible completion for on-grid candidate");
    // Rebuild the PMF from scratch periodically so floating-point drift from
    // chained updates cannot accumulate across long runs.
    constexpr long long kReanchorEvery = 64;
    double best = 0.0;
    for (const VRun& run : runs) {
        ledger.add_tail();
        LatticePMF pmf = pmf_weighted(run.v11, run.lo, run.lo - t, u, q);
        best = std::max(best, two_sided_tail(pmf, thr));
        for (long long v10 = run.lo + 1; v10 <= run.hi; ++v10) {
            if ((v10 - run.lo) % kReanchorEvery == 0)
                pmf = pmf_weighted(run.v11, v10, v10 - t, u, q);
            else
                pmf = pmf_shift_update(pmf, u, q);
            best = std::max(best, two_sided_tail(pmf, thr));
        }
    }
    return best;
}

/// Exact (1 - alpha) confidence set for the ATE under the Bernoulli(u/q)
/// design.  Evaluates p_max at every candidate numerator; `jobs` splits the
/// grid across threads (0 = all hardware threads) with a deterministic merge,
/// so results and ledger totals do not depend on the thread count.
inline ConfidenceResult confidence_set_general(const ObservedCounts& c, const Frac& alpha,
                                               long long u, long long q, unsigned jobs = 1) {
    validate_counts(c);
    validate_probability(u, q);
    validate_alpha(alpha);
    const CandidateGrid grid = candidate_grid(c);
    const std::size_t k = grid.size();
    std::vector<double> pmax(k, 0.0);
    std::vector<LedgerCounts> parts(k);

    auto eval_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            TestLedger local;
            pmax[j] = pmax_general(c, grid.numerator(static_cast<long long>(j)), u, q, local);
            parts[j] = local.counts();
        }
    };

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(jobs, k));
    if (workers <= 1) {
        eval_range(0, k);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (k + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = std::min<std::size_t>(w * chunk, k);
            const std::size_t end = std::min<std::size_t>(begin + chunk, k);
            if (begin < end) pool.emplace_back(eval_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    ConfidenceResult res;
    res.denominator = grid.n;
    res.alpha = alpha;
    TestLedger total;
    for (std::size_t j = 0; j < k; ++j) {
        total.add(parts[j]);
        if (double_ge_frac(pmax[j], alpha))
            res.accepted.push_back(grid.numerator(static_cast<long long>(j)));
    }
    res.ledger = total.counts();
    return res;
}

}  // namespace randci
