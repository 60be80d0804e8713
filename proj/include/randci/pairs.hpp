#pragma once

// Matched-pairs design: m pairs, one unit of each pair randomized to
// treatment with probability 1/2, independently across pairs.
//
// Pair i contributes an observed within-pair difference W_i in {-1, 0, +1};
// the sufficient statistics are the 3x2 table N_{w,z} (observed difference w
// by pair-level assignment z) and s_obs = sum_i W_i.  A compatible
// completion assigns each pair an unobserved counterfactual difference
// u in {-1, 0, +1}; the centered statistic is then distributed as
// 2 * S_{m2,m1} where m2 counts pairs with |W - u| = 2 and m1 counts pairs
// with |W - u| = 1.  The maximal p-value over completions is attained at the
// lexicographic maximum of (m2, m1) over a small transportation polytope,
// split into an m1 == 0 branch and an m1 >= 1 branch, each solved in closed
// form (lex_max_m2m1).  The confidence set follows by the same staircase
// binary search as the balanced design; the grid numerators are
// {s_obs - m .. s_obs + m} over n = 2m.

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "randci/core.hpp"
#include "randci/lattice_pmf.hpp"

namespace randci {

/// Observed 3x2 matched-pairs table: rows by within-pair difference
/// W in {+1, 0, -1}, columns by pair-level assignment z in {1, 0}.
struct PairCounts {
    long long plus_t = 0;   ///< W = +1, z = 1
    long long plus_c = 0;   ///< W = +1, z = 0
    long long zero_t = 0;   ///< W =  0, z = 1
    long long zero_c = 0;   ///< W =  0, z = 0
    long long minus_t = 0;  ///< W = -1, z = 1
    long long minus_c = 0;  ///< W = -1, z = 0

    long long n_plus() const { return plus_t + plus_c; }
    long long n_zero() const { return zero_t + zero_c; }
    long long n_minus() const { return minus_t + minus_c; }
    long long m() const { return n_plus() + n_zero() + n_minus(); }
    long long n() const { return 2 * m(); }
    long long s_obs() const { return n_plus() - n_minus(); }
};

inline void validate_pair_counts(const PairCounts& c) {
    if (c.plus_t < 0 || c.plus_c < 0 || c.zero_t < 0 || c.zero_c < 0 ||
        c.minus_t < 0 || c.minus_c < 0)
        throw std::invalid_argument("counts must be non-negative");
    if (c.m() == 0) throw std::invalid_argument("no pairs");
}

/// One unit row of a pair-structured data set.
struct PairRecord {
    std::string pair_id;
    int y = 0;
    int z = 0;
};

/// Groups unit records into pairs and tallies the 3x2 table.
///
/// Each pair_id must appear exactly twice, with one treated and one control
/// unit.  The observed difference is W = y_treated - y_control; the
/// pair-level assignment is defined as z = 1 when the second-listed unit of
/// the pair is the treated one (the orientation does not affect inference,
/// only the z-split of the table).
inline PairCounts pair_reduce(const std::vector<PairRecord>& records) {
    if (records.empty()) throw std::invalid_argument("no pairs");
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<int, int>>> groups;
    for (const auto& r : records) {
        if ((r.y != 0 && r.y != 1) || (r.z != 0 && r.z != 1))
            throw std::invalid_argument("unit outcomes and assignments must be 0/1");
        auto [it, inserted] = groups.try_emplace(r.pair_id);
        if (inserted) order.push_back(r.pair_id);
        it->second.emplace_back(r.y, r.z);
    }
    PairCounts c;
    for (const auto& id : order) {
        const auto& g = groups[id];
        if (g.size() != 2)
            throw std::invalid_argument("malformed pair '" + id + "': needs exactly 2 units, got " +
                                        std::to_string(g.size()));
        const auto [y1, z1] = g[0];
        const auto [y2, z2] = g[1];
        if (z1 + z2 != 1)
            throw std::invalid_argument("malformed pair '" + id +
                                        "': needs exactly one treated unit");
        const int w = (z1 == 1) ? y1 - y2 : y2 - y1;
        const int z_pair = z2;  // 1 iff the second-listed unit is treated
        if (w == 1)
            ++(z_pair == 1 ? c.plus_t : c.plus_c);
        else if (w == 0)
            ++(z_pair == 1 ? c.zero_t : c.zero_c);
        else
            ++(z_pair == 1 ? c.minus_t : c.minus_c);
    }
    return c;
}

inline CandidateGrid pair_candidate_grid(const PairCounts& c) {
    validate_pair_counts(c);
    return CandidateGrid{c.s_obs() - c.m(), c.n()};
}

/// Threshold |2 s_obs - t| / 2 on the half-integer lattice of S_{m2,m1}
/// (the centered pair statistic equals 2 * S_{m2,m1} in distribution).
inline ScaledThreshold scaled_delta_pairs(const PairCounts& c, long long t) {
    if (!pair_candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    return ScaledThreshold{std::llabs(2 * c.s_obs() - t), 2};
}

enum class M2M1Branch { m1_zero, m1_positive };

/// Lexicographic maximum of (m2, m1) over completions with total
/// counterfactual contribution sum_i u_i = d, within the given branch.
///
/// Row capacities are the observed counts (n1, n0, nm1) of pairs with
/// W = +1, 0, -1.  A completion assigns each pair a counterfactual
/// difference u in {+1, 0, -1}; m2 counts cells with |W - u| = 2
/// (i.e. (W,u) = (+1,-1) or (-1,+1)) and m1 counts cells with |W - u| = 1.
/// Returns nullopt when the branch is infeasible.
inline std::optional<std::pair<long long, long long>> lex_max_m2m1(
    long long n1, long long n0, long long nm1, long long d, M2M1Branch branch) {
    if (n1 < 0 || n0 < 0 || nm1 < 0)
        throw std::invalid_argument("counts must be non-negative");
    if (branch == M2M1Branch::m1_zero) {
        // m1 == 0 forces u = W in row 0 and u = +-1 in rows +-1; writing
        // q1 = #{W=+1, u=-1} and p1 = #{W=-1, u=+1} gives
        // d = (n1 - 2 q1) + (2 p1 - nm1), so p1 - q1 = (d - n1 + nm1)/2.
        const long long two_e = d - n1 + nm1;
        if (two_e % 2 != 0) return std::nullopt;
        const long long e = two_e / 2;
        // Maximize m2 = q1 + p1 = 2 q1 + e subject to 0 <= q1 <= n1 and
        // 0 <= p1 = q1 + e <= nm1.
        const long long q1 = std::min(n1, nm1 - e);
        if (q1 < std::max(0LL, -e)) return std::nullopt;
        return std::make_pair(2 * q1 + e, 0LL);
    }
    // m1 >= 1 branch: scan m2 downward; for each m2 and each split
    // m2 = q1 + p1 the best achievable m1 comes from a one-dimensional
    // maximization over c0 = v_{0,+1} - v_{0,-1} whose objective is a
    // parity-adjusted V-shape, so checking the interval ends and the
    // unconstrained optimum's neighborhood suffices.
    constexpr long long kInfeasible = -(1LL << 60);
    for (long long m2 = n1 + nm1; m2 >= 0; --m2) {
        long long best_m1 = -1;
        for (long long q1 = std::max(0LL, m2 - nm1); q1 <= std::min(n1, m2); ++q1) {
            const long long p1 = m2 - q1;
            const long long cap_plus = n1 - q1;    // row +1 units left for u in {+1, 0}
            const long long cap_minus = nm1 - p1;  // row -1 units left for u in {-1, 0}
            const long long rem = d - (p1 - q1);   // contribution still needed
            if (rem < -(cap_minus + n0) || rem > cap_plus + n0) continue;
            const long long lo = std::max(-n0, rem - cap_plus);
            const long long hi = std::min(n0, rem + cap_minus);
            if (lo > hi) continue;
            auto m1_at = [&](long long c0) -> long long {
                if (c0 < lo || c0 > hi) return kInfeasible;
                // Row 0: maximize v_{0,+1} + v_{0,-1} given difference c0.
                long long s0 = ((n0 - std::llabs(c0)) % 2 == 0) ? n0 : n0 - 1;
                if (s0 < std::llabs(c0)) s0 = std::llabs(c0);
                // Rows +-1: v_{+1,+1} - v_{-1,-1} = rem - c0; minimizing
                // their sum maximizes the u = 0 cells that count toward m1.
                const long long diff = rem - c0;
                const long long v_pp = std::max(diff, 0LL);
                const long long v_mm = std::max(-diff, 0LL);
                if (v_pp > cap_plus || v_mm > cap_minus) return kInfeasible;
                return s0 + (cap_plus - v_pp) + (cap_minus - v_mm);
            };
            const long long cands[10] = {lo,  lo + 1, hi,      hi - 1,  rem,
                                         rem - 1, rem + 1, 0,       1,       -1};
            for (const long long c0 : cands) best_m1 = std::max(best_m1, m1_at(c0));
        }
        if (best_m1 >= 1) return std::make_pair(m2, best_m1);
    }
    return std::nullopt;
}

/// Maximal randomization p-value over completions for candidate numerator t
/// under the matched-pairs design; at most two tail evaluations.
inline double compute_pmax_pairs(const PairCounts& c, long long t, TestLedger& ledger) {
    if (!pair_candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    ledger.add_pmax();
    const long long d = t - c.s_obs();
    const ScaledThreshold thr = scaled_delta_pairs(c, t);
    double best = 0.0;
    bool any = false;
    for (const auto branch : {M2M1Branch::m1_zero, M2M1Branch::m1_positive}) {
        const auto mm = lex_max_m2m1(c.n_plus(), c.n_zero(), c.n_minus(), d, branch);
        if (!mm) continue;
        best = std::max(best,
                        compute_probability_via_fft(mm->first, mm->second, thr, ledger));
        any = true;
    }
    if (!any)
        throw std::logic_error("internal error: no feasible completion for on-grid candidate");
    return best;
}

/// Exact (1 - alpha) confidence set for the ATE under the matched-pairs
/// design, via O(log n) p_max evaluations.  Numerators run over n = 2m.
inline ConfidenceResult confidence_set_pairs(const PairCounts& c, const Frac& alpha) {
    validate_alpha(alpha);
    const CandidateGrid grid = pair_candidate_grid(c);
    TestLedger ledger;
    const long long t_obs = 2 * c.s_obs();  // n * T_obs, always on the grid
    ConfidenceResult res;
    res.accepted = invert_staircase(grid.base, grid.n, t_obs, alpha, [&](long long t) {
        return compute_pmax_pairs(c, t, ledger);
    });
    res.denominator = grid.n;
    res.alpha = alpha;
    res.ledger = ledger.counts();
    return res;
}

}  // namespace randci
