#pragma once

// Brute-force ground truth.  For every candidate numerator the oracle
// enumerates every feasible completion (potential-outcome table compatible
// with the observed data), computes each completion's two-sided p-value by
// direct convolution, and takes the maximum.  It is deliberately naive --
// its only job is to certify the fast paths on small inputs.
//
// Counting convention: one "test" = one enumerated completion tuple whose
// p-value is evaluated, summed over the whole candidate grid.  Unit-level
// completions are enumerated per observed cell (how many of each cell's
// units flip their unobserved potential outcome), so tuples that collapse
// to the same distribution still count individually.  PMFs are cached by
// distribution signature and tails per candidate, which keeps the oracle
// usable at the guard sizes without changing the counts.

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "randci/core.hpp"
#include "randci/general.hpp"
#include "randci/lattice_pmf.hpp"
#include "randci/pairs.hpp"

namespace randci {

/// Result of a single oracle maximization: the maximal p-value and the
/// number of completion tuples enumerated for this candidate.
struct OraclePmax {
    double pmax = 0.0;
    std::uint64_t tests = 0;
};

namespace detail {

// Completion tuples for unit-level designs: k1 of the n11 treated successes
// have y(0)=1, k2 of the n01 treated failures have y(0)=1, k3 of the n10
// control successes have y(1)=1, k4 of the n00 control failures have
// y(1)=1.  The induced potential-outcome table is
//   v11 = k1 + k3, v10 = (n11 - k1) + k4, v01 = k2 + (n10 - k3),
// and t = v10 - v01 pins k4 = t - n11 + n10 + k1 + k2 - k3.
template <class PmfKey, class MakeKey, class MakePmf>
OraclePmax oracle_pmax_units(const ObservedCounts& c, long long t, const ScaledThreshold& thr,
                             std::map<PmfKey, LatticePMF>& pmf_cache, MakeKey make_key,
                             MakePmf make_pmf) {
    OraclePmax out;
    std::map<PmfKey, double> tail_cache;
    const long long shift = t - c.n11 + c.n10;
    for (long long k1 = 0; k1 <= c.n11; ++k1) {
        for (long long k2 = 0; k2 <= c.n01; ++k2) {
            for (long long k3 = 0; k3 <= c.n10; ++k3) {
                const long long k4 = shift + k1 + k2 - k3;
                if (k4 < 0 || k4 > c.n00) continue;
                const long long v11 = k1 + k3;
                const long long v10 = (c.n11 - k1) + k4;
                const long long v01 = k2 + (c.n10 - k3);
                ++out.tests;
                const PmfKey key = make_key(v11, v10, v01);
                auto [it, missing] = tail_cache.try_emplace(key, 0.0);
                if (missing) {
                    auto pit = pmf_cache.find(key);
                    if (pit == pmf_cache.end())
                        pit = pmf_cache.emplace(key, make_pmf(v11, v10, v01)).first;
                    it->second = two_sided_tail(pit->second, thr);
                }
                out.pmax = std::max(out.pmax, it->second);
            }
        }
    }
    return out;
}

}  // namespace detail

/// Brute-force maximal p-value for candidate numerator t (unit designs).
/// For the balanced design completions collapse to (a, b) Rademacher mixes;
/// the general design keeps the full weighted triple.  Guard: n <= 64.
inline OraclePmax oracle_pmax(const ObservedCounts& c, long long t, Design design,
                              long long u = 1, long long q = 2) {
    validate_counts(c);
    if (design == Design::matched_pairs)
        throw std::invalid_argument("pair tables require the PairCounts overload");
    if (c.n() > 64) throw std::invalid_argument("oracle size guard exceeded");
    if (!candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    if (design == Design::balanced_bernoulli) {
        if (!(u == 1 && q == 2))
            throw std::invalid_argument("balanced design requires p = 1/2");
        const ScaledThreshold thr = scaled_delta_balanced(c, t);
        std::map<std::pair<long long, long long>, LatticePMF> cache;
        return detail::oracle_pmax_units(
            c, t, thr, cache,
            [](long long v11, long long v10, long long v01) {
                return std::make_pair(v11, v10 + v01);
            },
            [](long long v11, long long v10, long long v01) {
                return pmf_direct_convolution(v11, v10 + v01);
            });
    }
    validate_probability(u, q);
    const ScaledThreshold thr = scaled_delta_general(c, t, u, q);
    std::map<std::tuple<long long, long long, long long>, LatticePMF> cache;
    return detail::oracle_pmax_units(
        c, t, thr, cache,
        [](long long v11, long long v10, long long v01) {
            return std::make_tuple(v11, v10, v01);
        },
        [&](long long v11, long long v10, long long v01) {
            return pmf_direct_convolution(v11, v10, v01, u, q);
        });
}

/// Brute-force maximal p-value for candidate numerator t (matched pairs).
/// Enumerates 3-compositions of each observed-difference row into
/// counterfactual differences u in {+1, 0, -1}.  Guard: m <= 12.
inline OraclePmax oracle_pmax(const PairCounts& c, long long t) {
    validate_pair_counts(c);
    if (c.m() > 12) throw std::invalid_argument("oracle size guard exceeded");
    if (!pair_candidate_grid(c).contains(t))
        throw std::invalid_argument("incompatible candidate: numerator off the grid");
    const ScaledThreshold thr = scaled_delta_pairs(c, t);
    const long long d = t - c.s_obs();
    const long long rows[3] = {c.n_plus(), c.n_zero(), c.n_minus()};
    OraclePmax out;
    std::map<std::pair<long long, long long>, double> tail_cache;
    std::map<std::pair<long long, long long>, LatticePMF> pmf_cache;
    // x[w][j]: pairs with observed difference w whose counterfactual
    // difference is (+1, 0, -1)[j].
    for (long long p1 = 0; p1 <= rows[0]; ++p1)
        for (long long z1 = 0; z1 <= rows[0] - p1; ++z1)
            for (long long p0 = 0; p0 <= rows[1]; ++p0)
                for (long long z0 = 0; z0 <= rows[1] - p0; ++z0)
                    for (long long pm = 0; pm <= rows[2]; ++pm)
                        for (long long zm = 0; zm <= rows[2] - pm; ++zm) {
                            const long long m1_row0 = rows[0] - p1 - z1;  // u=-1 in row +1
                            const long long m1_row1 = rows[1] - p0 - z0;  // u=-1 in row 0
                            const long long m1_row2 = rows[2] - pm - zm;  // u=-1 in row -1
                            const long long tot = (p1 + p0 + pm) - (m1_row0 + m1_row1 + m1_row2);
                            if (tot != d) continue;
                            ++out.tests;
                            const long long m2 = m1_row0 + pm;
                            const long long m1 = z1 + p0 + m1_row1 + zm;
                            const auto key = std::make_pair(m2, m1);
                            auto [it, missing] = tail_cache.try_emplace(key, 0.0);
                            if (missing) {
                                auto pit = pmf_cache.find(key);
                                if (pit == pmf_cache.end())
                                    pit = pmf_cache.emplace(key, pmf_direct_convolution(m2, m1))
                                              .first;
                                it->second = two_sided_tail(pit->second, thr);
                            }
                            out.pmax = std::max(out.pmax, it->second);
                        }
    return out;
}

/// Brute-force confidence set for unit-level designs.  The ledger records
/// one p_max evaluation per candidate and the total enumerated tuples as
/// tail evaluations.
inline ConfidenceResult oracle_confidence_set(const ObservedCounts& c, Design design,
                                              long long u, long long q, const Frac& alpha) {
    validate_counts(c);
    validate_alpha(alpha);
    const CandidateGrid grid = candidate_grid(c);
    ConfidenceResult res;
    res.denominator = grid.n;
    res.alpha = alpha;
    for (long long j = 0; j < static_cast<long long>(grid.size()); ++j) {
        const long long t = grid.numerator(j);
        const OraclePmax op = oracle_pmax(c, t, design, u, q);
        res.ledger.tail_evaluations += op.tests;
        res.ledger.pmax_evaluations += 1;
        if (double_ge_frac(op.pmax, alpha)) res.accepted.push_back(t);
    }
    return res;
}

/// Brute-force confidence set for the matched-pairs design.
inline ConfidenceResult oracle_confidence_set(const PairCounts& c, const Frac& alpha) {
    validate_pair_counts(c);
    validate_alpha(alpha);
    const CandidateGrid grid = pair_candidate_grid(c);
    ConfidenceResult res;
    res.denominator = grid.n;
    res.alpha = alpha;
    for (long long j = 0; j < static_cast<long long>(grid.size()); ++j) {
        const long long t = grid.numerator(j);
        const OraclePmax op = oracle_pmax(c, t);
        res.ledger.tail_evaluations += op.tests;
        res.ledger.pmax_evaluations += 1;
        if (double_ge_frac(op.pmax, alpha)) res.accepted.push_back(t);
    }
    return res;
}

}  // namespace randci
