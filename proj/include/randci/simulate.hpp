#pragma once

// Monte Carlo harness: draws repeated assignments for a fixed
// potential-outcome population, runs the exact construction and the Wald
// baseline on each replicate, and aggregates coverage / width / test-count
// summaries.
//
// Reproducibility: every replicate derives its own SplitMix64 substream from
// (seed, replicate index) through a stateless mixer, and per-replicate
// results land in preallocated slots that are reduced sequentially after all
// workers join.  Reports are therefore bit-identical for any worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "randci/balanced.hpp"
#include "randci/core.hpp"
#include "randci/fraction.hpp"
#include "randci/general.hpp"
#include "randci/pairs.hpp"

namespace randci {

/// SplitMix64 generator (Steele, Lea & Flood's mixer); tiny state, passes
/// standard batteries, and trivially supports keyed substreams.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

/// Stateless 64-bit finalizer used to key per-replicate substreams.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent substream for one replicate of one simulation run.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t replicate) {
    return SplitMix64{mix64(seed ^ mix64(replicate + 0x9e3779b97f4a7c15ULL))};
}

/// One draw with P(true) = u/q via Lemire's multiply-shift bounded sampler.
inline bool bernoulli_draw(SplitMix64& rng, long long u, long long q) {
    const unsigned __int128 prod =
        static_cast<unsigned __int128>(rng.next()) * static_cast<unsigned __int128>(q);
    return static_cast<std::uint64_t>(prod >> 64) < static_cast<std::uint64_t>(u);
}

/// Inverse standard normal CDF: Acklam's rational approximation polished by
/// one Halley step against erfc, giving full double precision.
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile level must be in (0,1)");
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = err * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

/// A Wald-style interval; `defined` is false when the normal approximation
/// has no finite standard error to offer (e.g. an empty treatment arm).
struct WaldInterval {
    bool defined = false;
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool covers(double tau) const { return defined && lo <= tau && tau <= hi; }
};

/// Difference-in-means Wald interval for unit-level Bernoulli designs.
/// Undefined when either arm is empty.
inline WaldInterval wald_ci(const ObservedCounts& c, double alpha) {
    const long long n1 = c.n_treated();
    const long long n0 = c.n_control();
    if (n1 == 0 || n0 == 0) return {};
    const double p1 = static_cast<double>(c.n11) / static_cast<double>(n1);
    const double p0 = static_cast<double>(c.n10) / static_cast<double>(n0);
    const double se = std::sqrt(p1 * (1.0 - p1) / static_cast<double>(n1) +
                                p0 * (1.0 - p0) / static_cast<double>(n0));
    const double z = inverse_normal_cdf(1.0 - alpha / 2.0);
    const double est = p1 - p0;
    return {true, est - z * se, est + z * se};
}

/// Mean-of-differences Wald interval for matched pairs, with the sample
/// variance of the observed within-pair differences.  Undefined for m < 2.
inline WaldInterval wald_ci(const PairCounts& c, double alpha) {
    const long long m = c.m();
    if (m < 2) return {};
    const double wbar = static_cast<double>(c.s_obs()) / static_cast<double>(m);
    const double sum_sq = static_cast<double>(c.n_plus() + c.n_minus());  // sum of W^2
    const double var =
        (sum_sq - static_cast<double>(m) * wbar * wbar) / static_cast<double>(m - 1);
    const double se = std::sqrt(std::max(var, 0.0) / static_cast<double>(m));
    const double z = inverse_normal_cdf(1.0 - alpha / 2.0);
    return {true, wbar - z * se, wbar + z * se};
}

/// A block of identical units: potential outcomes (y(1), y(0)) shared by
/// `count` units of the population.
struct UnitClass {
    int y1 = 0;
    int y0 = 0;
    long long count = 0;
};

/// A block of identical pairs: pair-level potential-outcome differences
/// (w(1), w(0)) shared by `count` pairs.
struct PairClass {
    int w1 = 0;
    int w0 = 0;
    long long count = 0;
};

namespace detail {

// Allocates class counts for population shares: every share*total must be an
// integer, except that an exact half rounds up (with the final class
// absorbing the remainder so the counts still sum to total).
inline std::vector<long long> allocate_counts(const std::vector<Frac>& shares, long long total) {
    Frac sum{0, 1};
    for (const Frac& s : shares) sum = frac_add(sum, s);
    if (!(sum == Frac{1, 1}))
        throw std::invalid_argument("infeasible setting/n combination: shares must sum to 1");
    std::vector<long long> counts;
    long long used = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const Frac exact = frac_mul(shares[i], Frac{total, 1});
        long long v;
        if (exact.den == 1) {
            v = exact.num;
        } else if (exact.den == 2) {
            v = (exact.num + 1) / 2;  // exact half: round half up
        } else {
            throw std::invalid_argument(
                "infeasible setting/n combination: share * n is not an integer");
        }
        if (i + 1 == shares.size()) {
            const long long rest = total - used;
            // The remainder must still be a faithful rounding of the share.
            if (rest < 0 || std::llabs(2 * rest * exact.den - 2 * exact.num) > exact.den)
                throw std::invalid_argument(
                    "infeasible setting/n combination: shares do not fit n");
            v = rest;
        }
        if (v < 0) throw std::invalid_argument("infeasible setting/n combination");
        counts.push_back(v);
        used += v;
    }
    if (used != total)
        throw std::invalid_argument("infeasible setting/n combination: shares do not fit n");
    return counts;
}

}  // namespace detail

/// Unit-level population for the two benchmark settings: (1) half the units
/// have potential outcomes (1,1) and half (0,0); (2) 8% have (1,1) and 92%
/// have (0,0).  Both have zero average treatment effect.
inline std::vector<UnitClass> bernoulli_setting(int setting, long long n) {
    std::vector<Frac> shares;
    if (setting == 1)
        shares = {Frac{1, 2}, Frac{1, 2}};
    else if (setting == 2)
        shares = {Frac{2, 25}, Frac{23, 25}};
    else
        throw std::invalid_argument("unknown setting (expected 1 or 2)");
    const auto counts = detail::allocate_counts(shares, n);
    return {UnitClass{1, 1, counts[0]}, UnitClass{0, 0, counts[1]}};
}

/// Pair-level population for the two benchmark settings: (1) half the pairs
/// have differences (1,1) and half (1,0) (ATE 0.75 for even m); (2) 92%
/// have (1,1) and 8% (1,0) (ATE 0.96).  An exact half rounds up, e.g. 25
/// pairs split 13 / 12.
inline std::vector<PairClass> pairs_setting(int setting, long long m) {
    std::vector<Frac> shares;
    if (setting == 1)
        shares = {Frac{1, 2}, Frac{1, 2}};
    else if (setting == 2)
        shares = {Frac{23, 25}, Frac{2, 25}};
    else
        throw std::invalid_argument("unknown setting (expected 1 or 2)");
    const auto counts = detail::allocate_counts(shares, m);
    return {PairClass{1, 1, counts[0]}, PairClass{1, 0, counts[1]}};
}

/// Full description of one simulation run.
struct SimulationConfig {
    Design design = Design::balanced_bernoulli;
    long long n = 0;  ///< units; the pairs design requires n = 2m even
    std::vector<UnitClass> unit_classes;  ///< unit-level designs
    std::vector<PairClass> pair_classes;  ///< matched pairs
    Frac alpha{1, 20};
    std::uint64_t reps = 1;
    std::uint64_t seed = 0;
    long long u = 1;  ///< treatment probability u/q (unit-level designs)
    long long q = 2;
    unsigned jobs = 1;  ///< worker threads (0 = all hardware threads)
};

/// Aggregated results of one simulation run.
struct SimulationReport {
    std::uint64_t reps = 0;
    long long true_tau_numerator = 0;  ///< over denominator n
    double coverage = 0.0;             ///< exact construction
    double median_width = 0.0;         ///< over replicates with nonempty sets
    double max_width = 0.0;            ///< widest nonempty exact set seen
    double mean_tests = 0.0;           ///< average tail evaluations per replicate
    double mean_pmax_evaluations = 0.0;
    std::uint64_t empty_sets = 0;
    double wald_coverage = 0.0;
    double wald_median_width = 0.0;  ///< over replicates where Wald is defined
    std::uint64_t wald_undefined = 0;
};

namespace detail {

struct ReplicateOutcome {
    bool covered = false;
    bool nonempty = false;
    double width = 0.0;
    std::uint64_t tails = 0;
    std::uint64_t pmaxes = 0;
    bool wald_defined = false;
    bool wald_covered = false;
    double wald_width = 0.0;
};

inline double median(std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t h = xs.size() / 2;
    return (xs.size() % 2 == 1) ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

}  // namespace detail

/// Runs the configured Monte Carlo study.  Deterministic for fixed
/// (config, seed) regardless of `jobs`.
inline SimulationReport simulate(const SimulationConfig& config) {
    if (config.reps < 1) throw std::invalid_argument("reps must be at least 1");
    if (config.n <= 0) throw std::invalid_argument("no units");
    const bool pairs = config.design == Design::matched_pairs;
    if (pairs && config.n % 2 != 0)
        throw std::invalid_argument("matched pairs need an even number of units");
    if (!pairs) validate_probability(config.u, config.q);
    if (pairs && config.pair_classes.empty())
        throw std::invalid_argument("no pair classes in setting");
    if (!pairs && config.unit_classes.empty())
        throw std::invalid_argument("no unit classes in setting");
    validate_alpha(config.alpha);

    long long members = 0;
    long long t_true = 0;
    if (pairs) {
        for (const auto& cl : config.pair_classes) {
            if (cl.count < 0 || cl.w1 < -1 || cl.w1 > 1 || cl.w0 < -1 || cl.w0 > 1)
                throw std::invalid_argument("invalid pair class");
            members += cl.count;
            t_true += cl.count * (cl.w1 + cl.w0);
        }
        if (members != config.n / 2)
            throw std::invalid_argument("infeasible setting/n combination: shares do not fit n");
    } else {
        for (const auto& cl : config.unit_classes) {
            if (cl.count < 0 || cl.y1 < 0 || cl.y1 > 1 || cl.y0 < 0 || cl.y0 > 1)
                throw std::invalid_argument("invalid unit class");
            members += cl.count;
            t_true += cl.count * (cl.y1 - cl.y0);
        }
        if (members != config.n)
            throw std::invalid_argument("infeasible setting/n combination: shares do not fit n");
    }
    const double tau_true = static_cast<double>(t_true) / static_cast<double>(config.n);
    const double alpha_dbl = frac_to_double(config.alpha);

    std::vector<detail::ReplicateOutcome> outcomes(config.reps);
    auto run_replicate = [&](std::uint64_t rep) {
        SplitMix64 rng = substream(config.seed, rep);
        detail::ReplicateOutcome& out = outcomes[rep];
        ConfidenceResult res;
        WaldInterval wald;
        if (pairs) {
            PairCounts pc;
            for (const auto& cl : config.pair_classes) {
                for (long long i = 0; i < cl.count; ++i) {
                    const bool z = bernoulli_draw(rng, 1, 2);
                    const int w = z ? cl.w1 : cl.w0;
                    if (w == 1)
                        ++(z ? pc.plus_t : pc.plus_c);
                    else if (w == 0)
                        ++(z ? pc.zero_t : pc.zero_c);
                    else
                        ++(z ? pc.minus_t : pc.minus_c);
                }
            }
            res = confidence_set_pairs(pc, config.alpha);
            wald = wald_ci(pc, alpha_dbl);
        } else {
            ObservedCounts oc;
            for (const auto& cl : config.unit_classes) {
                for (long long i = 0; i < cl.count; ++i) {
                    const bool z = bernoulli_draw(rng, config.u, config.q);
                    const int y = z ? cl.y1 : cl.y0;
                    if (z)
                        ++(y == 1 ? oc.n11 : oc.n01);
                    else
                        ++(y == 1 ? oc.n10 : oc.n00);
                }
            }
            if (config.design == Design::balanced_bernoulli)
                res = confidence_set(oc, config.alpha);
            else
                res = confidence_set_general(oc, config.alpha, config.u, config.q);
            wald = wald_ci(oc, alpha_dbl);
        }
        out.nonempty = !res.empty();
        out.covered = out.nonempty &&
                      std::binary_search(res.accepted.begin(), res.accepted.end(), t_true);
        if (out.nonempty) out.width = res.width();
        out.tails = res.ledger.tail_evaluations;
        out.pmaxes = res.ledger.pmax_evaluations;
        out.wald_defined = wald.defined;
        out.wald_covered = wald.covers(tau_true);
        if (wald.defined) out.wald_width = wald.width();
    };

    unsigned jobs = config.jobs;
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(jobs, config.reps));
    if (workers <= 1) {
        for (std::uint64_t rep = 0; rep < config.reps; ++rep) run_replicate(rep);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::uint64_t rep = w; rep < config.reps; rep += workers)
                    run_replicate(rep);
            });
        for (auto& th : pool) th.join();
    }

    SimulationReport report;
    report.reps = config.reps;
    report.true_tau_numerator = t_true;
    std::vector<double> widths, wald_widths;
    widths.reserve(config.reps);
    wald_widths.reserve(config.reps);
    std::uint64_t covered = 0, wald_covered = 0;
    double tails = 0.0, pmaxes = 0.0;
    for (const auto& out : outcomes) {
        covered += out.covered ? 1 : 0;
        if (out.nonempty) {
            widths.push_back(out.width);
            report.max_width = std::max(report.max_width, out.width);
        } else {
            ++report.empty_sets;
        }
        tails += static_cast<double>(out.tails);
        pmaxes += static_cast<double>(out.pmaxes);
        wald_covered += out.wald_covered ? 1 : 0;
        if (out.wald_defined)
            wald_widths.push_back(out.wald_width);
        else
            ++report.wald_undefined;
    }
    const double reps_dbl = static_cast<double>(config.reps);
    report.coverage = static_cast<double>(covered) / reps_dbl;
    report.median_width = detail::median(widths);
    report.mean_tests = tails / reps_dbl;
    report.mean_pmax_evaluations = pmaxes / reps_dbl;
    report.wald_coverage = static_cast<double>(wald_covered) / reps_dbl;
    report.wald_median_width = detail::median(wald_widths);
    return report;
}

}  // namespace randci
