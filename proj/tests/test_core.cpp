// Shared domain types: count tables, the candidate numerator grid, scaled
// thresholds, and the staircase binary-search inversion.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "randci/core.hpp"

using randci::CandidateGrid;
using randci::candidate_grid;
using randci::counts_from_units;
using randci::Frac;
using randci::ht_observed;
using randci::invert_staircase;
using randci::ObservedCounts;
using randci::scaled_delta_balanced;
using randci::scaled_delta_general;
using randci::validate_alpha;

TEST_CASE("counts_from_units tallies the 2x2 table", "[core]") {
    const std::vector<std::pair<int, int>> units = {
        {1, 1}, {1, 1}, {0, 1}, {1, 0}, {0, 0}, {0, 0}, {1, 0}, {1, 0}};
    const ObservedCounts c = counts_from_units(units);
    CHECK(c.n11 == 2);
    CHECK(c.n01 == 1);
    CHECK(c.n10 == 3);
    CHECK(c.n00 == 2);
    CHECK(c.n() == 8);
    CHECK(c.n_treated() == 3);
    CHECK(c.n_control() == 5);

    CHECK_THROWS_AS(counts_from_units({}), std::invalid_argument);
    CHECK_THROWS_AS(counts_from_units({{2, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(counts_from_units({{0, -1}}), std::invalid_argument);
}

TEST_CASE("candidate grid spans n+1 consecutive numerators", "[core]") {
    const ObservedCounts c{2, 6, 8, 0};
    const CandidateGrid g = candidate_grid(c);
    CHECK(g.base == (2 - 8) - 8);  // (n11 - n10) - n_treated
    CHECK(g.n == 16);
    CHECK(g.size() == 17);
    CHECK(g.numerator(0) == -14);
    CHECK(g.numerator(16) == 2);
    CHECK(g.contains(-14));
    CHECK(g.contains(0));
    CHECK(g.contains(2));
    CHECK_FALSE(g.contains(-15));
    CHECK_FALSE(g.contains(3));

    CHECK_THROWS_AS(candidate_grid(ObservedCounts{0, 0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(candidate_grid(ObservedCounts{-1, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("Horvitz-Thompson point estimate is exact", "[core]") {
    CHECK(ht_observed({2, 6, 8, 0}, 1, 2) == Frac{-3, 4});
    CHECK(ht_observed({1, 0, 0, 0}, 1, 3) == Frac{3, 1});
    // p = 1/3: (1/n)(3 n11 - (3/2) n10)
    CHECK(ht_observed({2, 6, 8, 0}, 1, 3) == Frac{-3, 8});
    CHECK_THROWS_AS(ht_observed({1, 1, 1, 1}, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(ht_observed({1, 1, 1, 1}, 2, 2), std::invalid_argument);
}

TEST_CASE("scaled thresholds live on the statistic lattice", "[core]") {
    const ObservedCounts c{2, 6, 8, 0};
    auto thr = scaled_delta_balanced(c, 0);
    CHECK(thr.value == 12);  // |2(2-8) - 0|
    CHECK(thr.scale == 2);
    thr = scaled_delta_balanced(c, -14);
    CHECK(thr.value == 2);
    CHECK_THROWS_AS(scaled_delta_balanced(c, 5), std::invalid_argument);

    // General p = 1/3: scale s = u(q-u) = 2, statistic q((q-u) n11 - u n10).
    thr = scaled_delta_general(c, 0, 1, 3);
    CHECK(thr.value == 12);  // |3(2*2 - 8)|
    CHECK(thr.scale == 2);
    thr = scaled_delta_general(c, -6, 1, 3);
    CHECK(thr.value == 0);  // candidate equal to the HT numerator stat/s = -6
    CHECK_THROWS_AS(scaled_delta_general(c, 99, 1, 3), std::invalid_argument);
}

TEST_CASE("validate_alpha rejects degenerate levels", "[core]") {
    CHECK_NOTHROW(validate_alpha(Frac{1, 20}));
    CHECK_NOTHROW(validate_alpha(Frac{1, 100}));
    CHECK_THROWS_AS(validate_alpha(Frac{0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(validate_alpha(Frac{1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(validate_alpha(Frac{-1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(validate_alpha(Frac{3, 2}), std::invalid_argument);
}

namespace {

// Reference inversion by linear scan over a tabulated staircase.
std::vector<long long> scan_accepted(long long base, const std::vector<double>& pmax,
                                     const Frac& alpha) {
    std::vector<long long> out;
    for (std::size_t j = 0; j < pmax.size(); ++j)
        if (randci::double_ge_frac(pmax[j], alpha)) out.push_back(base + static_cast<long long>(j));
    return out;
}

// Synthetic staircase peaking at `peak` (index units), with plateaus.
std::vector<double> tent(long long k, long long peak, double step) {
    std::vector<double> v(static_cast<std::size_t>(k));
    for (long long j = 0; j < k; ++j) {
        const long long d = (j < peak ? peak - j : j - peak) / 2;  // plateau width 2
        v[static_cast<std::size_t>(j)] = std::max(0.0, 1.0 - step * static_cast<double>(d));
    }
    return v;
}

}  // namespace

TEST_CASE("invert_staircase matches a linear scan and memoizes", "[core]") {
    const long long base = -9;
    const long long n = 18;
    for (const long long peak : {0LL, 4LL, 9LL, 13LL, 18LL}) {
        const std::vector<double> pmax = tent(n + 1, peak, 0.17);
        for (const Frac alpha : {Frac{1, 100}, Frac{1, 20}, Frac{1, 5}, Frac{1, 2}, Frac{9, 10}}) {
            std::uint64_t evals = 0;
            std::vector<bool> seen(pmax.size(), false);
            const auto accepted = invert_staircase(
                base, n, base + peak, alpha, [&](long long t) {
                    const auto j = static_cast<std::size_t>(t - base);
                    REQUIRE_FALSE(seen[j]);  // each candidate evaluated once
                    seen[j] = true;
                    ++evals;
                    return pmax[j];
                });
            CAPTURE(peak, alpha.num, alpha.den);
            CHECK(accepted == scan_accepted(base, pmax, alpha));
            // Two binary searches over at most n+1 candidates.
            CHECK(evals <= 2 * (static_cast<std::uint64_t>(std::bit_width(
                                    static_cast<std::uint64_t>(n + 1))) +
                                1));
        }
    }
}

TEST_CASE("invert_staircase with an off-grid observed statistic", "[core]") {
    // Monotone non-increasing staircase: observed peak below the grid.
    const std::vector<double> falling = {0.9, 0.7, 0.5, 0.3, 0.1};
    auto accepted = invert_staircase(10, 4, 7, Frac{2, 5},
                                     [&](long long t) { return falling[t - 10]; });
    CHECK(accepted == std::vector<long long>{10, 11, 12});
    // Rising staircase: observed peak above the grid.
    const std::vector<double> rising = {0.1, 0.3, 0.5, 0.7, 0.9};
    accepted = invert_staircase(10, 4, 99, Frac{2, 5},
                                [&](long long t) { return rising[t - 10]; });
    CHECK(accepted == std::vector<long long>{12, 13, 14});
}

TEST_CASE("invert_staircase returns the empty set when nothing is accepted", "[core]") {
    const auto accepted = invert_staircase(0, 6, 3, Frac{1, 2},
                                           [](long long) { return 0.01; });
    CHECK(accepted.empty());
}
