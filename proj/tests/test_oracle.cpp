// Brute-force oracle: enumeration counts, tiny hand-checked cases, and the
// size guards that keep it honest.

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>

#include "randci/oracle.hpp"
#include "randci/simulate.hpp"  // SplitMix64

using randci::ConfidenceResult;
using randci::Design;
using randci::Frac;
using randci::ObservedCounts;
using randci::oracle_confidence_set;
using randci::oracle_pmax;
using randci::OraclePmax;
using randci::PairCounts;
using randci::SplitMix64;

TEST_CASE("reference tables: enumeration counts and intervals", "[oracle]") {
    struct Row {
        ObservedCounts c;
        long long lo, hi;
        std::uint64_t tuples;
    };
    // The tuple counts equal prod(cell + 1) summed over the candidate grid:
    // each observed cell's units split independently over their unobserved
    // potential outcome.
    const Row rows[4] = {
        {{2, 6, 8, 0}, -14, 0, 189},
        {{6, 4, 4, 6}, -7, 12, 1225},
        {{8, 4, 5, 7}, -7, 15, 2160},
        {{10, 13, 15, 12}, -27, 11, 32032},
    };
    for (const Row& r : rows) {
        CAPTURE(r.c.n11, r.c.n01, r.c.n10, r.c.n00);
        const ConfidenceResult res =
            oracle_confidence_set(r.c, Design::balanced_bernoulli, 1, 2, Frac{1, 20});
        REQUIRE_FALSE(res.empty());
        CHECK(res.lo_numerator() == r.lo);
        CHECK(res.hi_numerator() == r.hi);
        CHECK(res.ledger.tail_evaluations == r.tuples);
        CHECK(res.ledger.pmax_evaluations == static_cast<std::uint64_t>(r.c.n() + 1));
    }
}

TEST_CASE("single unit: one completion tuple per candidate", "[oracle]") {
    const ObservedCounts c{1, 0, 0, 0};
    const OraclePmax p0 = oracle_pmax(c, 0, Design::balanced_bernoulli);
    CHECK(p0.tests == 1);
    CHECK(p0.pmax == 1.0);
    const OraclePmax p1 = oracle_pmax(c, 1, Design::balanced_bernoulli);
    CHECK(p1.tests == 1);
    CHECK(p1.pmax == 1.0);
}

TEST_CASE("two-pair toy table agrees with the fast path", "[oracle]") {
    const PairCounts pc{1, 0, 1, 0, 0, 0};
    const auto grid = randci::pair_candidate_grid(pc);
    for (long long j = 0; j < grid.size(); ++j) {
        const long long t = grid.numerator(j);
        randci::TestLedger ledger;
        CAPTURE(t);
        CHECK(oracle_pmax(pc, t).pmax ==
              Catch::Approx(randci::compute_pmax_pairs(pc, t, ledger)).margin(1e-12));
    }
}

TEST_CASE("oracle sets are contiguous for balanced and pairs designs", "[oracle]") {
    SplitMix64 rng{55};
    for (int trial = 0; trial < 10; ++trial) {
        const long long n = 2 + static_cast<long long>(rng.next() % 7);
        ObservedCounts c{0, 0, 0, 0};
        for (long long i = 0; i < n; ++i) {
            switch (rng.next() % 4) {
                case 0: ++c.n11; break;
                case 1: ++c.n01; break;
                case 2: ++c.n10; break;
                default: ++c.n00; break;
            }
        }
        const ConfidenceResult res =
            oracle_confidence_set(c, Design::balanced_bernoulli, 1, 2, Frac{1, 20});
        REQUIRE_FALSE(res.empty());
        CHECK(res.hi_numerator() - res.lo_numerator() + 1 ==
              static_cast<long long>(res.accepted.size()));
    }
    for (int trial = 0; trial < 10; ++trial) {
        const long long m = 1 + static_cast<long long>(rng.next() % 4);
        long long cells[6] = {0, 0, 0, 0, 0, 0};
        for (long long i = 0; i < m; ++i) ++cells[rng.next() % 6];
        const PairCounts pc{cells[0], cells[1], cells[2], cells[3], cells[4], cells[5]};
        const ConfidenceResult res = oracle_confidence_set(pc, Frac{1, 20});
        REQUIRE_FALSE(res.empty());
        CHECK(res.hi_numerator() - res.lo_numerator() + 1 ==
              static_cast<long long>(res.accepted.size()));
    }
}

TEST_CASE("size guards refuse oversized inputs", "[oracle]") {
    using Catch::Matchers::ContainsSubstring;
    const ObservedCounts big{20, 20, 20, 20};
    CHECK_THROWS_WITH(oracle_pmax(big, 0, Design::balanced_bernoulli),
                      ContainsSubstring("oracle size guard exceeded"));
    const PairCounts bigp{5, 5, 2, 1, 0, 0};  // m = 13
    CHECK_THROWS_WITH(oracle_pmax(bigp, bigp.s_obs()),
                      ContainsSubstring("oracle size guard exceeded"));
    // The unit-table overload refuses the pairs design outright.
    CHECK_THROWS_AS(oracle_pmax(ObservedCounts{1, 1, 1, 1}, 0, Design::matched_pairs),
                    std::invalid_argument);
    // Balanced oracle is defined only at p = 1/2.
    CHECK_THROWS_AS(oracle_pmax(ObservedCounts{1, 1, 1, 1}, 0, Design::balanced_bernoulli, 1, 3),
                    std::invalid_argument);
}
