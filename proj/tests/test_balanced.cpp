// Balanced Bernoulli design: (a, b) corner computation, p_max values, and
// full confidence sets including the reference ledgers.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "randci/balanced.hpp"
#include "randci/oracle.hpp"

using randci::compute_ab;
using randci::compute_pmax;
using randci::confidence_set;
using randci::ConfidenceResult;
using randci::Frac;
using randci::ObservedCounts;
using randci::TestLedger;

TEST_CASE("compute_ab lands on the lexicographic corner", "[balanced]") {
    auto ab = compute_ab(ObservedCounts{1, 1, 1, 1}, 0, 2);
    REQUIRE(ab.has_value());
    CHECK(ab->a == 2);
    CHECK(ab->b == 2);

    ab = compute_ab(ObservedCounts{2, 6, 8, 0}, -14, 14);
    REQUIRE(ab.has_value());
    CHECK(ab->a == 2);
    CHECK(ab->b == 14);
}

TEST_CASE("p_max values for reference tables", "[balanced]") {
    TestLedger ledger;
    CHECK(compute_pmax({2, 6, 8, 0}, 0, ledger) == Catch::Approx(7.0 / 64).margin(1e-12));
    CHECK(compute_pmax({2, 6, 8, 0}, -14, ledger) ==
          Catch::Approx(13667.0 / 16384).margin(1e-12));
    CHECK(compute_pmax({2, 6, 8, 0}, -6, ledger) == Catch::Approx(239.0 / 512).margin(1e-12));
    CHECK(compute_pmax({6, 4, 4, 6}, 2, ledger) ==
          Catch::Approx(58267.0 / 65536).margin(1e-12));
    CHECK(compute_pmax({1, 1, 1, 1}, 2, ledger) == Catch::Approx(3.0 / 4).margin(1e-12));
    // Every call costs at most two tail evaluations.
    CHECK(ledger.pmax_evaluations.load() == 5);
    CHECK(ledger.tail_evaluations.load() <= 10);
    CHECK_THROWS_AS(compute_pmax({2, 6, 8, 0}, 3, ledger), std::invalid_argument);
}

TEST_CASE("reference confidence sets with tail-count ledgers", "[balanced]") {
    struct Row {
        ObservedCounts c;
        long long lo, hi;
        std::uint64_t tails;
    };
    const Row rows[4] = {
        {{2, 6, 8, 0}, -14, 0, 7},
        {{6, 4, 4, 6}, -7, 12, 8},
        {{8, 4, 5, 7}, -7, 15, 8},
        {{10, 13, 15, 12}, -27, 11, 9},
    };
    for (const Row& r : rows) {
        CAPTURE(r.c.n11, r.c.n01, r.c.n10, r.c.n00);
        const ConfidenceResult res = confidence_set(r.c, Frac{1, 20});
        REQUIRE_FALSE(res.empty());
        CHECK(res.lo_numerator() == r.lo);
        CHECK(res.hi_numerator() == r.hi);
        CHECK(res.denominator == r.c.n());
        CHECK(res.ledger.tail_evaluations == r.tails);
        // Accepted numerators form a contiguous block.
        CHECK(res.accepted.size() ==
              static_cast<std::size_t>(r.hi - r.lo + 1));
        // Guaranteed work bound: at most 8 log2(n) tests.
        CHECK(static_cast<double>(res.ledger.tail_evaluations) <=
              8.0 * std::log2(static_cast<double>(r.c.n())));
    }
}

TEST_CASE("balanced sets match the oracle on tiny tables", "[balanced]") {
    const ObservedCounts tables[] = {
        {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1},
        {1, 1, 1, 1}, {2, 0, 0, 2}, {0, 3, 3, 0}, {2, 1, 0, 3},
    };
    for (const auto& c : tables) {
        for (const Frac alpha : {Frac{1, 100}, Frac{1, 20}, Frac{1, 5}}) {
            CAPTURE(c.n11, c.n01, c.n10, c.n00, alpha.den);
            const ConfidenceResult fast = confidence_set(c, alpha);
            const ConfidenceResult oracle = randci::oracle_confidence_set(
                c, randci::Design::balanced_bernoulli, 1, 2, alpha);
            CHECK(fast.accepted == oracle.accepted);
        }
    }
}

TEST_CASE("single-unit experiment", "[balanced]") {
    // One treated success: the unobserved y(0) can be 0 or 1, so the grid is
    // {0, 1} and both candidates have p_max = 1.
    const ConfidenceResult res = confidence_set({1, 0, 0, 0}, Frac{1, 20});
    CHECK(res.denominator == 1);
    CHECK(res.accepted == std::vector<long long>{0, 1});
}
