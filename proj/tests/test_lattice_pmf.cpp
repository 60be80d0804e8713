// Lattice PMF construction (FFT and direct convolution), two-sided tails,
// and the incremental shift update.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>

#include "randci/lattice_pmf.hpp"
#include "randci/simulate.hpp"  // SplitMix64 for the randomized sweeps

using randci::compute_probability_via_fft;
using randci::Frac;
using randci::LatticePMF;
using randci::pmf_direct_convolution;
using randci::pmf_rademacher_mix;
using randci::pmf_shift_update;
using randci::pmf_weighted;
using randci::ScaledThreshold;
using randci::SplitMix64;
using randci::TestLedger;
using randci::two_sided_tail;

namespace {

double max_abs_diff(const LatticePMF& x, const LatticePMF& y) {
    REQUIRE(x.min_index == y.min_index);
    REQUIRE(x.mass.size() == y.mass.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < x.mass.size(); ++i)
        worst = std::max(worst, std::abs(x.mass[i] - y.mass[i]));
    return worst;
}

}  // namespace

TEST_CASE("S_{2,2} and S_{2,1} masses are the exact dyadic fractions", "[pmf]") {
    // Direct convolution at p = 1/2 only adds and halves exactly
    // representable doubles, so equality is bitwise.
    const LatticePMF s22 = pmf_direct_convolution(2, 2);
    REQUIRE(s22.min_index == -6);  // support {-3..3} in half-unit steps
    REQUIRE(s22.mass.size() == 13);
    const double expect22[13] = {1.0 / 16, 0, 1.0 / 8, 0, 3.0 / 16, 0, 1.0 / 4,
                                 0, 3.0 / 16, 0, 1.0 / 8, 0, 1.0 / 16};
    for (int i = 0; i < 13; ++i) CHECK(s22.mass[static_cast<std::size_t>(i)] == expect22[i]);

    const LatticePMF s21 = pmf_direct_convolution(2, 1);
    REQUIRE(s21.min_index == -5);  // support {-5/2..5/2}
    REQUIRE(s21.mass.size() == 11);
    const double expect21[11] = {1.0 / 8, 0, 1.0 / 8, 0, 1.0 / 4, 0,
                                 1.0 / 4, 0, 1.0 / 8, 0, 1.0 / 8};
    for (int i = 0; i < 11; ++i) CHECK(s21.mass[static_cast<std::size_t>(i)] == expect21[i]);
}

TEST_CASE("pure Rademacher sums live on the stride-4 sublattice", "[pmf]") {
    const LatticePMF s30 = pmf_direct_convolution(3, 0);
    REQUIRE(s30.min_index == -6);
    REQUIRE(s30.mass.size() == 13);
    CHECK(s30.mass[0] == 1.0 / 8);
    CHECK(s30.mass[4] == 3.0 / 8);
    CHECK(s30.mass[8] == 3.0 / 8);
    CHECK(s30.mass[12] == 1.0 / 8);
    for (const std::size_t i : {1u, 2u, 3u, 5u, 6u, 7u, 9u, 10u, 11u}) CHECK(s30.mass[i] == 0.0);

    const LatticePMF s01 = pmf_direct_convolution(0, 1);
    REQUIRE(s01.mass.size() == 3);
    CHECK(s01.mass[0] == 0.5);
    CHECK(s01.mass[2] == 0.5);
}

TEST_CASE("FFT build matches direct convolution", "[pmf]") {
    CHECK(max_abs_diff(pmf_rademacher_mix(2, 2), pmf_direct_convolution(2, 2)) <= 1e-12);
    CHECK(max_abs_diff(pmf_rademacher_mix(2, 1), pmf_direct_convolution(2, 1)) <= 1e-12);
    CHECK(max_abs_diff(pmf_rademacher_mix(5, 3), pmf_direct_convolution(5, 3)) <= 1e-12);
    CHECK(max_abs_diff(pmf_rademacher_mix(0, 0), pmf_direct_convolution(0, 0)) == 0.0);

    SplitMix64 rng{95};
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const long long a = static_cast<long long>(rng.next() % 151);
        const long long b = static_cast<long long>(rng.next() % 151);
        if (a + b == 0) continue;
        worst = std::max(worst, max_abs_diff(pmf_rademacher_mix(a, b),
                                             pmf_direct_convolution(a, b)));
    }
    INFO("worst |fft - direct| over random (a,b): " << worst);
    CHECK(worst <= 1e-12);
}

TEST_CASE("weighted PMF for one summand of each type at p = 1/3", "[pmf]") {
    // Scaled atoms (u=1, q=3): eta in {+6, -3}, eps in {+4, -2},
    // delta in {+2, -1}; eight equally-structured combinations.
    const LatticePMF pmf = pmf_weighted(1, 1, 1, 1, 3);
    REQUIRE(pmf.min_index == -6);
    REQUIRE(pmf.mass.size() == 19);
    REQUIRE(pmf.spacing == Frac{1, 2});
    const double expect[19] = {8.0 / 27, 0, 0, 4.0 / 27, 0, 0, 4.0 / 27, 0, 0, 6.0 / 27,
                               0, 0, 2.0 / 27, 0, 0, 2.0 / 27, 0, 0, 1.0 / 27};
    for (std::size_t i = 0; i < 19; ++i) {
        CAPTURE(i);
        CHECK(pmf.mass[i] == Catch::Approx(expect[i]).margin(1e-14));
    }
    CHECK_THROWS_AS(pmf_weighted(1, 1, 1, 2, 4), std::invalid_argument);  // not lowest terms
    CHECK_THROWS_AS(pmf_weighted(1, 1, 1, 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(pmf_weighted(-1, 0, 0, 1, 2), std::invalid_argument);
}

TEST_CASE("two_sided_tail sums the symmetric tail exactly", "[pmf]") {
    const LatticePMF s22 = pmf_direct_convolution(2, 2);
    CHECK(two_sided_tail(s22, ScaledThreshold{2, 1}) == 3.0 / 8);   // P(|S| >= 2)
    CHECK(two_sided_tail(s22, ScaledThreshold{4, 2}) == 3.0 / 8);   // same threshold, other scale
    CHECK(two_sided_tail(s22, ScaledThreshold{0, 1}) == 1.0);       // trivial threshold
    CHECK(two_sided_tail(s22, ScaledThreshold{7, 1}) == 0.0);       // beyond the support
    const LatticePMF s21 = pmf_direct_convolution(2, 1);
    CHECK(two_sided_tail(s21, ScaledThreshold{3, 2}) == 0.5);       // P(|S| >= 3/2)
    CHECK(two_sided_tail(s21, ScaledThreshold{1, 2}) == 1.0);       // everything is >= 1/2
    CHECK(two_sided_tail(pmf_direct_convolution(5, 3), ScaledThreshold{13, 2}) == 1.0 / 128);
    // Off-lattice thresholds are rejected rather than silently rounded.
    CHECK_THROWS_AS(two_sided_tail(s22, ScaledThreshold{1, 3}), std::invalid_argument);
    CHECK_THROWS_AS(two_sided_tail(s22, ScaledThreshold{1, -1}), std::invalid_argument);
}

TEST_CASE("compute_probability_via_fft counts one test per call", "[pmf]") {
    TestLedger ledger;
    CHECK(compute_probability_via_fft(2, 2, ScaledThreshold{2, 1}, ledger) ==
          Catch::Approx(3.0 / 8).margin(1e-13));
    CHECK(ledger.tail_evaluations.load() == 1);
    CHECK(compute_probability_via_fft(2, 2, ScaledThreshold{0, 1}, ledger) == 1.0);
    CHECK(ledger.tail_evaluations.load() == 2);  // trivial threshold still counts
    // Thresholds must match the parity of b on the doubled lattice.
    CHECK_THROWS_AS(compute_probability_via_fft(2, 1, ScaledThreshold{1, 1}, ledger),
                    std::domain_error);
    CHECK_THROWS_AS(compute_probability_via_fft(2, 2, ScaledThreshold{1, 3}, ledger),
                    std::invalid_argument);
}

TEST_CASE("shift update equals the from-scratch build", "[pmf]") {
    // Single step at p = 1/2: kernel {-2: 1/4, 0: 1/2, +2: 1/4}.
    const LatticePMF p0 = pmf_weighted(0, 0, 1, 1, 2);
    const LatticePMF p1 = pmf_shift_update(p0, 1, 2);
    CHECK(max_abs_diff(p1, pmf_weighted(0, 1, 2, 1, 2)) <= 1e-13);

    // Longer chains across the reanchor-free range, for several p.
    SplitMix64 rng{96};
    const long long pq[3][2] = {{1, 2}, {1, 3}, {2, 5}};
    double worst = 0.0;
    for (int trial = 0; trial < 6; ++trial) {
        const auto& p = pq[trial % 3];
        const long long v11 = static_cast<long long>(rng.next() % 40);
        const long long v10 = static_cast<long long>(rng.next() % 30);
        const long long v01 = static_cast<long long>(rng.next() % 30);
        const long long steps = 20 + static_cast<long long>(rng.next() % 41);
        LatticePMF pmf = pmf_weighted(v11, v10, v01, p[0], p[1]);
        for (long long s = 0; s < steps; ++s) pmf = pmf_shift_update(pmf, p[0], p[1]);
        worst = std::max(worst, max_abs_diff(pmf, pmf_weighted(v11, v10 + steps, v01 + steps,
                                                               p[0], p[1])));
    }
    INFO("worst chained-update drift: " << worst);
    CHECK(worst <= 1e-10);

    // Spacing mismatch: a PMF built for p = 1/2 cannot be advanced at p = 1/3.
    CHECK_THROWS_AS(pmf_shift_update(p0, 1, 3), std::invalid_argument);
}

TEST_CASE("direct convolution size guards", "[pmf]") {
    CHECK_THROWS_AS(pmf_direct_convolution(4000, 200), std::invalid_argument);
    CHECK_THROWS_AS(pmf_direct_convolution(2000, 2000, 200, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(pmf_direct_convolution(-1, 0), std::invalid_argument);
}
