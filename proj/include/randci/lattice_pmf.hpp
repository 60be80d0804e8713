#pragma once

// Exact-support lattice PMFs for the centered randomization statistic, built
// either by an FFT of the characteristic function (O(K log K)) or by direct
// convolution (O(K^2), used as the oracle's ground truth).
//
// Two families appear:
//  * pmf_rademacher_mix(a, b): the law of S_{a,b} = sum of a Rademacher
//    (+-1) and b half-Rademacher (+-1/2) independent summands, on the
//    half-integer lattice.  This is the randomization law of the centered
//    Horvitz-Thompson statistic under the balanced Bernoulli design, and
//    (rescaled by 2) under the matched-pairs design.
//  * pmf_weighted(v11, v10, v01, u, q): the law of s * S_v where
//    s = u(q-u) and S_v sums three two-point summand types with success
//    probability p = u/q:
//        eta   = +(q-u)/u  w.p. p,   -1        w.p. 1-p   (scaled: +q(q-u), -qu)
//        eps   = +(q-u)^2/(uq) ...                        (scaled: +(q-u)^2, -u(q-u))
//        delta = ...                                      (scaled: +u(q-u), -u^2)
//    This is the law of the centered statistic under Bernoulli(p) assignment
//    for a potential-outcome count vector v = (v11, v10, v01, v00); v00
//    contributes deterministic zeros and does not affect the law.
//
// The FFT recipe evaluates the characteristic function at N >= support-size
// roots of unity, demodulates by the support minimum, and recovers the
// masses with one forward transform.  Tiny negative masses from roundoff are
// clamped to zero; the PMF is renormalized only when the total mass drifts
// by more than 1e-13 (below that, the masses are left untouched).

#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "randci/core.hpp"
#include "randci/fraction.hpp"

namespace randci {

/// Dense PMF on an arithmetic lattice: mass[i] sits at real value
/// spacing * (min_index + i).
struct LatticePMF {
    Frac spacing{1, 2};
    long long min_index = 0;
    std::vector<double> mass;

    long long max_index() const {
        return min_index + static_cast<long long>(mass.size()) - 1;
    }
    double value_at(std::size_t i) const {
        return frac_to_double(spacing) * static_cast<double>(min_index +
                                                             static_cast<long long>(i));
    }
};

namespace detail {

/// Twiddle factors and positive roots of unity for one transform size,
/// cached per size behind a mutex (FFT plans are shared across threads).
struct FftTables {
    std::vector<std::complex<double>> twiddle;  ///< exp(-2*pi*i*k/n), k < n/2
    std::vector<std::complex<double>> roots;    ///< exp(+2*pi*i*k/n), k < n
};

inline const FftTables& fft_tables(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<FftTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<FftTables>();
        slot->twiddle.resize(n / 2);
        slot->roots.resize(n);
        const double step = 2.0 * 3.14159265358979323846 / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto r = std::polar(1.0, step * static_cast<double>(k));
            slot->roots[k] = r;
            if (k < n / 2) slot->twiddle[k] = std::conj(r);
        }
    }
    return *slot;
}

/// In-place iterative radix-2 forward DFT: X_k = sum_j x_j e^{-2 pi i jk/N}.
/// N must be a power of two.
inline void fft_forward(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    const auto& tw = fft_tables(n).twiddle;
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> w = tw[k * stride];
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

inline double powi(double base, long long exp) {
    double r = 1.0;
    double b = base;
    for (long long e = exp; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

inline std::complex<double> cpowi(std::complex<double> base, long long exp) {
    std::complex<double> r = 1.0;
    std::complex<double> b = base;
    for (long long e = exp; e > 0; e >>= 1) {
        if (e & 1) r *= b;
        b *= b;
    }
    return r;
}

/// Clamp tiny negative masses to zero; renormalize only if the total mass
/// drifted by more than 1e-13.
inline void cleanup_masses(std::vector<double>& mass) {
    double total = 0.0;
    for (double& m : mass) {
        if (m < 0.0) m = 0.0;
        total += m;
    }
    if (total > 0.0 && std::abs(1.0 - total) > 1e-13) {
        const double inv = 1.0 / total;
        for (double& m : mass) m *= inv;
    }
}

/// Forward-transform the sampled characteristic values and keep the first
/// `count` masses (the rest are numerically zero by construction).
inline std::vector<double> spectrum_to_masses(std::vector<std::complex<double>>& b,
                                              std::size_t count) {
    fft_forward(b);
    const double inv = 1.0 / static_cast<double>(b.size());
    std::vector<double> mass(count);
    for (std::size_t k = 0; k < count; ++k) mass[k] = b[k].real() * inv;
    cleanup_masses(mass);
    return mass;
}

/// The three scaled two-point summand types of the weighted statistic.
struct WeightedAtoms {
    long long plus[3];
    long long minus[3];
    long long count[3];
};

inline WeightedAtoms weighted_atoms(long long v11, long long v10, long long v01,
                                    long long u, long long q) {
    if (v11 < 0 || v10 < 0 || v01 < 0)
        throw std::invalid_argument("summand counts must be non-negative");
    if (u <= 0 || q <= u)
        throw std::invalid_argument("assignment probability must be in (0,1)");
    if (std::gcd(u, q) != 1)
        throw std::invalid_argument("assignment probability u/q must be in lowest terms");
    return WeightedAtoms{{q * (q - u), (q - u) * (q - u), u * (q - u)},
                         {-q * u, -u * (q - u), -u * u},
                         {v11, v10, v01}};
}

}  // namespace detail

/// PMF of S_{a,b} (a Rademacher + b half-Rademacher summands) on the
/// half-integer lattice, via one forward FFT of size O(a + b).
inline LatticePMF pmf_rademacher_mix(long long a, long long b) {
    if (a < 0 || b < 0) throw std::invalid_argument("summand counts must be non-negative");
    const long long m = 2 * a + b;  // support is {-m..m}/2 in doubled units
    LatticePMF out;
    out.spacing = Frac{1, 2};
    out.min_index = -m;
    if (m == 0) {
        out.mass = {1.0};
        return out;
    }
    const std::size_t span = static_cast<std::size_t>(2 * m + 1);
    const std::size_t n = std::bit_ceil(span);
    const auto& roots = detail::fft_tables(n).roots;
    std::vector<std::complex<double>> b_vec(n);
    const std::size_t mmod = static_cast<std::size_t>(m) % n;
    for (std::size_t j = 0; j < n; ++j) {
        // theta_j = 4*pi*j/N: cos(theta_j) = Re roots[2j mod N],
        // cos(theta_j / 2) = Re roots[j].
        const double c_full = roots[(2 * j) % n].real();
        const double c_half = roots[j].real();
        const double psi = detail::powi(c_full, a) * detail::powi(c_half, b);
        b_vec[j] = roots[(j * mmod) % n] * psi;  // demodulate to start at -m
    }
    out.mass = detail::spectrum_to_masses(b_vec, span);
    return out;
}

/// PMF of the scaled weighted statistic s * S_v (s = u(q-u)) on the integer
/// lattice with spacing 1/s, via one forward FFT of size O(support).
inline LatticePMF pmf_weighted(long long v11, long long v10, long long v01,
                               long long u, long long q) {
    const auto atoms = detail::weighted_atoms(v11, v10, v01, u, q);
    long long lmin = 0;
    long long lmax = 0;
    for (int i = 0; i < 3; ++i) {
        lmin += atoms.count[i] * atoms.minus[i];
        lmax += atoms.count[i] * atoms.plus[i];
    }
    LatticePMF out;
    out.spacing = Frac{1, u * (q - u)};
    out.min_index = lmin;
    const std::size_t span = static_cast<std::size_t>(lmax - lmin + 1);
    if (span == 1) {
        out.mass = {1.0};
        return out;
    }
    const std::size_t n = std::bit_ceil(span);
    const auto& roots = detail::fft_tables(n).roots;
    const double p = static_cast<double>(u) / static_cast<double>(q);
    const auto nn = static_cast<long long>(n);
    auto mod_n = [nn](long long k) -> std::size_t {
        return static_cast<std::size_t>(((k % nn) + nn) % nn);
    };
    const std::size_t plus_m[3] = {mod_n(atoms.plus[0]), mod_n(atoms.plus[1]),
                                   mod_n(atoms.plus[2])};
    const std::size_t minus_m[3] = {mod_n(atoms.minus[0]), mod_n(atoms.minus[1]),
                                    mod_n(atoms.minus[2])};
    const std::size_t demod = mod_n(-lmin);
    std::vector<std::complex<double>> b_vec(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::complex<double> phi = 1.0;
        for (int i = 0; i < 3; ++i) {
            if (atoms.count[i] == 0) continue;
            const std::complex<double> factor =
                p * roots[(j * plus_m[i]) % n] + (1.0 - p) * roots[(j * minus_m[i]) % n];
            phi *= detail::cpowi(factor, atoms.count[i]);
        }
        b_vec[j] = phi * roots[(j * demod) % n];
    }
    out.mass = detail::spectrum_to_masses(b_vec, span);
    return out;
}

namespace detail {

/// Convolve `mass` (lattice-index units) with a two-point law putting
/// weight w_hi at offset hi and 1 - w_hi at offset lo.
inline void conv_two_point(std::vector<double>& mass, long long& min_index,
                           long long lo, long long hi, double w_hi) {
    const auto gap = static_cast<std::size_t>(hi - lo);
    std::vector<double> out(mass.size() + gap, 0.0);
    const double w_lo = 1.0 - w_hi;
    for (std::size_t i = 0; i < mass.size(); ++i) {
        out[i] += mass[i] * w_lo;
        out[i + gap] += mass[i] * w_hi;
    }
    mass.swap(out);
    min_index += lo;
}

}  // namespace detail

/// Direct O(K^2) convolution build of the Rademacher-mix PMF (oracle path).
inline LatticePMF pmf_direct_convolution(long long a, long long b) {
    if (a < 0 || b < 0) throw std::invalid_argument("summand counts must be non-negative");
    if (a + b > 4096) throw std::invalid_argument("direct convolution size guard exceeded");
    LatticePMF out;
    out.spacing = Frac{1, 2};
    out.min_index = 0;
    out.mass = {1.0};
    for (long long i = 0; i < a; ++i)
        detail::conv_two_point(out.mass, out.min_index, -2, +2, 0.5);
    for (long long i = 0; i < b; ++i)
        detail::conv_two_point(out.mass, out.min_index, -1, +1, 0.5);
    return out;
}

/// Direct O(K^2) convolution build of the weighted PMF (oracle path).
inline LatticePMF pmf_direct_convolution(long long v11, long long v10, long long v01,
                                         long long u, long long q) {
    const auto atoms = detail::weighted_atoms(v11, v10, v01, u, q);
    if (v11 + v10 + v01 > 4096)
        throw std::invalid_argument("direct convolution size guard exceeded");
    LatticePMF out;
    out.spacing = Frac{1, u * (q - u)};
    out.min_index = 0;
    out.mass = {1.0};
    const double p = static_cast<double>(u) / static_cast<double>(q);
    for (int i = 0; i < 3; ++i)
        for (long long k = 0; k < atoms.count[i]; ++k)
            detail::conv_two_point(out.mass, out.min_index, atoms.minus[i],
                                   atoms.plus[i], p);
    return out;
}

/// Two-sided tail Pr(|X| >= value/scale) summed directly from the PMF.
/// The threshold must land on the PMF's lattice (its ratio to the spacing
/// must be an integer), otherwise the comparison would silently depend on
/// floating-point rounding of off-lattice values.
inline double two_sided_tail(const LatticePMF& pmf, const ScaledThreshold& thr) {
    if (thr.scale <= 0) throw std::invalid_argument("threshold scale must be positive");
    if (thr.value <= 0) return 1.0;
    // threshold in lattice units: (value/scale) / (sp.num/sp.den)
    const __int128 num = static_cast<__int128>(thr.value) * pmf.spacing.den;
    const __int128 den = static_cast<__int128>(thr.scale) * pmf.spacing.num;
    if (num % den != 0)
        throw std::invalid_argument("lattice mismatch: threshold off the PMF lattice");
    const auto t_idx = static_cast<long long>(num / den);
    double tail = 0.0;
    for (std::size_t i = 0; i < pmf.mass.size(); ++i) {
        const long long idx = pmf.min_index + static_cast<long long>(i);
        if (idx <= -t_idx || idx >= t_idx) tail += pmf.mass[i];
    }
    return tail < 1.0 ? tail : 1.0;
}

/// One randomization test for the balanced/matched families: builds the
/// S_{a,b} PMF by FFT and returns the two-sided tail at the threshold.
/// Counts one tail evaluation in the ledger (also for the trivial
/// threshold <= 0 case, which is still one test).  Thresholds must sit on
/// the support lattice: in doubled units they must match the parity of b.
inline double compute_probability_via_fft(long long a, long long b,
                                          const ScaledThreshold& thr,
                                          TestLedger& ledger) {
    if (a < 0 || b < 0) throw std::invalid_argument("summand counts must be non-negative");
    if (thr.scale <= 0) throw std::invalid_argument("threshold scale must be positive");
    ledger.add_tail();
    if (thr.value <= 0) return 1.0;
    if ((2 * thr.value) % thr.scale != 0)
        throw std::invalid_argument("lattice mismatch: threshold off the PMF lattice");
    const long long doubled = 2 * thr.value / thr.scale;
    if ((doubled - b) % 2 != 0)
        throw std::domain_error("threshold off support: parity mismatch with summand counts");
    const LatticePMF pmf = pmf_rademacher_mix(a, b);
    return two_sided_tail(pmf, thr);
}

/// Incremental update of a weighted PMF along a fixed-candidate enumeration
/// run: the count vector steps (v11, v10, v01, v00) ->
/// (v11, v10+1, v01+1, v00-2), which adds one independent eps summand and
/// one independent delta summand.  The statistic therefore gains an
/// independent increment eps + delta, and the new PMF is the old one
/// convolved with the four-atom law of s*(eps + delta):
///     +q(q-u)        w.p. p^2
///     +(q-u)^2 - u^2 w.p. p(1-p)
///      0             w.p. p(1-p)
///     -qu            w.p. (1-p)^2
/// (atoms accumulate when they coincide, e.g. at p = 1/2 the kernel is
/// {-2: 1/4, 0: 1/2, +2: 1/4} in scaled units).  Cost O(K) per step.
inline LatticePMF pmf_shift_update(const LatticePMF& pmf, long long u, long long q) {
    if (u <= 0 || q <= u) throw std::invalid_argument("assignment probability must be in (0,1)");
    if (!(pmf.spacing == Frac{1, u * (q - u)}))
        throw std::invalid_argument("lattice mismatch: PMF spacing does not match u/q");
    const double p = static_cast<double>(u) / static_cast<double>(q);
    // Scaled offsets relative to the most negative atom -qu (so all >= 0).
    struct Atom {
        long long shift;
        double weight;
    };
    const Atom raw[4] = {{q * (q - u) + q * u, p * p},
                         {(q - u) * (q - u) - u * u + q * u, p * (1.0 - p)},
                         {q * u, p * (1.0 - p)},
                         {0, (1.0 - p) * (1.0 - p)}};
    LatticePMF out;
    out.spacing = pmf.spacing;
    out.min_index = pmf.min_index - q * u;
    out.mass.assign(pmf.mass.size() + static_cast<std::size_t>(q) * q, 0.0);
    for (const Atom& atom : raw) {
        const auto off = static_cast<std::size_t>(atom.shift);
        for (std::size_t i = 0; i < pmf.mass.size(); ++i)
            out.mass[i + off] += pmf.mass[i] * atom.weight;
    }
    return out;
}

}  // namespace randci
