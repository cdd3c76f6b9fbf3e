#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "bilab/multiplier.hpp"
#include "bilab/spectral.hpp"

namespace bilab::extremal {

using spectral::BumpProfile;
using spectral::FreqLattice;
using spectral::SpectralFunction;

// Counter-based random signs: draw(i) depends only on (seed, stream, i).
// Frozen entries override the draw; a nonzero fill replaces randomness entirely.
class SignSequence {
public:
    explicit SignSequence(std::uint64_t seed = 0, std::uint64_t stream = 0);
    static SignSequence constant(int sign);

    int draw(long index) const;
    int draw(std::span<const int> index) const;
    int draw(std::span<const long> index) const;

    SignSequence with_stream(std::uint64_t stream) const;
    void freeze(long index, int sign);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    const std::map<long, int>& frozen() const { return frozen_; }

private:
    int hashed(std::uint64_t key) const;

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    int fill_ = 0;
    std::map<long, int> frozen_;
};

std::uint64_t splitmix64(std::uint64_t x);

// ---------------------------------------------------------------------------
// one-dimensional block family: b_j = d_j = 2^{-N/2} on [2^N, 2^{N+1} - 1]

struct Thm12Family {
    int n = 1;
    int N = 4;
    double period = 1.0;
    BumpProfile input_profile{1.0 / 200, 1.0 / 100};   // support 1/100
    BumpProfile cutoff{1.0 / 20, 1.0 / 10};           // 1 on 1/20, 0 beyond 1/10

    Thm12Family() = default;
    Thm12Family(int N, int n = 1, double period = 1.0);

    long block_lo() const { return 1L << N; }
    long block_hi() const { return (1L << (N + 1)) - 1; }
    double weight(long j) const;            // b_j = d_j
    std::vector<double> weights() const;    // indexed by j, entry 0 unused
    int min_radius() const;
    FreqLattice lattice() const;
    // sum over the periodic cell of |phi|^2, per axis
    double profile_mass() const;
};

// c_l = (l-1)^{-1/2} (1 + log(l-1))^{1/2}; zero for l < 2
double block_coefficient(long l);
std::vector<double> block_coefficients(long l_max);

std::pair<SpectralFunction, SpectralFunction> build_thm12_pair(const Thm12Family& fam);
std::pair<SpectralFunction, SpectralFunction> build_thm12_pair(const Thm12Family& fam,
                                                               const FreqLattice& lat);

// sum_{j,k >= 1} s_{j+k} c_{j+k} psi(xi_1 - j) psi(eta_1 - k) prod_{r>=2} psi(xi_r - 1) psi(eta_r - 1)
Multiplier thm12_multiplier(const Thm12Family& fam, SignSequence signs);

using Rational = boost::rational<long long>;

// exact sum_{j=1}^{l-1} b_j d_{l-j} for the block sequences of parameter N
Rational conv_weight(long l, int N);

// (sum_l c_l^2 (sum_j b_j d_{l-j})^2)^{1/2} * mass^n ; vectors indexed by natural index
double khintchine_l1(std::span<const double> c, std::span<const double> b,
                     std::span<const double> d, double profile_mass = 1.0, int n = 1);
double khintchine_l1(const Thm12Family& fam);

struct RandomizedResult {
    int N = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double best = 0.0;
    int best_trial = 0;
    double square_function = 0.0;
    double ratio = 0.0;   // mean / square_function
    std::vector<double> per_trial;
    // signs of the best trial on [2^{N+1}, 2^{N+2} - 1]
    std::map<long, int> frozen_signs;
};

// Monte-Carlo mean of || T_{m_t}(f^N, g^N) ||_1 over independent sign streams
RandomizedResult randomized_l1_average(const Thm12Family& fam, int trials, std::uint64_t seed);
// trial t uses base.with_stream(t)
RandomizedResult randomized_l1_average(const Thm12Family& fam, int trials, const SignSequence& base);

// s_l = frozen sign of the owning block where recorded, +1 elsewhere
SignSequence frozen_sequence(std::span<const RandomizedResult> blocks);

// (sum_{l=2}^L c_l^q (l-1))^{1/q}
double counterexample_lq_partial(double q, long L);

// ---------------------------------------------------------------------------
// multi-scale family

struct IndexRange {
    long lo = 0;
    long hi = -1;
    bool contains(long v) const { return v >= lo && v <= hi; }
    long size() const { return hi >= lo ? hi - lo + 1 : 0; }
    bool operator==(const IndexRange&) const = default;
};

// per-axis ranges; the sets themselves are the n-fold products
IndexRange block_I(int N);
IndexRange block_J(int N);
IndexRange block_L(int N);
// number of (j, k) in block_I(N)^2 with j + k = l
long pair_count(long l, int N);

struct Thm13Family {
    int n = 1;
    BumpProfile cutoff_hat{1.0 / 20, 1.0 / 10};        // Fourier side of the spatial bump
    BumpProfile input_hat{0.125, 0.325};               // 1 on [5/4, 3/2], support in (1, 2)
    double input_center = 1.375;
    int quadrature_panels = 32;                        // per octave in the spatial integral

    Thm13Family() = default;
    explicit Thm13Family(int n);

    // c_p = p^{-1/2} (log p)^{-1/n}, p >= 42
    double coefficient(long p) const;
    // inverse transform of cutoff_hat, evaluated by Gauss quadrature
    double spatial_cutoff(double y) const;
    // blocks N_lo..N_hi of m_t
    Multiplier multiplier(SignSequence signs, int N_lo, int N_hi) const;
    SpectralFunction input_spectrum(const FreqLattice& lat) const;
};

struct LocalizationReport {
    int K = 0;
    int N_max = 0;
    long checked = 0;
    long meeting = 0;        // indices whose bump meets the input support
    bool only_block_K = true;
    bool inside_flat = true;
    bool ok() const { return only_block_K && inside_flat; }
};

// exact rational check of which block indices survive against the input spectrum
LocalizationReport check_localization(const Thm13Family& fam, int K, int N_max);

// closed form of sum_{K in S} T_{m_t(2^K .)}(F, G) at x
cplx thm13_closed_form(const Thm13Family& fam, std::span<const int> scales,
                       const SignSequence& signs, std::span<const double> x);

struct Thm13Result {
    int n = 1;
    std::vector<int> scales;
    double square_function = 0.0;
    double harmonic = 0.0;       // sum_{K in S} 1/K
    double level_sum = 0.0;      // sum_K (sum_{p in L_K} c_p^2)^{n/2}
    double ratio = 0.0;          // square_function / harmonic
    double anchor = 0.0;         // A with int_A^{2A} |psi|^2 maximal on a dyadic grid
    double anchor_mass = 0.0;
    bool localized = true;
};

// Khintchine square function of T_t^S(F, G) integrated over R^n
Thm13Result thm13_square_function(const Thm13Family& fam, std::span<const int> scales);

struct Thm13CrossCheck {
    int K_max = 0;
    double period = 0.0;
    double max_abs_error = 0.0;
    double max_value = 0.0;
    double relative_error() const { return max_value > 0 ? max_abs_error / max_value : 0.0; }
};

// apply the dilated sum on a torus of period 2^{K_max} * per_unit and compare
// against the closed form at every grid point (n = 1)
Thm13CrossCheck thm13_cross_check(const Thm13Family& fam, std::span<const int> scales,
                                  const SignSequence& signs, int per_unit = 256);

// ---------------------------------------------------------------------------
// exponent and derivative-count sharpness

struct SharpnessResult {
    long N = 0;
    double eps = 0.0;
    double r = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;   // lhs / rhs
};

SharpnessResult sharpness_exponent_test(long N, double eps, double r);

struct ScalingRecord {
    int lambda = 0;
    double q = 2.0;
    int n = 1;
    int derivatives = 0;
    double output_l1 = 0.0;       // || T_{m_lambda}(f_lambda, g_lambda) ||_1
    double input_l2 = 0.0;        // || f_lambda ||_2
    double lq_norm = 0.0;         // || m_lambda ||_{L^q}
    double lq_scaled = 0.0;       // lq_norm * 2^{2 n lambda / q}
    double c0 = 0.0;              // max_{|alpha| <= derivatives} sup |d^alpha m_lambda|
    double exponent = 0.0;        // lambda (M (1 - q/4) - n/2)
};

struct ScalingOptions {
    int derivatives = -1;         // < 0 picks floor(2n / (4 - q)) + 1
    double base_period = 1600.0;
    double lq_mesh = 1.0 / 400;
};

ScalingRecord derivative_count_test(int lambda, double q, int n, const ScalingOptions& opts = {});

// ---------------------------------------------------------------------------

struct GrowthFit {
    double slope = 0.0;
    double intercept = 0.0;
};

GrowthFit fit_line(std::span<const double> x, std::span<const double> y);
// (max - min) / mean
double dispersion(std::span<const double> v);

} // namespace bilab::extremal
