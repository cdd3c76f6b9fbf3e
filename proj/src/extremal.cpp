#include "bilab/extremal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/statistics/linear_regression.hpp>

#include "bilab/bilinear.hpp"
#include "bilab/detail/ndindex.hpp"
#include "bilab/error.hpp"
#include "bilab/parallel.hpp"

namespace bilab::extremal {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream)
{
    return splitmix64(seed ^ splitmix64(stream + 0x51ed27f1c0ffee11ULL));
}

template <class Int>
std::uint64_t chain(std::uint64_t h, std::span<const Int> index)
{
    for (Int v : index) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
    return h;
}

// (lo, hi) integer range of nu with |nu / period - center| < radius
std::pair<long, long> support_range(double center, double radius, double period)
{
    return {static_cast<long>(std::ceil(period * (center - radius))),
            static_cast<long>(std::floor(period * (center + radius)))};
}

double lattice_mass(const BumpProfile& p, double period)
{
    auto [lo, hi] = support_range(0.0, p.outer, period);
    double s = 0;
    for (long v = lo; v <= hi; ++v) {
        const double a = p(v / period);
        s += a * a;
    }
    return s / period;
}

// product of the 1D profile derivative bounds, maximised over |alpha| = order, for a
// multiplier built from disjoint translates of one tensor bump
std::vector<double> tensor_bounds(int n, const BumpProfile& p, double scale)
{
    auto base = product_bump_multiplier(n, p);
    for (double& b : base.derivative_bounds) b *= scale;
    return base.derivative_bounds;
}

using Gauss10 = boost::math::quadrature::gauss<double, 10>;

// nodes and weights of the 10-point rule mapped to [a, b]
void append_gauss(double a, double b, std::vector<double>& x, std::vector<double>& w)
{
    const auto& abs = Gauss10::abscissa();
    const auto& wts = Gauss10::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < abs.size(); ++i) {
        x.push_back(mid - half * abs[i]);
        w.push_back(half * wts[i]);
        x.push_back(mid + half * abs[i]);
        w.push_back(half * wts[i]);
    }
}

constexpr double cutoff_tail = 512.0;

} // namespace

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SignSequence::SignSequence(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

SignSequence SignSequence::constant(int sign)
{
    require(sign == 1 || sign == -1, Errc::invalid_argument, "sign must be +1 or -1");
    SignSequence s;
    s.fill_ = sign;
    return s;
}

int SignSequence::hashed(std::uint64_t key) const
{
    if (fill_ != 0) return fill_;
    return (splitmix64(key) >> 63) ? -1 : 1;
}

int SignSequence::draw(long index) const
{
    if (!frozen_.empty()) {
        auto it = frozen_.find(index);
        if (it != frozen_.end()) return it->second;
    }
    const long one[1] = {index};
    return hashed(chain<long>(mix_key(seed_, stream_), one));
}

int SignSequence::draw(std::span<const int> index) const
{
    if (index.size() == 1) return draw(static_cast<long>(index[0]));
    return hashed(chain<int>(mix_key(seed_, stream_), index));
}

int SignSequence::draw(std::span<const long> index) const
{
    if (index.size() == 1) return draw(index[0]);
    return hashed(chain<long>(mix_key(seed_, stream_), index));
}

SignSequence SignSequence::with_stream(std::uint64_t stream) const
{
    SignSequence s = *this;
    s.stream_ = stream;
    return s;
}

void SignSequence::freeze(long index, int sign)
{
    require(sign == 1 || sign == -1, Errc::invalid_argument, "sign must be +1 or -1");
    frozen_[index] = sign;
}

// ---------------------------------------------------------------------------

Thm12Family::Thm12Family(int N_, int n_, double period_) : n(n_), N(N_), period(period_)
{
    require(N >= 2 && N <= 28, Errc::invalid_argument, "block parameter N must be in [2, 28]");
    require(n >= 1 && n <= 3, Errc::invalid_argument, "dimension must be in [1, 3]");
    require(period >= 1 && std::isfinite(period), Errc::invalid_argument, "period must be >= 1");
}

double Thm12Family::weight(long j) const
{
    return (j >= block_lo() && j <= block_hi()) ? std::ldexp(1.0, -N / 2) * (N % 2 ? std::sqrt(0.5) : 1.0)
                                                : 0.0;
}

std::vector<double> Thm12Family::weights() const
{
    std::vector<double> w(static_cast<std::size_t>(block_hi() + 1), 0.0);
    for (long j = block_lo(); j <= block_hi(); ++j) w[static_cast<std::size_t>(j)] = weight(j);
    return w;
}

int Thm12Family::min_radius() const
{
    const double top = static_cast<double>(block_hi()) + input_profile.outer;
    return static_cast<int>(std::ceil(period * top));
}

FreqLattice Thm12Family::lattice() const { return FreqLattice(n, min_radius(), 2, period); }

double Thm12Family::profile_mass() const { return lattice_mass(input_profile, period); }

double block_coefficient(long l)
{
    if (l < 2) return 0.0;
    const double x = static_cast<double>(l - 1);
    return std::sqrt((1.0 + std::log(x)) / x);
}

std::vector<double> block_coefficients(long l_max)
{
    std::vector<double> c(static_cast<std::size_t>(std::max(0L, l_max + 1)), 0.0);
    for (long l = 2; l <= l_max; ++l) c[static_cast<std::size_t>(l)] = block_coefficient(l);
    return c;
}

std::pair<SpectralFunction, SpectralFunction> build_thm12_pair(const Thm12Family& fam)
{
    return build_thm12_pair(fam, fam.lattice());
}

std::pair<SpectralFunction, SpectralFunction> build_thm12_pair(const Thm12Family& fam,
                                                               const FreqLattice& lat)
{
    require(lat.n == fam.n, Errc::lattice_mismatch, "lattice dimension differs from family");
    require(lat.period == fam.period, Errc::lattice_mismatch, "lattice period differs from family");
    require(lat.radius >= fam.min_radius(), Errc::resource,
            "lattice radius " + std::to_string(lat.radius) + " too small for N = " + std::to_string(fam.N) +
                " (needs " + std::to_string(fam.min_radius()) + ")");
    const double P = fam.period;
    const auto& phi = fam.input_profile;
    SpectralFunction f(lat);
    auto [olo, ohi] = support_range(1.0, phi.outer, P);
    const int extra = fam.n - 1;
    std::vector<int> lo(static_cast<std::size_t>(fam.n)), ext(static_cast<std::size_t>(fam.n));
    for (long j = fam.block_lo(); j <= fam.block_hi(); ++j) {
        auto [jlo, jhi] = support_range(static_cast<double>(j), phi.outer, P);
        lo[0] = static_cast<int>(jlo);
        ext[0] = static_cast<int>(jhi - jlo + 1);
        for (int r = 1; r <= extra; ++r) {
            lo[static_cast<std::size_t>(r)] = static_cast<int>(olo);
            ext[static_cast<std::size_t>(r)] = static_cast<int>(ohi - olo + 1);
        }
        const double b = fam.weight(j);
        for (detail::IndexWalker w(lo, ext); !w.done(); w.next()) {
            auto nu = w.index();
            double v = b * phi(nu[0] / P - static_cast<double>(j)) / P;
            for (int r = 1; r <= extra; ++r) v *= phi(nu[static_cast<std::size_t>(r)] / P - 1.0) / P;
            f.at(nu) += v;
        }
    }
    return {f, f};
}

namespace {

Multiplier::Rule thm12_rule(const Thm12Family& fam, SignSequence signs)
{
    const int n = fam.n;
    const BumpProfile psi = fam.cutoff;
    return [n, psi, signs = std::move(signs)](std::span<const double> z) -> cplx {
        const long j = std::lround(z[0]);
        const long k = std::lround(z[static_cast<std::size_t>(n)]);
        if (j < 1 || k < 1) return 0.0;
        double v = psi(z[0] - static_cast<double>(j));
        if (v == 0) return 0.0;
        v *= psi(z[static_cast<std::size_t>(n)] - static_cast<double>(k));
        for (int r = 1; r < n && v != 0; ++r)
            v *= psi(z[static_cast<std::size_t>(r)] - 1.0) * psi(z[static_cast<std::size_t>(n + r)] - 1.0);
        if (v == 0) return 0.0;
        return static_cast<double>(signs.draw(j + k)) * block_coefficient(j + k) * v;
    };
}

} // namespace

Multiplier thm12_multiplier(const Thm12Family& fam, SignSequence signs)
{
    Multiplier m;
    m.n = fam.n;
    m.eval = thm12_rule(fam, std::move(signs));
    // disjoint bumps with |s_l c_l| <= c_2 = 1
    m.derivative_bounds = tensor_bounds(fam.n, fam.cutoff, 1.0);
    m.feature_width = fam.cutoff.transition_width();
    m.name = "block-family(N=" + std::to_string(fam.N) + ")";
    return m;
}

Rational conv_weight(long l, int N)
{
    require(l >= 2, Errc::invalid_argument, "conv_weight requires l >= 2");
    require(N >= 1 && N <= 40, Errc::invalid_argument, "conv_weight requires 1 <= N <= 40");
    const long lo = 1L << N, hi = (1L << (N + 1)) - 1;
    // each admissible j contributes b_j d_{l-j} = 2^{-N}
    long count = 0;
    for (long j = std::max(1L, lo); j <= std::min(l - 1, hi); ++j) {
        const long k = l - j;
        if (k >= lo && k <= hi) ++count;
    }
    return Rational(count, 1LL << N);
}

double khintchine_l1(std::span<const double> c, std::span<const double> b, std::span<const double> d,
                     double profile_mass, int n)
{
    require(profile_mass >= 0 && n >= 1, Errc::invalid_argument, "khintchine_l1: bad mass or dimension");
    std::vector<std::size_t> bsupp;
    for (std::size_t j = 1; j < b.size(); ++j)
        if (b[j] != 0) bsupp.push_back(j);
    long double total = 0;
    for (std::size_t l = 2; l < c.size(); ++l) {
        if (c[l] == 0) continue;
        long double conv = 0;
        for (std::size_t j : bsupp) {
            if (j >= l) break;
            const std::size_t k = l - j;
            if (k < d.size()) conv += static_cast<long double>(b[j]) * d[k];
        }
        total += static_cast<long double>(c[l]) * c[l] * conv * conv;
    }
    return std::sqrt(static_cast<double>(total)) * std::pow(profile_mass, n);
}

double khintchine_l1(const Thm12Family& fam)
{
    const auto w = fam.weights();
    const auto c = block_coefficients(2 * fam.block_hi());
    return khintchine_l1(c, w, w, fam.profile_mass(), fam.n);
}

RandomizedResult randomized_l1_average(const Thm12Family& fam, int trials, std::uint64_t seed)
{
    return randomized_l1_average(fam, trials, SignSequence(seed));
}

RandomizedResult randomized_l1_average(const Thm12Family& fam, int trials, const SignSequence& base)
{
    require(trials >= 1, Errc::invalid_argument, "trials must be >= 1");
    auto [f, g] = build_thm12_pair(fam);
    RandomizedResult out;
    out.N = fam.N;
    out.trials = trials;
    out.seed = base.seed();
    out.per_trial.assign(static_cast<std::size_t>(trials), 0.0);
    // bounds are sign independent; only the rule changes per trial
    const auto proto = thm12_multiplier(fam, base);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        auto m = proto;
        m.eval = thm12_rule(fam, base.with_stream(t));
        out.per_trial[t] = spectral::lp_norm(bilinear::apply_bilinear(m, f, g), 1.0);
    });
    double s = 0, s2 = 0;
    for (double v : out.per_trial) s += v;
    out.mean = s / trials;
    for (double v : out.per_trial) s2 += (v - out.mean) * (v - out.mean);
    out.std_error = trials > 1 ? std::sqrt(s2 / (trials - 1) / trials) : 0.0;
    auto best = std::max_element(out.per_trial.begin(), out.per_trial.end());
    out.best = *best;
    out.best_trial = static_cast<int>(best - out.per_trial.begin());
    out.square_function = khintchine_l1(fam);
    out.ratio = out.square_function > 0 ? out.mean / out.square_function : 0.0;
    const auto winner = base.with_stream(static_cast<std::uint64_t>(out.best_trial));
    for (long l = 2 * fam.block_lo(); l <= 2 * fam.block_hi() + 1; ++l) out.frozen_signs[l] = winner.draw(l);
    return out;
}

SignSequence frozen_sequence(std::span<const RandomizedResult> blocks)
{
    auto s = SignSequence::constant(1);
    for (const auto& b : blocks)
        for (auto [l, v] : b.frozen_signs) s.freeze(l, v);
    return s;
}

double counterexample_lq_partial(double q, long L)
{
    require(q >= 1, Errc::invalid_argument, "counterexample_lq_partial requires q >= 1");
    require(L >= 2, Errc::invalid_argument, "counterexample_lq_partial requires L >= 2");
    // c_l^q (l-1) = (l-1)^{1-q/2} (1 + log(l-1))^{q/2}
    long double s = 0;
    const long double a = 1.0L - q / 2.0L, b = q / 2.0L;
    for (long l = 2; l <= L; ++l) {
        const long double x = static_cast<long double>(l - 1);
        s += std::pow(x, a) * std::pow(1.0L + std::log(x), b);
    }
    return static_cast<double>(std::pow(s, 1.0L / q));
}

// ---------------------------------------------------------------------------

IndexRange block_I(int N)
{
    require(N >= 4 && N <= 40, Errc::invalid_argument, "block index N must be in [4, 40]");
    return {5 * (1L << (N - 2)) + 1, 6 * (1L << (N - 2)) - 1};
}

IndexRange block_J(int N)
{
    require(N >= 4 && N <= 40, Errc::invalid_argument, "block index N must be in [4, 40]");
    return {5 * (1L << (N - 1)) + 2, 6 * (1L << (N - 1)) - 2};
}

IndexRange block_L(int N)
{
    require(N >= 4 && N <= 40, Errc::invalid_argument, "block index N must be in [4, 40]");
    return {41 * (1L << (N - 4)) + 1, 43 * (1L << (N - 4))};
}

long pair_count(long l, int N)
{
    const auto I = block_I(N);
    return std::max(0L, std::min(I.hi, l - I.lo) - std::max(I.lo, l - I.hi) + 1);
}

Thm13Family::Thm13Family(int n_) : n(n_)
{
    require(n >= 1 && n <= 2, Errc::invalid_argument, "multi-scale family supports n = 1 or 2");
}

double Thm13Family::coefficient(long p) const
{
    require(p >= 2, Errc::invalid_argument, "coefficient index must be >= 2");
    const double x = static_cast<double>(p);
    return std::pow(x, -0.5) * std::pow(std::log(x), -1.0 / n);
}

double Thm13Family::spatial_cutoff(double y) const
{
    y = std::abs(y);
    if (y > cutoff_tail) return 0.0;
    const double a = cutoff_hat.inner, b = cutoff_hat.outer;
    // flat part in closed form, transition by composite Gauss
    const double flat = y == 0 ? 2.0 * a : std::sin(two_pi * y * a) / (std::numbers::pi * y);
    const int panels = 2 + static_cast<int>(std::ceil(2.0 * y * (b - a)));
    const double h = (b - a) / panels;
    double tr = 0;
    for (int i = 0; i < panels; ++i)
        tr += boost::math::quadrature::gauss<double, 20>::integrate(
            [&](double xi) { return cutoff_hat(xi) * std::cos(two_pi * y * xi); }, a + i * h, a + (i + 1) * h);
    return flat + 2.0 * tr;
}

Multiplier Thm13Family::multiplier(SignSequence signs, int N_lo, int N_hi) const
{
    require(N_lo >= 4 && N_hi >= N_lo && N_hi <= 40, Errc::invalid_argument, "block range must satisfy 4 <= lo <= hi");
    const int dim = n;
    const BumpProfile hat = cutoff_hat;
    const Thm13Family self = *this;
    Multiplier m;
    m.n = n;
    m.eval = [dim, hat, self, N_lo, N_hi, signs = std::move(signs)](std::span<const double> z) -> cplx {
        long l[2];
        double v = 1.0;
        int block = -1;
        for (int a = 0; a < 2 * dim; ++a) {
            const double t = z[static_cast<std::size_t>(a)];
            const long j = std::lround(t);
            if (j < 1) return 0.0;
            v *= hat(t - static_cast<double>(j));
            if (v == 0) return 0.0;
            const int N = static_cast<int>(std::bit_width(static_cast<unsigned long>(j))) - 1;
            if (N < N_lo || N > N_hi || !block_I(N).contains(j)) return 0.0;
            if (block < 0) block = N;
            if (N != block) return 0.0;
            if (a < dim) l[a] = j;
            else l[a - dim] += j;
        }
        for (int r = 0; r < dim; ++r) v *= self.coefficient(l[r]);
        return static_cast<double>(signs.draw(std::span<const long>(l, static_cast<std::size_t>(dim)))) * v;
    };
    double cmax = 1.0;
    for (int r = 0; r < n; ++r) cmax *= coefficient(block_J(N_lo).lo);
    m.derivative_bounds = tensor_bounds(n, hat, cmax);
    m.feature_width = hat.transition_width();
    m.name = "multiscale-family(N=" + std::to_string(N_lo) + ".." + std::to_string(N_hi) + ")";
    return m;
}

SpectralFunction Thm13Family::input_spectrum(const FreqLattice& lat) const
{
    require(lat.n == n, Errc::lattice_mismatch, "lattice dimension differs from family");
    const double P = lat.period;
    auto [lo, hi] = support_range(input_center, input_hat.outer, P);
    require(hi <= lat.radius, Errc::resource, "lattice too small for the input spectrum");
    SpectralFunction f(lat);
    for (detail::IndexWalker w(std::vector<int>(static_cast<std::size_t>(n), static_cast<int>(lo)),
                               std::vector<int>(static_cast<std::size_t>(n), static_cast<int>(hi - lo + 1)));
         !w.done(); w.next()) {
        auto nu = w.index();
        double v = 1.0;
        for (int r = 0; r < n; ++r) v *= input_hat(nu[static_cast<std::size_t>(r)] / P - input_center) / P;
        f.at(nu) = v;
    }
    return f;
}

LocalizationReport check_localization(const Thm13Family& fam, int K, int N_max)
{
    require(K >= 4 && N_max >= 4 && K <= 40 && N_max <= 40, Errc::invalid_argument, "scales must be in [4, 40]");
    LocalizationReport rep;
    rep.K = K;
    rep.N_max = N_max;
    // the argument needs supp input in (1, 2) and input == 1 on [5/4, 3/2]
    const auto& p = fam.input_hat;
    if (fam.input_center - p.outer < 1.0 || fam.input_center + p.outer > 2.0 ||
        fam.input_center - p.inner > 1.25 || fam.input_center + p.inner < 1.5)
        rep.inside_flat = false;
    const long long scale = 10LL << K;
    const Rational one(1), two(2), flat_lo(5, 4), flat_hi(3, 2);
    for (int N = 4; N <= N_max; ++N) {
        const auto I = block_I(N);
        for (long j = I.lo; j <= I.hi; ++j) {
            ++rep.checked;
            // |2^K xi - j| <= 1/10 with xi in (1, 2)
            const Rational lo(10LL * j - 1, scale), hi(10LL * j + 1, scale);
            if (!(lo < two && hi > one)) continue;
            ++rep.meeting;
            if (N != K) rep.only_block_K = false;
            if (lo < flat_lo || hi > flat_hi) rep.inside_flat = false;
        }
    }
    return rep;
}

cplx thm13_closed_form(const Thm13Family& fam, std::span<const int> scales, const SignSequence& signs,
                       std::span<const double> x)
{
    require(static_cast<int>(x.size()) == fam.n, Errc::invalid_argument, "point dimension mismatch");
    cplx total = 0;
    for (int K : scales) {
        const double s = std::ldexp(1.0, K);
        const auto J = block_J(K);
        // per-axis factor table: c_l count_l 2^{-2K} psi(x/2^K)^2 e^{2 pi i x l / 2^K}
        std::vector<std::vector<cplx>> axis(static_cast<std::size_t>(fam.n));
        for (int r = 0; r < fam.n; ++r) {
            const double xr = x[static_cast<std::size_t>(r)];
            const double env = std::pow(fam.spatial_cutoff(xr / s), 2) / (s * s);
            auto& row = axis[static_cast<std::size_t>(r)];
            row.reserve(static_cast<std::size_t>(J.size()));
            for (long l = J.lo; l <= J.hi; ++l) {
                const double phase = two_pi * std::fmod(xr * static_cast<double>(l) / s, 1.0);
                row.push_back(fam.coefficient(l) * static_cast<double>(pair_count(l, K)) * env *
                              std::polar(1.0, phase));
            }
        }
        std::vector<int> lo(static_cast<std::size_t>(fam.n), 0), ext(static_cast<std::size_t>(fam.n),
                                                                      static_cast<int>(J.size()));
        std::vector<long> l(static_cast<std::size_t>(fam.n));
        for (detail::IndexWalker w(lo, ext); !w.done(); w.next()) {
            auto i = w.index();
            cplx v = 1.0;
            for (int r = 0; r < fam.n; ++r) {
                v *= axis[static_cast<std::size_t>(r)][static_cast<std::size_t>(i[static_cast<std::size_t>(r)])];
                l[static_cast<std::size_t>(r)] = J.lo + i[static_cast<std::size_t>(r)];
            }
            total += static_cast<double>(signs.draw(std::span<const long>(l))) * v;
        }
    }
    return total;
}

Thm13Result thm13_square_function(const Thm13Family& fam, std::span<const int> scales)
{
    require(!scales.empty(), Errc::invalid_argument, "scale set must be nonempty");
    Thm13Result res;
    res.n = fam.n;
    res.scales.assign(scales.begin(), scales.end());
    int top = 0;
    for (int K : scales) {
        require(K >= 4 && K <= 30, Errc::invalid_argument, "scales must lie in [4, 30]");
        top = std::max(top, K);
    }
    std::vector<int> sorted = res.scales;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), Errc::invalid_argument,
            "scales must be distinct");

    // A_K = (sum_{p in J_K} c_p^2 count_p^2)^n
    std::vector<double> amp;
    for (int K : scales) {
        const auto J = block_J(K);
        long double s = 0;
        for (long p = J.lo; p <= J.hi; ++p) {
            const long double c = fam.coefficient(p), w = static_cast<long double>(pair_count(p, K));
            s += c * c * w * w;
        }
        amp.push_back(std::pow(static_cast<double>(s), fam.n));
        const auto L = block_L(K);
        long double t = 0;
        for (long p = L.lo; p <= L.hi; ++p) t += std::pow(static_cast<long double>(fam.coefficient(p)), 2);
        res.level_sum += std::pow(static_cast<double>(t), fam.n / 2.0);
        res.harmonic += 1.0 / K;
        res.localized = res.localized && check_localization(fam, K, K + 3).ok();
    }

    // half-line nodes: [0, 4] then octaves up to 2^top times the cutoff tail
    std::vector<double> xs, ws;
    const int panels = std::max(1, fam.quadrature_panels);
    for (int i = 0; i < panels; ++i) append_gauss(4.0 * i / panels, 4.0 * (i + 1) / panels, xs, ws);
    const int last = top + static_cast<int>(std::log2(cutoff_tail)) + 1;
    for (int o = 2; o < last; ++o) {
        const double a = std::ldexp(1.0, o), b = std::ldexp(1.0, o + 1);
        for (int i = 0; i < panels; ++i) append_gauss(a + (b - a) * i / panels, a + (b - a) * (i + 1) / panels, xs, ws);
    }
    const std::size_t nodes = xs.size(), S = scales.size();
    // g[k][i] = 2^{-4K} psi(x_i / 2^K)^4
    std::vector<std::vector<double>> g(S, std::vector<double>(nodes));
    parallel_for(S * nodes, [&](std::size_t idx) {
        const std::size_t k = idx / nodes, i = idx % nodes;
        const double s = std::ldexp(1.0, scales[k]);
        const double p = fam.spatial_cutoff(xs[i] / s);
        g[k][i] = std::pow(p * p / (s * s), 2);
    });

    double total = 0;
    if (fam.n == 1) {
        for (std::size_t i = 0; i < nodes; ++i) {
            double v = 0;
            for (std::size_t k = 0; k < S; ++k) v += amp[k] * g[k][i];
            total += ws[i] * std::sqrt(v);
        }
        total *= 2.0;
    } else {
        std::vector<double> rows(nodes, 0.0);
        parallel_for(nodes, [&](std::size_t i) {
            double acc = 0;
            for (std::size_t j = 0; j < nodes; ++j) {
                double v = 0;
                for (std::size_t k = 0; k < S; ++k) v += amp[k] * g[k][i] * g[k][j];
                acc += ws[j] * std::sqrt(v);
            }
            rows[i] = ws[i] * acc;
        });
        for (double r : rows) total += r;
        total *= 4.0;
    }
    res.square_function = total;
    res.ratio = total / res.harmonic;

    // a dyadic A with the largest int_A^{2A} |psi|^2
    for (int i = -4; i <= 8; ++i) {
        const double A = std::ldexp(1.0, i);
        double mass = 0;
        for (int p = 0; p < 16; ++p)
            mass += boost::math::quadrature::gauss<double, 20>::integrate(
                [&](double y) { return std::pow(fam.spatial_cutoff(y), 2); }, A + A * p / 16, A + A * (p + 1) / 16);
        if (mass > res.anchor_mass) {
            res.anchor_mass = mass;
            res.anchor = A;
        }
    }
    return res;
}

Thm13CrossCheck thm13_cross_check(const Thm13Family& fam, std::span<const int> scales, const SignSequence& signs,
                                  int per_unit)
{
    require(fam.n == 1, Errc::invalid_argument, "cross check runs at n = 1");
    require(!scales.empty(), Errc::invalid_argument, "scale set must be nonempty");
    require(per_unit >= 32, Errc::invalid_argument, "per_unit must be >= 32");
    const int k_lo = *std::min_element(scales.begin(), scales.end());
    const int k_hi = *std::max_element(scales.begin(), scales.end());
    require(static_cast<std::size_t>(k_hi - k_lo + 1) == scales.size(), Errc::invalid_argument,
            "cross check needs a contiguous scale range");
    require(k_hi <= 8, Errc::resource, "cross check limited to K <= 8");
    Thm13CrossCheck out;
    out.K_max = k_hi;
    out.period = std::ldexp(static_cast<double>(per_unit), k_hi);
    const int radius = static_cast<int>(std::ceil(out.period * (fam.input_center + fam.input_hat.outer))) + 1;
    const FreqLattice lat(1, radius, 2, out.period);
    const auto F = fam.input_spectrum(lat);

    bilinear::DilatedSum T;
    T.base = fam.multiplier(signs, k_lo, k_hi);
    T.k_min = k_lo;
    T.k_max = k_hi;
    const auto u = bilinear::apply_dilated_sum(T, F, F).value;

    std::vector<double> err(u.size());
    std::vector<double> mag(u.size());
    parallel_for(u.size(), [&](std::size_t i) {
        double x = static_cast<double>(i) * u.step;
        if (x >= out.period / 2) x -= out.period;
        const double xs[1] = {x};
        const cplx ref = thm13_closed_form(fam, scales, signs, xs);
        err[i] = std::abs(u.samples[i] - ref);
        mag[i] = std::abs(ref);
    });
    out.max_abs_error = *std::max_element(err.begin(), err.end());
    out.max_value = *std::max_element(mag.begin(), mag.end());
    return out;
}

// ---------------------------------------------------------------------------

SharpnessResult sharpness_exponent_test(long N, double eps, double r)
{
    require(N >= 1 && eps > 0 && r > 0, Errc::invalid_argument, "sharpness test needs N >= 1, eps > 0, r > 0");
    SharpnessResult out{N, eps, r, 0, 0, 0};
    const double bval = 1.0 / std::sqrt(static_cast<double>(N));
    long double lhs = 0, cmass = 0, b2 = 0;
    for (long l = 2; l <= N; ++l) {
        // sum_{j} b_j d_{l-j} over 1 <= j, l-j <= N
        const long terms = std::min(l - 1, 2 * N + 1 - l);
        const long double conv = static_cast<long double>(terms) * bval * bval;
        lhs += static_cast<long double>(eps) * eps * conv * conv;
        cmass += static_cast<long double>(eps) * eps * (l - 1);
    }
    for (long j = 1; j <= N; ++j) b2 += static_cast<long double>(bval) * bval;
    out.lhs = static_cast<double>(lhs);
    out.rhs = static_cast<double>(std::pow(cmass, static_cast<long double>(r)) * b2 * b2);
    // with nothing active both sides vanish and the inequality holds with any constant
    out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
    return out;
}

ScalingRecord derivative_count_test(int lambda, double q, int n, const ScalingOptions& opts)
{
    require(lambda >= 0 && lambda <= 30, Errc::invalid_argument, "lambda must be in [0, 30]");
    require(q >= 1 && q < 4, Errc::invalid_argument, "q must be in [1, 4)");
    require(n >= 1 && n <= 2, Errc::invalid_argument, "scaling test supports n = 1 or 2");
    const BumpProfile phi_hat(1.0 / 200, 1.0 / 100);
    const BumpProfile psi(1.0 / 20, 1.0 / 10);
    const double base = opts.base_period;
    require(base * phi_hat.outer >= 8, Errc::resource, "base period too small to resolve the input bump");

    ScalingRecord rec;
    rec.lambda = lambda;
    rec.q = q;
    rec.n = n;
    rec.derivatives = opts.derivatives >= 0 ? opts.derivatives : static_cast<int>(std::floor(2.0 * n / (4.0 - q))) + 1;
    rec.exponent = lambda * (rec.derivatives * (1.0 - q / 4.0) - n / 2.0);

    const double scale = std::ldexp(1.0, lambda);
    const auto m = dilate(product_bump_multiplier(n, psi), scale);

    // f_lambda^(xi) = 2^{lambda n / 2} prod phi_hat(2^lambda xi); on the torus of period base * 2^lambda
    // the lattice samples are identical for every lambda
    const double P = base * scale;
    const int radius = static_cast<int>(std::ceil(base * phi_hat.outer)) + 1;
    const FreqLattice lat(n, radius, 2, P);
    SpectralFunction f(lat);
    const double amp = std::pow(scale, n / 2.0) / std::pow(P, n);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const auto nu = lat.point(i);
        double v = amp;
        for (int a : nu) v *= phi_hat(a / base);
        f.coeffs[i] = v;
    }
    rec.input_l2 = f.l2_norm();
    rec.output_l1 = spectral::lp_norm(bilinear::apply_bilinear(m, f, f), 1.0);

    const double edge = 0.125 / scale;
    rec.lq_norm = spectral::multiplier_lq_norm(m, q, Box::cube(2 * n, -edge, edge), opts.lq_mesh / scale).value;
    rec.lq_scaled = rec.lq_norm * std::pow(scale, 2.0 * n / q);
    rec.c0 = spectral::sup_derivative_bound(m, rec.derivatives);
    return rec;
}

GrowthFit fit_line(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size() && x.size() >= 2, Errc::invalid_argument, "fit_line needs two or more points");
    std::vector<double> xv(x.begin(), x.end()), yv(y.begin(), y.end());
    auto [c0, c1] = boost::math::statistics::simple_ordinary_least_squares(xv, yv);
    return {c1, c0};
}

double dispersion(std::span<const double> v)
{
    require(!v.empty(), Errc::invalid_argument, "dispersion of empty set");
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return (*hi - *lo) / mean;
}

} // namespace bilab::extremal
