#include "bilab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/factorials.hpp>

#include "bilab/detail/ndindex.hpp"
#include "fft.hpp"

namespace bilab::spectral {

FreqLattice::FreqLattice(int n_, int radius_, int oversample_, double period_)
    : n(n_), radius(radius_), oversample(oversample_), period(period_)
{
    require(n >= 1, Errc::invalid_argument, "lattice dimension must be >= 1");
    require(radius >= 1, Errc::invalid_argument, "lattice radius must be >= 1");
    require(oversample >= 1, Errc::invalid_argument, "oversample must be >= 1");
    require(std::isfinite(period) && period > 0, Errc::invalid_argument, "period must be > 0");
}

std::size_t FreqLattice::size() const
{
    std::size_t s = 1;
    for (int a = 0; a < n; ++a) s *= static_cast<std::size_t>(side());
    return s;
}

std::size_t FreqLattice::sample_count() const
{
    std::size_t s = 1;
    for (int a = 0; a < n; ++a) s *= static_cast<std::size_t>(samples_per_axis());
    return s;
}

bool FreqLattice::contains(std::span<const int> nu) const
{
    if (static_cast<int>(nu.size()) != n) return false;
    return std::all_of(nu.begin(), nu.end(), [&](int v) { return v >= -radius && v <= radius; });
}

std::size_t FreqLattice::index(std::span<const int> nu) const
{
    require(contains(nu), Errc::invalid_argument, "frequency outside lattice");
    std::size_t idx = 0;
    for (int v : nu) idx = idx * static_cast<std::size_t>(side()) + static_cast<std::size_t>(v + radius);
    return idx;
}

std::vector<int> FreqLattice::point(std::size_t idx) const
{
    std::vector<int> nu(static_cast<std::size_t>(n));
    for (int a = n - 1; a >= 0; --a) {
        nu[static_cast<std::size_t>(a)] = static_cast<int>(idx % static_cast<std::size_t>(side())) - radius;
        idx /= static_cast<std::size_t>(side());
    }
    return nu;
}

SpectralFunction::SpectralFunction(const FreqLattice& lat) : lattice(lat), coeffs(lat.size()) {}

SpectralFunction::SpectralFunction(const FreqLattice& lat, std::vector<cplx> c)
    : lattice(lat), coeffs(std::move(c))
{
    require(coeffs.size() == lattice.size(), Errc::invalid_argument, "coefficient count mismatch");
}

double SpectralFunction::l2_norm() const
{
    double s = 0;
    for (const auto& c : coeffs) s += std::norm(c);
    return std::sqrt(std::pow(lattice.period, lattice.n) * s);
}

SpectralFunction& SpectralFunction::operator+=(const SpectralFunction& o)
{
    require(lattice == o.lattice, Errc::lattice_mismatch, "lattice mismatch in sum");
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
    return *this;
}

SpectralFunction& SpectralFunction::operator*=(cplx s)
{
    for (auto& c : coeffs) c *= s;
    return *this;
}

SpectralFunction operator+(SpectralFunction a, const SpectralFunction& b) { return a += b; }
SpectralFunction operator*(cplx s, SpectralFunction a) { return a *= s; }

double GridFunction::cell_volume() const { return std::pow(step, n); }

double smoothstep(int k, double t, int derivative)
{
    if (t <= 0) return 0.0;
    if (t >= 1) return derivative == 0 ? 1.0 : 0.0;
    // S(t) = 1 - S(1-t); evaluating near 0 avoids cancellation
    if (t > 0.5) {
        const double mirrored = smoothstep(k, 1.0 - t, derivative);
        if (derivative == 0) return 1.0 - mirrored;
        return derivative % 2 ? mirrored : -mirrored;
    }
    // S_k(t) = t^{k+1} sum_j C(k+j,j) C(2k+1,k-j) (-t)^j as a power series in t
    thread_local std::vector<std::vector<double>> cache;
    if (cache.size() <= static_cast<std::size_t>(k)) cache.resize(static_cast<std::size_t>(k) + 1);
    auto& coef = cache[static_cast<std::size_t>(k)];
    if (coef.empty()) {
        coef.assign(static_cast<std::size_t>(2 * k + 2), 0.0);
        for (int j = 0; j <= k; ++j) {
            double c = boost::math::binomial_coefficient<double>(static_cast<unsigned>(k + j), static_cast<unsigned>(j)) *
                       boost::math::binomial_coefficient<double>(static_cast<unsigned>(2 * k + 1), static_cast<unsigned>(k - j));
            coef[static_cast<std::size_t>(k + 1 + j)] = j % 2 ? -c : c;
        }
    }
    double value = 0;
    for (int power = 2 * k + 1; power >= derivative; --power) {
        double falling = 1;
        for (int d = 0; d < derivative; ++d) falling *= power - d;
        value = value * t + coef[static_cast<std::size_t>(power)] * falling;
    }
    return value;
}

BumpProfile::BumpProfile(double inner_, double outer_, int smoothness_, BumpKind kind_)
    : kind(kind_), inner(inner_), outer(outer_), smoothness(smoothness_)
{
    require(inner >= 0 && outer > inner, Errc::invalid_argument, "bump needs 0 <= inner < outer");
    require(smoothness >= 1, Errc::invalid_argument, "bump smoothness must be >= 1");
}

double BumpProfile::operator()(double x) const
{
    const double r = std::abs(x);
    if (r <= inner) return 1.0;
    if (r >= outer) return 0.0;
    return smoothstep(smoothness, (outer - r) / (outer - inner));
}

double BumpProfile::derivative(double x, int order) const
{
    if (order == 0) return (*this)(x);
    const double r = std::abs(x);
    if (r <= inner || r >= outer) return 0.0;
    const double w = outer - inner;
    const double t = (outer - r) / w;
    // d/dx t = -sign(x)/w
    const double chain = std::pow(-(x < 0 ? -1.0 : 1.0) / w, order);
    return smoothstep(smoothness, t, order) * chain;
}

double BumpProfile::derivative_sup(int order) const
{
    if (order == 0) return 1.0;
    if (order > 2 * smoothness + 1) return 0.0;
    const double w = outer - inner;
    if (order == 1) {
        // S_k'(t) = (2k+1)!/(k!)^2 t^k (1-t)^k peaks at t = 1/2
        const int k = smoothness;
        const double c = boost::math::factorial<double>(static_cast<unsigned>(2 * k + 1)) /
                         std::pow(boost::math::factorial<double>(static_cast<unsigned>(k)), 2);
        return c * std::pow(0.25, k) / w;
    }
    double best = 0;
    constexpr int samples = 20000;
    for (int i = 0; i <= samples; ++i)
        best = std::max(best, std::abs(smoothstep(smoothness, double(i) / samples, order)));
    return best / std::pow(w, order);
}

std::string BumpProfile::describe() const
{
    std::ostringstream os;
    os << (kind == BumpKind::fourier_compact ? "fourier-compact" : "space-compact")
       << " smoothstep order " << smoothness << " inner " << inner << " outer " << outer;
    return os.str();
}

GridFunction synthesize(const SpectralFunction& f) { return synthesize(f, f.lattice.samples_per_axis()); }

GridFunction synthesize(const SpectralFunction& f, int samples_per_axis)
{
    const auto& lat = f.lattice;
    require(samples_per_axis >= 1, Errc::invalid_argument, "synthesis grid must be nonempty");
    const int S = samples_per_axis;
    std::size_t total = 1;
    for (int a = 0; a < lat.n; ++a) total *= static_cast<std::size_t>(S);
    std::vector<cplx> buf(total);
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        if (f.coeffs[i] == cplx{}) continue;
        auto nu = lat.point(i);
        std::size_t idx = 0;
        for (int v : nu) idx = idx * static_cast<std::size_t>(S) + static_cast<std::size_t>(detail::pos_mod(v, S));
        buf[idx] += f.coeffs[i];
    }
    detail::dft_inplace(buf, lat.n, S, +1);
    return GridFunction{lat.n, S, lat.period / S, std::move(buf)};
}

double lp_norm(const GridFunction& u, double p)
{
    if (std::isinf(p) && p > 0) {
        double m = 0;
        for (const auto& v : u.samples) m = std::max(m, std::abs(v));
        return m;
    }
    require(p >= 1, Errc::invalid_argument, "lp_norm requires p >= 1");
    double s = 0;
    if (p == 1) {
        for (const auto& v : u.samples) s += std::abs(v);
        return s * u.cell_volume();
    }
    if (p == 2) {
        for (const auto& v : u.samples) s += std::norm(v);
        return std::sqrt(s * u.cell_volume());
    }
    for (const auto& v : u.samples) s += std::pow(std::abs(v), p);
    return std::pow(s * u.cell_volume(), 1.0 / p);
}

GridFunction pointwise_product(const GridFunction& a, const GridFunction& b)
{
    require(a.n == b.n && a.samples_per_axis == b.samples_per_axis, Errc::lattice_mismatch,
            "grid mismatch in product");
    GridFunction out = a;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] *= b.samples[i];
    return out;
}

} // namespace bilab::spectral
