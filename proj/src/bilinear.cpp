#include "bilab/bilinear.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bilab/detail/ndindex.hpp"

namespace bilab::bilinear {

namespace {

struct Entry {
    std::vector<int> nu;
    cplx value;
};

std::vector<Entry> support_of(const SpectralFunction& f)
{
    std::vector<Entry> out;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
        if (f.coeffs[i] != cplx{}) out.push_back({f.lattice.point(i), f.coeffs[i]});
    return out;
}

void check_pair(const SpectralFunction& f, const SpectralFunction& g)
{
    require(f.lattice == g.lattice, Errc::lattice_mismatch, "f and g live on different lattices");
}

template <class Visit>
void for_each_pair(const Multiplier& m, const SpectralFunction& f, const SpectralFunction& g, Visit&& visit)
{
    require(m.n == f.lattice.n, Errc::lattice_mismatch, "multiplier dimension differs from lattice");
    const auto fs = support_of(f);
    const auto gs = support_of(g);
    const int n = f.lattice.n;
    const double inv_p = 1.0 / f.lattice.period;
    std::vector<double> z(static_cast<std::size_t>(2 * n));
    std::vector<int> tau(static_cast<std::size_t>(n));
    for (const auto& a : fs) {
        for (int r = 0; r < n; ++r) z[static_cast<std::size_t>(r)] = a.nu[static_cast<std::size_t>(r)] * inv_p;
        for (const auto& b : gs) {
            for (int r = 0; r < n; ++r) {
                z[static_cast<std::size_t>(n + r)] = b.nu[static_cast<std::size_t>(r)] * inv_p;
                tau[static_cast<std::size_t>(r)] = a.nu[static_cast<std::size_t>(r)] + b.nu[static_cast<std::size_t>(r)];
            }
            const cplx mv = m(z);
            if (!std::isfinite(mv.real()) || !std::isfinite(mv.imag()))
                throw Error(Errc::non_finite, "multiplier not finite at a lattice pair");
            visit(tau, mv * a.value * b.value);
        }
    }
}

} // namespace

SpectralFunction bilinear_spectrum(const Multiplier& m, const SpectralFunction& f, const SpectralFunction& g)
{
    check_pair(f, g);
    const auto& lat = f.lattice;
    SpectralFunction out(spectral::FreqLattice(lat.n, 2 * lat.radius, 1, lat.period));
    for_each_pair(m, f, g, [&](std::span<const int> tau, cplx v) { out.coeffs[out.lattice.index(tau)] += v; });
    return out;
}

GridFunction apply_bilinear(const Multiplier& m, const SpectralFunction& f, const SpectralFunction& g)
{
    const auto spec = bilinear_spectrum(m, f, g);
    return spectral::synthesize(spec, f.lattice.samples_per_axis());
}

GridFunction apply_bilinear_direct(const Multiplier& m, const SpectralFunction& f, const SpectralFunction& g)
{
    check_pair(f, g);
    const auto& lat = f.lattice;
    const int S = lat.samples_per_axis();
    const int n = lat.n;
    std::vector<std::pair<std::vector<int>, cplx>> terms;
    for_each_pair(m, f, g, [&](std::span<const int> tau, cplx v) {
        terms.emplace_back(std::vector<int>(tau.begin(), tau.end()), v);
    });
    GridFunction out{n, S, lat.step(), {}};
    out.samples.reserve(lat.sample_count());
    for (detail::IndexWalker w(std::vector<int>(static_cast<std::size_t>(n), 0),
                               std::vector<int>(static_cast<std::size_t>(n), S));
         !w.done(); w.next()) {
        auto j = w.index();
        cplx acc{};
        for (const auto& [tau, v] : terms) {
            long long phase = 0;
            for (int r = 0; r < n; ++r) phase += static_cast<long long>(j[static_cast<std::size_t>(r)]) * tau[static_cast<std::size_t>(r)];
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(detail::pos_mod(phase, S)) / S;
            acc += v * cplx(std::cos(ang), std::sin(ang));
        }
        out.samples.push_back(acc);
    }
    return out;
}

double DilatedSum::sign(int k) const
{
    if (signs.empty()) return 1.0;
    return signs.at(static_cast<std::size_t>(k - k_min));
}

Multiplier DilatedSum::scale(int k) const
{
    if (!per_scale.empty()) return per_scale.at(static_cast<std::size_t>(k - k_min));
    return dilate(base, std::ldexp(1.0, k));
}

DilatedSumResult apply_dilated_sum(const DilatedSum& T, const SpectralFunction& f, const SpectralFunction& g)
{
    check_pair(f, g);
    require(T.k_max >= T.k_min, Errc::invalid_argument, "empty k-range");
    const std::size_t count = static_cast<std::size_t>(T.k_max - T.k_min + 1);
    require(T.signs.empty() || T.signs.size() == count, Errc::invalid_argument, "sign count differs from k-range");
    require(T.per_scale.empty() || T.per_scale.size() == count, Errc::invalid_argument,
            "per-scale family size differs from k-range");
    for (double r : T.signs) require(std::abs(r) <= 1.0, Errc::invalid_argument, "|r_k| must be <= 1");

    const auto& lat = f.lattice;
    SpectralFunction acc(spectral::FreqLattice(lat.n, 2 * lat.radius, 1, lat.period));
    DilatedSumResult res;
    res.k_min = T.k_min;
    res.k_max = T.k_max;
    for (int k = T.k_min; k <= T.k_max; ++k) {
        const double r = T.sign(k);
        if (r == 0.0) continue;
        auto part = bilinear_spectrum(T.scale(k), f, g);
        bool any = false;
        for (std::size_t i = 0; i < acc.coeffs.size(); ++i) {
            if (part.coeffs[i] != cplx{}) any = true;
            acc.coeffs[i] += r * part.coeffs[i];
        }
        if (any) ++res.contributing;
    }
    res.value = spectral::synthesize(acc, lat.samples_per_axis());

    if (T.per_scale.empty() && T.base.decay) {
        double l1f = 0, l1g = 0;
        for (const auto& c : f.coeffs) l1f += std::abs(c);
        for (const auto& c : g.coeffs) l1g += std::abs(c);
        const auto& d = *T.base.decay;
        const double rho_min = 1.0 / lat.period;
        const double rho_max = std::sqrt(2.0 * lat.n) * lat.radius / lat.period;
        double tail = std::ldexp(rho_max, T.k_min);
        if (d.delta > 0)
            tail += std::pow(std::ldexp(rho_min, T.k_max + 1), -d.delta) / (1.0 - std::pow(2.0, -d.delta));
        else
            tail = std::numeric_limits<double>::infinity();
        res.tail_estimate = d.c_prime * l1f * l1g * tail;
    } else {
        res.tail_estimate = std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

std::pair<Multiplier, Multiplier> adjoint_multipliers(const Multiplier& m)
{
    const int n = m.n;
    auto base = m.eval;
    Multiplier m1 = m, m2 = m;
    m1.eval = [base, n](std::span<const double> z) {
        std::vector<double> w(z.begin(), z.end());
        for (int r = 0; r < n; ++r) w[static_cast<std::size_t>(r)] = -(z[static_cast<std::size_t>(r)] + z[static_cast<std::size_t>(n + r)]);
        return base(w);
    };
    m2.eval = [base, n](std::span<const double> z) {
        std::vector<double> w(z.begin(), z.end());
        for (int r = 0; r < n; ++r) w[static_cast<std::size_t>(n + r)] = -(z[static_cast<std::size_t>(r)] + z[static_cast<std::size_t>(n + r)]);
        return base(w);
    };
    // the substitution mixes coordinates, so per-order bounds do not transfer
    m1.derivative_bounds.clear();
    m2.derivative_bounds.clear();
    m1.decay.reset();
    m2.decay.reset();
    m1.name = m.name + "*1";
    m2.name = m.name + "*2";
    return {m1, m2};
}

cplx pairing(const GridFunction& u, const GridFunction& v)
{
    require(u.n == v.n && u.samples_per_axis == v.samples_per_axis, Errc::lattice_mismatch, "grid mismatch");
    cplx acc{};
    for (std::size_t i = 0; i < u.samples.size(); ++i) acc += u.samples[i] * v.samples[i];
    return acc * u.cell_volume();
}

double predicted_bound(const BoundInputs& in)
{
    return in.constant * std::pow(in.c0, 1.0 - in.q / 4.0) * std::pow(in.lq_norm, in.q / 4.0);
}

NormReport witness_norm(const Multiplier& m,
                        std::span<const std::pair<SpectralFunction, SpectralFunction>> pairs,
                        std::optional<BoundInputs> bound)
{
    require(!pairs.empty(), Errc::invalid_argument, "witness_norm needs at least one pair");
    NormReport rep;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [f, g] = pairs[i];
        const double nf = f.l2_norm(), ng = g.l2_norm();
        require(nf > 0 && ng > 0, Errc::invalid_argument, "zero-norm input pair");
        const double v = spectral::lp_norm(apply_bilinear(m, f, g), 1.0) / (nf * ng);
        rep.per_pair.push_back(v);
        if (v > rep.witnessed || i == 0) {
            rep.witnessed = v;
            rep.best_pair = i;
        }
    }
    if (bound) {
        rep.q = bound->q;
        rep.lq_norm = bound->lq_norm;
        rep.c0 = bound->c0;
        rep.predicted = predicted_bound(*bound);
    }
    rep.metadata["multiplier"] = m.name;
    rep.metadata["pairs"] = std::to_string(pairs.size());
    rep.metadata["lattice_radius"] = std::to_string(pairs.front().first.lattice.radius);
    rep.metadata["period"] = std::to_string(pairs.front().first.lattice.period);
    return rep;
}

} // namespace bilab::bilinear
