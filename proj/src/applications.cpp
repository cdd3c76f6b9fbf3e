#include "bilab/applications.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bilab/bilinear.hpp"
#include "bilab/extremal.hpp"
#include "bilab/parallel.hpp"
#include "fft.hpp"

namespace bilab::applications {

namespace {

constexpr double pi = std::numbers::pi;

using Rule = std::function<double(std::span<const double>)>;

double signum(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// integrate() is non-const, so one instance per worker thread
boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule()
{
    thread_local boost::math::quadrature::tanh_sinh<double> rule;
    return rule;
}

// quarter arcs keep sign jumps and axis singularities at endpoints
double circle_integral(const std::function<double(double)>& h, double tol)
{
    double total = 0.0;
    for (int q = 0; q < 4; ++q)
        total += tanh_sinh_rule().integrate(h, q * pi / 2, (q + 1) * pi / 2, tol);
    return total;
}

template <int Order>
double gauss_panels(const std::function<double(double)>& h, double a, double b, int panels)
{
    const double w = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i)
        total += boost::math::quadrature::gauss<double, Order>::integrate(h, a + i * w, a + (i + 1) * w);
    return total;
}

double norm2(std::span<const double> z)
{
    double s = 0.0;
    for (double v : z) s += v * v;
    return std::sqrt(s);
}

double dual_exponent(double r)
{
    return r == 1.0 ? HUGE_VAL : r / (r - 1.0);
}

// rectangle-rule L^q of values with cell volume vol; q = inf gives the max
double discrete_norm(const std::vector<cplx>& v, double q, double vol)
{
    if (std::isinf(q)) {
        double m = 0.0;
        for (const cplx& c : v) m = std::max(m, std::abs(c));
        return m;
    }
    double s = 0.0;
    for (const cplx& c : v) s += std::pow(std::abs(c), q);
    return std::pow(s * vol, 1.0 / q);
}

} // namespace

double sphere_area(int n)
{
    require(n >= 1, Errc::invalid_argument, "sphere dimension parameter must be >= 1");
    return 2.0 * std::pow(pi, n) / std::tgamma(static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// symbols on the sphere

SphereSymbol sphere_symbol(const std::string& name, int n, double r)
{
    require(n >= 1 && n <= 2, Errc::invalid_argument, "sphere symbols are provided for n = 1, 2");
    SphereSymbol s;
    s.n = n;
    s.name = name;
    s.r = r;
    if (name == "zero")
        s.rule = [](std::span<const double>) { return 0.0; };
    else if (name == "first_coordinate")
        s.rule = [](std::span<const double> u) { return u[0]; };
    else if (name == "quadrupole")
        s.rule = [](std::span<const double> u) { return u[0] * u[0] - u[1] * u[1]; };
    else if (name == "sign")
        s.rule = [](std::span<const double> u) { return signum(u[0]); };
    else if (name == "rough_power")
        // in L^r for r < 4 only
        s.rule = [](std::span<const double> u) {
            return u[0] == 0.0 ? 0.0 : signum(u[0]) * std::pow(std::abs(u[0]), -0.25);
        };
    else
        throw Error(Errc::invalid_argument, "unknown sphere symbol '" + name + "'");
    return s;
}

std::vector<std::string> sphere_symbol_names()
{
    return {"zero", "first_coordinate", "quadrupole", "sign", "rough_power"};
}

double sphere_integral(int n, const Rule& rule, const SphereQuadrature& quad)
{
    require(n == 1 || n == 2, Errc::invalid_argument, "sphere quadrature is available for n = 1, 2");
    if (n == 1) {
        return circle_integral(
            [&](double t) {
                const double u[2] = {std::cos(t), std::sin(t)};
                return rule(u);
            },
            quad.tolerance);
    }
    // Hopf angles: (cos a cos b, cos a sin b, sin a cos c, sin a sin c), d sigma = cos a sin a da db dc
    const int nc = std::max(1, quad.azimuth);
    auto over_b = [&](double a) {
        const double ca = std::cos(a), sa = std::sin(a);
        if (ca * sa == 0.0) return 0.0;
        auto over_c = [&](double b) {
            double s = 0.0;
            for (int j = 0; j < nc; ++j) {
                const double c = 2 * pi * (j + 0.5) / nc;
                const double u[4] = {ca * std::cos(b), ca * std::sin(b), sa * std::cos(c), sa * std::sin(c)};
                s += rule(u);
            }
            return s * 2 * pi / nc;
        };
        return ca * sa * circle_integral(over_c, quad.tolerance);
    };
    return tanh_sinh_rule().integrate(over_b, 0.0, pi / 2, quad.tolerance);
}

double sphere_mean_value(const SphereSymbol& omega, const SphereQuadrature& quad)
{
    return sphere_integral(omega.n, omega.rule, quad) / sphere_area(omega.n);
}

double sphere_lr_norm(const SphereSymbol& omega, double r, const SphereQuadrature& quad)
{
    require(r >= 1.0 && std::isfinite(r), Errc::invalid_argument, "sphere norm exponent must lie in [1, inf)");
    const double s = sphere_integral(
        omega.n, [&](std::span<const double> u) { return std::pow(std::abs(omega(u)), r); }, quad);
    return std::pow(s, 1.0 / r);
}

// ---------------------------------------------------------------------------
// radial factors

RadialFactor radial_factor(const std::string& name)
{
    RadialFactor rho;
    rho.name = name;
    rho.declared_bound = 1.0;
    if (name == "one")
        rho.rule = [](double) { return 1.0; };
    else if (name == "log_square")
        rho.rule = [](double r) { return signum(std::sin(pi * std::log2(r))); };
    else if (name == "log_cosine")
        rho.rule = [](double r) { return std::cos(pi * std::log2(r)); };
    else
        throw Error(Errc::invalid_argument, "unknown radial factor '" + name + "'");
    return rho;
}

std::vector<std::string> radial_factor_names() { return {"one", "log_square", "log_cosine"}; }

RadialCheck verify_radial_bound(const RadialFactor& rho, int lo, int hi)
{
    require(lo <= hi, Errc::invalid_argument, "empty radial sweep");
    // dyadic shells [2^(i-1), 2^i] in the log variable; below 2^(lo-60) is dropped
    auto shell = [&](int i) {
        auto h = [&](double s) {
            const double r = std::ldexp(std::exp2(s), i - 1);
            const double v = rho(r);
            return v * v * r * std::numbers::ln2;
        };
        return gauss_panels<20>(h, 0.0, 1.0, 8);
    };
    RadialCheck out;
    double acc = 0.0;
    for (int i = lo - 60; i <= hi; ++i) {
        acc += shell(i);
        if (i < lo) continue;
        const double R = std::ldexp(1.0, i);
        out.radii.push_back(R);
        out.averages.push_back(acc / R);
        out.measured_bound = std::max(out.measured_bound, acc / R);
    }
    out.holds = out.measured_bound <= rho.declared_bound * (1 + 1e-9);
    return out;
}

// ---------------------------------------------------------------------------
// rough kernels

RoughKernel rough_kernel_multiplier(const SphereSymbol& omega, const AnnulusProfile& profile,
                                    const KernelGrid& mesh, const std::function<double(double)>& radial)
{
    require(omega.n == 1, Errc::infeasible, "rough kernel tabulation is implemented for n = 1");
    require(omega.r >= 1.0 && omega.r <= 2.0, Errc::invalid_argument,
            "Hausdorff-Young needs 1 <= r <= 2");
    const double h = mesh.step;
    require(h > 0 && h <= profile.inner() / 8.0, Errc::invalid_argument,
            "kernel mesh too coarse: need 8 cells across the inner annulus radius");
    const int S = static_cast<int>(std::lround(mesh.period / h));
    require(S % 2 == 0 && std::abs(S * h - mesh.period) < 1e-9 * mesh.period, Errc::invalid_argument,
            "kernel box must hold an even number of cells");
    require(mesh.period / 2 >= profile.outer(), Errc::invalid_argument,
            "kernel box must contain the outer annulus radius");

    std::vector<cplx> data(static_cast<std::size_t>(S) * S);
    const double r_in = profile.inner(), r_out = profile.outer();
    for (int j1 = 0; j1 < S; ++j1) {
        for (int j2 = 0; j2 < S; ++j2) {
            const double x[2] = {(j1 - S / 2) * h, (j2 - S / 2) * h};
            const double rad = std::hypot(x[0], x[1]);
            if (rad <= r_in || rad >= r_out) continue;
            const double u[2] = {x[0] / rad, x[1] / rad};
            double v = omega(u) * profile(rad) / (rad * rad);
            if (radial) v *= radial(rad);
            data[static_cast<std::size_t>(j1) * S + j2] = v;
        }
    }

    RoughKernel out;
    out.n = 1;
    out.r = omega.r;
    out.kernel_lr = discrete_norm(data, omega.r, h * h);

    detail::dft_inplace(data, 2, S, -1);
    // node kappa in [-S/2, S/2) stands for frequency kappa / period
    std::vector<cplx> values(data.size());
    for (int i1 = 0; i1 < S; ++i1) {
        const int k1 = i1 - S / 2;
        for (int i2 = 0; i2 < S; ++i2) {
            const int k2 = i2 - S / 2;
            const int s1 = ((k1 % S) + S) % S, s2 = ((k2 % S) + S) % S;
            const double phase = ((k1 + k2) % 2 == 0) ? 1.0 : -1.0;
            values[static_cast<std::size_t>(i1) * S + i2] = h * h * phase * data[static_cast<std::size_t>(s1) * S + s2];
        }
    }
    const double dz = 1.0 / mesh.period;
    out.multiplier_lq = discrete_norm(values, dual_exponent(omega.r), dz * dz);
    out.hy_ratio = out.kernel_lr > 0 ? out.multiplier_lq / out.kernel_lr : 0.0;
    out.origin_value = std::abs(values[static_cast<std::size_t>(S / 2) * S + S / 2]);

    out.grid.n = 1;
    out.grid.lo.assign(2, -(S / 2) * dz);
    out.grid.step.assign(2, dz);
    out.grid.count.assign(2, S);
    out.grid.values = std::move(values);
    out.multiplier = tabulated_multiplier(out.grid, "rough:" + omega.name);
    return out;
}

FeffermanFamily fefferman_scale_multipliers(const SphereSymbol& omega, const RadialFactor& rho,
                                            std::span<const int> scales, const AnnulusProfile& profile,
                                            const KernelGrid& mesh)
{
    require(!scales.empty(), Errc::invalid_argument, "empty scale range");
    const RadialCheck check = verify_radial_bound(rho);
    require(check.holds, Errc::infeasible,
            "radial factor '" + rho.name + "' violates its L2-average bound");

    FeffermanFamily fam;
    fam.scales.assign(scales.begin(), scales.end());
    fam.radial_bound = check.measured_bound;
    fam.rescaled.resize(scales.size());
    // M_k(2^{-k} .) is the rough kernel with rho(2^k |y|) on the unit annulus
    parallel_for(scales.size(), [&](std::size_t i) {
        const int k = scales[i];
        fam.rescaled[i] = rough_kernel_multiplier(
            omega, profile, mesh, [&rho, k](double t) { return rho(std::ldexp(t, k)); });
    });
    fam.omega_lr = sphere_lr_norm(omega, omega.r);
    double sup = 0.0;
    for (const RoughKernel& rk : fam.rescaled) {
        fam.lq_norms.push_back(rk.multiplier_lq);
        sup = std::max(sup, rk.multiplier_lq);
    }
    fam.sup_ratio = fam.omega_lr > 0 ? sup / fam.omega_lr : 0.0;
    return fam;
}

// ---------------------------------------------------------------------------
// decay probes

DecayFit decay_check(const Multiplier& m, const DecayOptions& opts)
{
    require(opts.r_min > 0 && opts.r_max >= 4 * opts.r_min, Errc::invalid_argument,
            "insufficient probe range: need at least two octaves");
    require(opts.directions >= 1 && opts.samples_per_unit >= 1 && opts.shrink_steps >= 2,
            Errc::invalid_argument, "decay probe counts must be positive");
    const int dim = m.dim();
    std::vector<std::vector<double>> dirs;
    for (int d = 0; d < opts.directions; ++d) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (int a = 0; a < dim; ++a) v[static_cast<std::size_t>(a)] = std::cos(0.7 * (d + 1) * (a + 1)) + (a == 0 ? 1.0 : 0.0);
        const double len = norm2(v);
        for (double& x : v) x /= len;
        dirs.push_back(std::move(v));
    }
    auto probe = [&](double radius) {
        double best = 0.0;
        std::vector<double> z(static_cast<std::size_t>(dim));
        for (const auto& v : dirs) {
            for (int a = 0; a < dim; ++a) z[static_cast<std::size_t>(a)] = radius * v[static_cast<std::size_t>(a)];
            best = std::max(best, std::abs(m(z)));
        }
        return best;
    };

    DecayFit fit;
    std::vector<double> lo_radii;
    for (double r = opts.r_min; 2 * r <= opts.r_max * (1 + 1e-12); r *= 2) lo_radii.push_back(r);
    fit.radii = lo_radii;
    fit.envelope.resize(lo_radii.size());
    parallel_for(lo_radii.size(), [&](std::size_t i) {
        const double r0 = lo_radii[i];
        const int count = std::max(8, static_cast<int>(std::ceil(opts.samples_per_unit * r0)));
        double env = 0.0;
        for (int s = 0; s <= count; ++s) env = std::max(env, probe(r0 + r0 * s / count));
        fit.envelope[i] = env;
    });
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < lo_radii.size(); ++i) {
        lx.push_back(std::log2(lo_radii[i]));
        ly.push_back(std::log2(std::max(fit.envelope[i], 1e-300)));
    }
    const extremal::GrowthFit g = extremal::fit_line(lx, ly);
    fit.delta = -g.slope;
    fit.intercept = g.intercept;
    fit.decaying = fit.delta >= opts.min_delta;

    for (int s = 1; s <= opts.shrink_steps; ++s) {
        const double t = std::ldexp(1.0, -s);
        fit.origin_ratios.push_back(probe(t) / t);
    }
    const std::size_t half = fit.origin_ratios.size() / 2;
    const double early = *std::max_element(fit.origin_ratios.begin(), fit.origin_ratios.begin() + half);
    const double late = *std::max_element(fit.origin_ratios.begin() + half, fit.origin_ratios.end());
    fit.linear_near_origin = late <= 2.0 * early;
    return fit;
}

// ---------------------------------------------------------------------------
// surface measure

SurfaceFT surface_measure_radial(int n, double rho, const SurfaceOptions& opts)
{
    require(n >= 1 && n <= 8, Errc::invalid_argument, "surface measure available for 1 <= n <= 8");
    rho = std::abs(rho);
    if (rho == 0.0) return {cplx(sphere_area(n), 0.0), true};
    // |S^{d-2}| int_0^pi cos(2 pi rho cos t) sin^{d-2} t dt, folded onto [0, pi/2]
    const int d = 2 * n;
    const double lower_area = 2.0 * std::pow(pi, 0.5 * (d - 1)) / std::tgamma(0.5 * (d - 1));
    const int panels = 4 + 2 * static_cast<int>(std::ceil(rho));
    auto h = [&](double t) {
        double w = 1.0;
        const double st = std::sin(t);
        for (int j = 0; j < d - 2; ++j) w *= st;
        return std::cos(2 * pi * rho * std::cos(t)) * w;
    };
    const double v = 2.0 * lower_area * gauss_panels<20>(h, 0.0, pi / 2, panels);
    return {cplx(v, 0.0), rho <= opts.max_radius};
}

SurfaceFT surface_measure_ft(int n, std::span<const double> zeta, const SurfaceOptions& opts)
{
    require(static_cast<int>(zeta.size()) == 2 * n, Errc::invalid_argument,
            "surface measure point must lie in R^{2n}");
    return surface_measure_radial(n, norm2(zeta), opts);
}

double SphericalMeasure::sigma_hat(std::span<const double> zeta) const
{
    return surface_measure_ft(n, zeta, options).value.real();
}

double SphericalMeasure::phi_hat(std::span<const double> zeta) const
{
    const double r = norm2(zeta);
    return total_mass() * std::exp(-pi * r * r);
}

double SphericalMeasure::mu_hat(std::span<const double> zeta) const
{
    return sigma_hat(zeta) - phi_hat(zeta);
}

namespace {

Multiplier scaled_radial(int n, int k, std::string name, std::function<double(std::span<const double>)> f)
{
    Multiplier m;
    m.n = n;
    m.name = std::move(name);
    m.feature_width = std::ldexp(0.25, -k);
    m.eval = [f = std::move(f), k](std::span<const double> z) {
        double buf[16];
        for (std::size_t a = 0; a < z.size(); ++a) buf[a] = std::ldexp(z[a], k);
        return cplx(f(std::span<const double>(buf, z.size())), 0.0);
    };
    return m;
}

} // namespace

Multiplier SphericalMeasure::sigma_multiplier(int k) const
{
    SphericalMeasure self = *this;
    return scaled_radial(n, k, "sigma_hat(2^" + std::to_string(k) + ")",
                         [self](std::span<const double> z) { return self.sigma_hat(z); });
}

Multiplier SphericalMeasure::mu_multiplier(int k) const
{
    SphericalMeasure self = *this;
    return scaled_radial(n, k, "mu_hat(2^" + std::to_string(k) + ")",
                         [self](std::span<const double> z) { return self.mu_hat(z); });
}

Multiplier SphericalMeasure::phi_multiplier(int k) const
{
    SphericalMeasure self = *this;
    return scaled_radial(n, k, "phi_hat(2^" + std::to_string(k) + ")",
                         [self](std::span<const double> z) { return self.phi_hat(z); });
}

// ---------------------------------------------------------------------------
// maximal operators

GridFunction centred_maximal(const GridFunction& u, int max_periods)
{
    require(u.n >= 1 && u.n <= 2, Errc::invalid_argument, "centred maximal surrogate for n = 1, 2");
    require(max_periods >= 1, Errc::invalid_argument, "max_periods must be positive");
    const int S = u.samples_per_axis;
    const int n = u.n;
    const long rmax = static_cast<long>(max_periods) * S;

    struct Offset {
        long d2;
        int dx, dy;
    };
    std::vector<Offset> offs;
    for (long dx = -rmax; dx <= rmax; ++dx) {
        if (n == 1) {
            offs.push_back({dx * dx, static_cast<int>(dx), 0});
            continue;
        }
        for (long dy = -rmax; dy <= rmax; ++dy)
            if (dx * dx + dy * dy <= rmax * rmax) offs.push_back({dx * dx + dy * dy, static_cast<int>(dx), static_cast<int>(dy)});
    }
    std::stable_sort(offs.begin(), offs.end(), [](const Offset& a, const Offset& b) { return a.d2 < b.d2; });

    std::vector<double> a(u.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        a[i] = std::abs(u.samples[i]);
        mean += a[i];
    }
    mean /= static_cast<double>(u.size());

    GridFunction out = u;
    const std::size_t points = u.size();
    auto wrap = [S](long v) { return static_cast<int>(((v % S) + S) % S); };
    parallel_for(points, [&](std::size_t p) {
        const int x = n == 1 ? static_cast<int>(p) : static_cast<int>(p / static_cast<std::size_t>(S));
        const int y = n == 1 ? 0 : static_cast<int>(p % static_cast<std::size_t>(S));
        double sum = 0.0, best = mean;
        for (std::size_t i = 0; i < offs.size(); ++i) {
            const Offset& o = offs[i];
            const std::size_t q = n == 1 ? static_cast<std::size_t>(wrap(x + o.dx))
                                         : static_cast<std::size_t>(wrap(x + o.dx)) * S + wrap(y + o.dy);
            sum += a[q];
            // close the shell before reading an average
            if (i + 1 == offs.size() || offs[i + 1].d2 != o.d2)
                best = std::max(best, sum / static_cast<double>(i + 1));
        }
        out.samples[p] = best;
    });
    return out;
}

namespace {

void check_scales(const SphericalMeasure& sm, const SpectralFunction& f, const SpectralFunction& g,
                  std::span<const int> scales)
{
    require(!scales.empty(), Errc::invalid_argument, "empty scale range");
    require(f.lattice == g.lattice, Errc::lattice_mismatch, "inputs must share a lattice");
    require(f.lattice.n == sm.n, Errc::lattice_mismatch, "input dimension differs from the sphere parameter");
    const double zmax = f.lattice.radius * std::sqrt(2.0 * sm.n) / f.lattice.period;
    const int kmax = *std::max_element(scales.begin(), scales.end());
    require(std::ldexp(zmax, kmax) <= sm.options.max_radius, Errc::resource,
            "scale range pushes lattice frequencies beyond the surface-measure range");
}

std::vector<GridFunction> per_scale_outputs(const std::function<Multiplier(int)>& make,
                                            const SpectralFunction& f, const SpectralFunction& g,
                                            std::span<const int> scales)
{
    std::vector<GridFunction> out(scales.size());
    parallel_for(scales.size(), [&](std::size_t i) { out[i] = bilinear::apply_bilinear(make(scales[i]), f, g); });
    return out;
}

GridFunction pointwise_sup(const std::vector<GridFunction>& parts)
{
    GridFunction out = parts.front();
    for (std::size_t p = 0; p < out.size(); ++p) {
        double m = 0.0;
        for (const GridFunction& u : parts) m = std::max(m, std::abs(u.samples[p]));
        out.samples[p] = m;
    }
    return out;
}

} // namespace

SphericalMaxResult dyadic_spherical_max(const SphericalMeasure& sm, const SpectralFunction& f,
                                        const SpectralFunction& g, std::span<const int> scales)
{
    check_scales(sm, f, g, scales);
    SphericalMaxResult res;
    res.scales.assign(scales.begin(), scales.end());
    res.per_scale = per_scale_outputs([&](int k) { return sm.sigma_multiplier(k); }, f, g, scales);
    res.mu_per_scale = per_scale_outputs([&](int k) { return sm.mu_multiplier(k); }, f, g, scales);
    res.maximal = pointwise_sup(res.per_scale);
    res.mu_maximal = pointwise_sup(res.mu_per_scale);

    const int S = res.maximal.samples_per_axis;
    res.maximal_f = centred_maximal(spectral::synthesize(f, S));
    res.maximal_g = centred_maximal(spectral::synthesize(g, S));

    const double area = sm.total_mass();
    double worst = HUGE_VAL, top = 0.0;
    for (std::size_t p = 0; p < res.maximal.size(); ++p) {
        const double dom = area * res.maximal_f.samples[p].real() * res.maximal_g.samples[p].real()
                           + res.mu_maximal.samples[p].real();
        const double lhs = res.maximal.samples[p].real();
        worst = std::min(worst, dom - lhs);
        top = std::max(top, lhs);
    }
    res.worst_margin = worst;
    // roundoff allowance only
    res.dominated = worst >= -1e-12 * std::max(1.0, top);
    return res;
}

KhintchineResult khintchine_square_function(const SphericalMeasure& sm, const SpectralFunction& f,
                                            const SpectralFunction& g, std::span<const int> scales,
                                            int trials, std::uint64_t seed, double p)
{
    check_scales(sm, f, g, scales);
    require(trials >= 1, Errc::invalid_argument, "need at least one trial");
    require(p >= 1.0, Errc::invalid_argument, "L^p exponent must be >= 1");
    const auto parts = per_scale_outputs([&](int k) { return sm.mu_multiplier(k); }, f, g, scales);

    KhintchineResult res;
    res.p = p;
    res.trials = trials;
    res.seed = seed;
    GridFunction sf = parts.front();
    for (std::size_t q = 0; q < sf.size(); ++q) {
        double s = 0.0;
        for (const GridFunction& u : parts) s += std::norm(u.samples[q]);
        sf.samples[q] = std::sqrt(s);
    }
    res.square_function = spectral::lp_norm(sf, p);

    const extremal::SignSequence base(seed);
    std::vector<double> norms(static_cast<std::size_t>(trials));
    parallel_for(norms.size(), [&](std::size_t t) {
        const extremal::SignSequence signs = base.with_stream(t);
        GridFunction sum = parts.front();
        std::fill(sum.samples.begin(), sum.samples.end(), cplx(0.0));
        for (std::size_t i = 0; i < parts.size(); ++i) {
            const double s = signs.draw(static_cast<long>(scales[i]));
            for (std::size_t q = 0; q < sum.size(); ++q) sum.samples[q] += s * parts[i].samples[q];
        }
        norms[t] = spectral::lp_norm(sum, p);
    });
    double total = 0.0;
    for (double v : norms) total += v;
    res.randomized = total / trials;
    res.ratio = res.square_function > 0 ? res.randomized / res.square_function : 0.0;
    return res;
}

SpectralFunction random_real_spectrum(const spectral::FreqLattice& lat, std::uint64_t seed)
{
    SpectralFunction f(lat);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(lat.size()));
    for (std::size_t idx = 0; idx < lat.size(); ++idx) {
        std::vector<int> nu = lat.point(idx);
        int lead = 0;
        for (int v : nu)
            if (v != 0) {
                lead = v;
                break;
            }
        if (lead < 0) continue;
        if (lead == 0) {
            f.coeffs[idx] = scale * normal(gen);
            continue;
        }
        const cplx c = scale * cplx(normal(gen), normal(gen)) / std::sqrt(2.0);
        f.coeffs[idx] = c;
        for (int& v : nu) v = -v;
        f.at(nu) = std::conj(c);
    }
    return f;
}

} // namespace bilab::applications
