#include "bilab/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bilab/detail/ndindex.hpp"

namespace bilab {

namespace {

// all compositions of `total` into `parts` nonnegative integers
void compositions(int total, int parts, std::vector<int>& cur, const std::function<void()>& visit)
{
    if (static_cast<int>(cur.size()) == parts - 1) {
        cur.push_back(total);
        visit();
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= total; ++k) {
        cur.push_back(k);
        compositions(total - k, parts, cur, visit);
        cur.pop_back();
    }
}

} // namespace

Multiplier constant_multiplier(int n, cplx c)
{
    require(n >= 1, Errc::invalid_argument, "dimension must be >= 1");
    Multiplier m;
    m.n = n;
    m.eval = [c](std::span<const double>) { return c; };
    m.derivative_bounds.assign(32, 0.0);
    m.derivative_bounds[0] = std::abs(c);
    m.name = "constant";
    return m;
}

Multiplier product_bump_multiplier(int n, const spectral::BumpProfile& profile, std::vector<double> center)
{
    require(n >= 1, Errc::invalid_argument, "dimension must be >= 1");
    if (center.empty()) center.assign(static_cast<std::size_t>(2 * n), 0.0);
    require(static_cast<int>(center.size()) == 2 * n, Errc::invalid_argument, "center dimension mismatch");
    Multiplier m;
    m.n = n;
    m.eval = [profile, center](std::span<const double> z) {
        double v = 1.0;
        for (std::size_t a = 0; a < center.size() && v != 0.0; ++a) v *= profile(z[a] - center[a]);
        return cplx{v, 0.0};
    };
    const int order_max = std::min(2 * profile.smoothness + 1, 10);
    std::vector<double> sups(static_cast<std::size_t>(order_max + 1));
    for (int j = 0; j <= order_max; ++j) sups[static_cast<std::size_t>(j)] = profile.derivative_sup(j);
    for (int j = 0; j <= order_max; ++j) {
        double best = 0;
        std::vector<int> cur;
        compositions(j, 2 * n, cur, [&] {
            double p = 1;
            for (int k : cur) p *= sups[static_cast<std::size_t>(k)];
            best = std::max(best, p);
        });
        m.derivative_bounds.push_back(best);
    }
    m.feature_width = profile.transition_width();
    m.name = "product_bump";
    return m;
}

Multiplier dilate(const Multiplier& m, double factor)
{
    require(factor > 0 && std::isfinite(factor), Errc::invalid_argument, "dilation factor must be > 0");
    Multiplier out = m;
    const int dim = m.dim();
    auto base = m.eval;
    out.eval = [base, factor, dim](std::span<const double> z) {
        double buf[16];
        std::vector<double> heap;
        double* w = buf;
        if (dim > 16) {
            heap.resize(static_cast<std::size_t>(dim));
            w = heap.data();
        }
        for (int a = 0; a < dim; ++a) w[a] = factor * z[static_cast<std::size_t>(a)];
        return base(std::span<const double>(w, static_cast<std::size_t>(dim)));
    };
    for (std::size_t j = 0; j < out.derivative_bounds.size(); ++j)
        out.derivative_bounds[j] *= std::pow(factor, static_cast<double>(j));
    if (out.decay) {
        for (std::size_t j = 0; j < out.decay->c_alpha.size(); ++j)
            out.decay->c_alpha[j] *= std::pow(factor, static_cast<double>(j));
        out.decay->c_prime *= std::max(factor, std::pow(factor, -out.decay->delta));
    }
    out.feature_width = m.feature_width / factor;
    out.name = m.name + "@" + std::to_string(factor);
    return out;
}

std::size_t TabulatedGrid::index(std::span<const int> i) const
{
    std::size_t idx = 0;
    for (std::size_t a = 0; a < count.size(); ++a) idx = idx * static_cast<std::size_t>(count[a]) + static_cast<std::size_t>(i[a]);
    return idx;
}

cplx TabulatedGrid::interpolate(std::span<const double> z) const
{
    const std::size_t dim = count.size();
    std::vector<int> base(dim);
    std::vector<double> frac(dim);
    for (std::size_t a = 0; a < dim; ++a) {
        const double u = (z[a] - lo[a]) / step[a];
        if (!(u >= 0.0) || u > count[a] - 1) return {};
        int b = static_cast<int>(std::floor(u));
        if (b >= count[a] - 1) b = count[a] - 2;
        if (b < 0) b = 0;
        base[a] = b;
        frac[a] = count[a] == 1 ? 0.0 : u - b;
    }
    cplx acc{};
    std::vector<int> idx(dim);
    for (unsigned corner = 0; corner < (1u << dim); ++corner) {
        double w = 1.0;
        bool skip = false;
        for (std::size_t a = 0; a < dim; ++a) {
            const bool up = (corner >> a) & 1u;
            if (count[a] == 1) {
                if (up) skip = true;
                idx[a] = 0;
                continue;
            }
            w *= up ? frac[a] : 1.0 - frac[a];
            idx[a] = base[a] + (up ? 1 : 0);
        }
        if (skip || w == 0.0) continue;
        acc += w * values[index(idx)];
    }
    return acc;
}

Multiplier tabulated_multiplier(TabulatedGrid grid, std::string name)
{
    require(grid.count.size() % 2 == 0 && !grid.count.empty(), Errc::invalid_argument,
            "tabulated multiplier needs an even dimension");
    require(grid.values.size() == detail::product(grid.count), Errc::invalid_argument,
            "tabulated value count mismatch");
    Multiplier m;
    m.n = static_cast<int>(grid.count.size() / 2);
    double minstep = *std::min_element(grid.step.begin(), grid.step.end());
    auto shared = std::make_shared<const TabulatedGrid>(std::move(grid));
    m.eval = [shared](std::span<const double> z) { return shared->interpolate(z); };
    m.feature_width = 2.0 * minstep;
    m.name = std::move(name);
    return m;
}

std::vector<std::string> smooth_catalogue_names()
{
    return {"bump", "wide_bump", "shifted_bump", "narrow_bump", "dilated_bump"};
}

Multiplier smooth_catalogue(const std::string& name, int n)
{
    using spectral::BumpProfile;
    Multiplier m;
    if (name == "bump") {
        m = product_bump_multiplier(n, BumpProfile(0.5, 1.0));
    } else if (name == "wide_bump") {
        m = product_bump_multiplier(n, BumpProfile(0.75, 2.0));
    } else if (name == "shifted_bump") {
        std::vector<double> c(static_cast<std::size_t>(2 * n));
        for (std::size_t a = 0; a < c.size(); ++a) c[a] = a % 2 ? -0.375 : 0.25;
        m = product_bump_multiplier(n, BumpProfile(0.25, 0.75), c);
    } else if (name == "narrow_bump") {
        m = product_bump_multiplier(n, BumpProfile(0.125, 0.5));
    } else if (name == "dilated_bump") {
        m = dilate(product_bump_multiplier(n, BumpProfile(0.5, 1.0)), 2.0);
    } else {
        throw Error(Errc::invalid_argument, "unknown catalogue multiplier '" + name + "'");
    }
    m.name = name;
    return m;
}

TabulatedGrid tabulate(const Multiplier& m, std::vector<double> lo, std::vector<double> step,
                       std::vector<int> count)
{
    const std::size_t dim = static_cast<std::size_t>(m.dim());
    require(lo.size() == dim && step.size() == dim && count.size() == dim, Errc::invalid_argument,
            "tabulation grid dimension mismatch");
    TabulatedGrid g{m.n, std::move(lo), std::move(step), std::move(count), {}};
    g.values.reserve(detail::product(g.count));
    std::vector<double> z(dim);
    for (detail::IndexWalker w(std::vector<int>(dim, 0), g.count); !w.done(); w.next()) {
        auto i = w.index();
        for (std::size_t a = 0; a < dim; ++a) z[a] = g.lo[a] + i[a] * g.step[a];
        g.values.push_back(m(z));
    }
    return g;
}

Box Box::cube(int dim, double a, double b)
{
    return Box{std::vector<double>(static_cast<std::size_t>(dim), a),
               std::vector<double>(static_cast<std::size_t>(dim), b)};
}

namespace spectral {

LqNormResult multiplier_lq_norm(const Multiplier& m, double q, const Box& box, double mesh)
{
    require(q >= 1, Errc::invalid_argument, "multiplier_lq_norm requires q >= 1");
    require(mesh > 0, Errc::invalid_argument, "mesh must be > 0");
    const std::size_t dim = static_cast<std::size_t>(m.dim());
    require(box.lo.size() == dim && box.hi.size() == dim, Errc::invalid_argument, "box dimension mismatch");
    std::vector<int> cells(dim);
    double volume = 1.0;
    for (std::size_t a = 0; a < dim; ++a) {
        const double len = box.hi[a] - box.lo[a];
        require(len > 0, Errc::invalid_argument, "empty box");
        cells[a] = std::max(1, static_cast<int>(std::lround(len / mesh)));
        volume *= len / cells[a];
    }
    std::vector<double> z(dim);
    double total = 0, shell = 0;
    for (detail::IndexWalker w(std::vector<int>(dim, 0), cells); !w.done(); w.next()) {
        auto i = w.index();
        bool edge = false;
        for (std::size_t a = 0; a < dim; ++a) {
            const double h = (box.hi[a] - box.lo[a]) / cells[a];
            z[a] = box.lo[a] + (i[a] + 0.5) * h;
            if (i[a] == 0 || i[a] == cells[a] - 1) edge = true;
        }
        const double v = std::abs(m(z));
        require(std::isfinite(v), Errc::non_finite, "multiplier not finite on quadrature mesh");
        const double c = q == 2 ? v * v : std::pow(v, q);
        total += c;
        if (edge) shell += c;
    }
    LqNormResult r;
    r.value = std::pow(total * volume, 1.0 / q);
    r.boundary_fraction = total > 0 ? shell / total : 0.0;
    r.converged = r.boundary_fraction <= 0.01;
    return r;
}

double sup_derivative_bound(const Multiplier& m, int order, const DerivativeOptions& opts)
{
    require(order >= 0, Errc::invalid_argument, "derivative order must be >= 0");
    if (static_cast<int>(m.derivative_bounds.size()) > order) {
        double best = 0;
        for (int j = 0; j <= order; ++j) best = std::max(best, m.derivative_bounds[static_cast<std::size_t>(j)]);
        return best;
    }
    const std::size_t dim = static_cast<std::size_t>(m.dim());
    const Box box = opts.box ? *opts.box : Box::cube(m.dim(), -4.0, 4.0);
    require(box.dim() == m.dim(), Errc::invalid_argument, "box dimension mismatch");
    double h = opts.step;
    if (h <= 0) {
        require(m.feature_width > 0, Errc::infeasible,
                "no registered derivative bounds and no feature width for finite differences");
        h = m.feature_width / (4.0 * (order + 1));
    }
    require(m.feature_width <= 0 || h * (order + 1) <= 0.5 * m.feature_width, Errc::infeasible,
            "finite-difference stencil too wide for the multiplier's feature width");
    const double spacing = opts.sample_spacing > 0 ? opts.sample_spacing : h;

    std::vector<std::vector<int>> alphas;
    for (int j = 0; j <= order; ++j) {
        std::vector<int> cur;
        compositions(j, m.dim(), cur, [&] { alphas.push_back(cur); });
    }
    std::vector<int> cells(dim);
    for (std::size_t a = 0; a < dim; ++a)
        cells[a] = std::max(1, static_cast<int>(std::lround((box.hi[a] - box.lo[a]) / spacing))) + 1;

    // binomial stencils per axis order
    std::vector<std::vector<double>> stencil(static_cast<std::size_t>(order + 1));
    for (int k = 0; k <= order; ++k) {
        stencil[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(k + 1));
        double c = 1;
        for (int i = 0; i <= k; ++i) {
            stencil[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = (i % 2 ? -c : c);
            c = c * (k - i) / (i + 1);
        }
    }

    double best = 0;
    std::vector<double> z(dim), p(dim);
    for (detail::IndexWalker w(std::vector<int>(dim, 0), cells); !w.done(); w.next()) {
        auto i = w.index();
        for (std::size_t a = 0; a < dim; ++a)
            z[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * i[a] / std::max(1, cells[a] - 1);
        for (const auto& alpha : alphas) {
            // tensor central difference: offsets (alpha_a/2 - i_a) h
            std::vector<int> ext(dim);
            for (std::size_t a = 0; a < dim; ++a) ext[a] = alpha[a] + 1;
            cplx acc{};
            for (detail::IndexWalker s(std::vector<int>(dim, 0), ext); !s.done(); s.next()) {
                auto si = s.index();
                double wgt = 1;
                for (std::size_t a = 0; a < dim; ++a) {
                    wgt *= stencil[static_cast<std::size_t>(alpha[a])][static_cast<std::size_t>(si[a])];
                    p[a] = z[a] + (0.5 * alpha[a] - si[a]) * h;
                }
                acc += wgt * m(p);
            }
            int total = 0;
            for (int k : alpha) total += k;
            best = std::max(best, std::abs(acc) / std::pow(h, total));
        }
    }
    return best;
}

} // namespace spectral
} // namespace bilab
