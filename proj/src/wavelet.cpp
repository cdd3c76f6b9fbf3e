#include "bilab/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <utility>

#include <Eigen/Dense>
#include <boost/math/filters/daubechies.hpp>

#include "bilab/detail/ndindex.hpp"
#include "bilab/parallel.hpp"

namespace bilab::wavelet {

namespace {

constexpr int max_filter_order = 19;

template <std::size_t... P>
std::vector<double> filter_dispatch(int p, std::index_sequence<P...>)
{
    std::vector<double> out;
    auto pick = [&](auto tag) {
        constexpr int q = decltype(tag)::value;
        if (q == p) {
            auto h = boost::math::filters::daubechies_scaling_filter<double, q>();
            out.assign(h.begin(), h.end());
        }
    };
    (pick(std::integral_constant<int, static_cast<int>(P) + 1>{}), ...);
    return out;
}

std::vector<double> daubechies_filter(int p)
{
    return filter_dispatch(p, std::make_index_sequence<max_filter_order>{});
}

struct Range {
    long long lo = 0;
    long long hi = -1;
    long long count() const { return hi - lo + 1; }
};

using Shape = std::vector<long long>;

long long shape_size(const Shape& s)
{
    long long p = 1;
    for (auto v : s) p *= v;
    return p;
}

// out[.., c, ..] = sum_i taps[i] in[.., stride c + offset + i, ..]
std::vector<cplx> filter_axis(const std::vector<cplx>& in, const Shape& shape, std::size_t axis,
                              const std::vector<double>& taps, long long stride, long long offset,
                              long long out_count)
{
    long long outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
    const long long n_in = shape[axis];
    std::vector<cplx> out(static_cast<std::size_t>(outer * out_count * inner));
    const long long ntaps = static_cast<long long>(taps.size());
    for (long long o = 0; o < outer; ++o) {
        const cplx* src = in.data() + o * n_in * inner;
        cplx* dst = out.data() + o * out_count * inner;
        for (long long c = 0; c < out_count; ++c) {
            cplx* d = dst + c * inner;
            const long long base = stride * c + offset;
            for (long long i = 0; i < ntaps; ++i) {
                const long long k = base + i;
                if (k < 0 || k >= n_in || taps[static_cast<std::size_t>(i)] == 0.0) continue;
                const double w = taps[static_cast<std::size_t>(i)];
                const cplx* s = src + k * inner;
                for (long long t = 0; t < inner; ++t) d[t] += w * s[t];
            }
        }
    }
    return out;
}

// out[.., stride c + offset + i, ..] += taps[i] in[.., c, ..]
void spread_axis(const std::vector<cplx>& in, const Shape& shape, std::size_t axis, const std::vector<double>& taps,
                 long long stride, long long offset, std::vector<cplx>& out, long long out_count)
{
    long long outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
    const long long n_in = shape[axis];
    const long long ntaps = static_cast<long long>(taps.size());
    for (long long o = 0; o < outer; ++o) {
        const cplx* src = in.data() + o * n_in * inner;
        cplx* dst = out.data() + o * out_count * inner;
        for (long long c = 0; c < n_in; ++c) {
            const cplx* s = src + c * inner;
            for (long long i = 0; i < ntaps; ++i) {
                const long long k = stride * c + offset + i;
                if (k < 0 || k >= out_count) continue;
                const double w = taps[static_cast<std::size_t>(i)];
                cplx* d = dst + k * inner;
                for (long long t = 0; t < inner; ++t) d[t] += w * s[t];
            }
        }
    }
}

// rows[r] lists (input index, weight); out[.., r, ..] = sum weight * in[.., index, ..]
std::vector<cplx> sparse_axis(const std::vector<cplx>& in, const Shape& shape, std::size_t axis,
                              const std::vector<std::vector<std::pair<long long, double>>>& rows)
{
    long long outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
    const long long n_in = shape[axis];
    const long long n_out = static_cast<long long>(rows.size());
    std::vector<cplx> out(static_cast<std::size_t>(outer * n_out * inner));
    for (long long o = 0; o < outer; ++o)
        for (long long r = 0; r < n_out; ++r) {
            cplx* d = out.data() + (o * n_out + r) * inner;
            for (const auto& [k, w] : rows[static_cast<std::size_t>(r)]) {
                const cplx* s = in.data() + (o * n_in + k) * inner;
                for (long long t = 0; t < inner; ++t) d[t] += w * s[t];
            }
        }
    return out;
}

// Functions 2^{l/2} f(2^l x - mu) supported in [2^-l mu, 2^-l (mu + L)] that meet [lo, hi].
Range meeting_range(double lo, double hi, int level, int support)
{
    return {static_cast<long long>(std::ceil(std::ldexp(lo, level))) - support,
            static_cast<long long>(std::floor(std::ldexp(hi, level)))};
}

CoeffSlice make_slice(int level, unsigned gender, int n, const std::vector<Range>& ranges)
{
    CoeffSlice s;
    s.level = level;
    s.gender = gender;
    s.n = n;
    std::size_t total = 1;
    for (const auto& r : ranges) {
        s.origin.push_back(static_cast<int>(r.lo));
        s.extent.push_back(static_cast<int>(r.count()));
        total *= static_cast<std::size_t>(r.count());
    }
    s.values.assign(total, cplx{});
    return s;
}

// copy the block `dst_ranges` out of an array laid out over `src_ranges`
std::vector<cplx> crop(const std::vector<cplx>& src, const std::vector<Range>& src_ranges,
                       const std::vector<Range>& dst_ranges)
{
    const std::size_t d = src_ranges.size();
    std::vector<int> lo(d), ext(d);
    for (std::size_t a = 0; a < d; ++a) {
        lo[a] = static_cast<int>(dst_ranges[a].lo);
        ext[a] = static_cast<int>(dst_ranges[a].count());
    }
    std::vector<cplx> out;
    out.reserve(detail::product(ext));
    for (detail::IndexWalker w(lo, ext); !w.done(); w.next()) {
        auto mu = w.index();
        std::size_t idx = 0;
        for (std::size_t a = 0; a < d; ++a)
            idx = idx * static_cast<std::size_t>(src_ranges[a].count()) + static_cast<std::size_t>(mu[a] - src_ranges[a].lo);
        out.push_back(src[idx]);
    }
    return out;
}

std::vector<cplx> active_values(const CoeffSlice& s)
{
    std::vector<cplx> v = s.values;
    if (!s.active.empty())
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!s.active[i]) v[i] = {};
    return v;
}

std::vector<Range> slice_ranges(const CoeffSlice& s)
{
    std::vector<Range> r;
    for (std::size_t a = 0; a < s.origin.size(); ++a) r.push_back({s.origin[a], s.origin[a] + s.extent[a] - 1});
    return r;
}

double table_lookup(const std::vector<double>& table, int depth, double x, int support)
{
    if (!(x > 0.0) || x >= support) return 0.0;
    const double u = std::ldexp(x, depth);
    const double fl = std::floor(u);
    const auto i = static_cast<std::size_t>(fl);
    const double frac = u - fl;
    if (frac == 0.0 || i + 1 >= table.size()) return table[std::min(i, table.size() - 1)];
    return table[i] + frac * (table[i + 1] - table[i]);
}

} // namespace

double holder_estimate(int order)
{
    static const double table[] = {0.0, 0.0, 0.550, 1.088, 1.618, 1.969, 2.189, 2.460, 2.761, 3.074, 3.381};
    if (order <= 1) return 0.0;
    if (order <= 10) return table[order];
    return 0.2075 * order - 0.5;
}

int minimal_order_for_smoothness(int k)
{
    for (int p = 2; p <= max_filter_order; ++p)
        if (holder_estimate(p) > k) return p;
    return max_filter_order + 1;
}

double WaveletSystem::scaling(double x) const { return table_lookup(scaling_table, depth, x, support_length()); }
double WaveletSystem::wavelet(double x) const { return table_lookup(wavelet_table, depth, x, support_length()); }

double WaveletSystem::scaling_at(long long i, int level) const
{
    require(level <= depth && level >= 0, Errc::invalid_argument, "lookup finer than tabulation");
    const long long idx = i << (depth - level);
    if (idx <= 0 || idx >= static_cast<long long>(scaling_table.size())) return 0.0;
    return scaling_table[static_cast<std::size_t>(idx)];
}

double WaveletSystem::wavelet_at(long long i, int level) const
{
    require(level <= depth && level >= 0, Errc::invalid_argument, "lookup finer than tabulation");
    const long long idx = i << (depth - level);
    if (idx <= 0 || idx >= static_cast<long long>(wavelet_table.size())) return 0.0;
    return wavelet_table[static_cast<std::size_t>(idx)];
}

namespace {

SystemPtr cascade(int smoothness, int moments, int depth);

} // namespace

SystemPtr build_wavelet_system(int smoothness, int moments, int depth)
{
    require(smoothness >= 0 && moments >= 0, Errc::invalid_argument, "smoothness and moments must be >= 0");
    if (depth > 0) {
        require(depth >= 10 && depth <= 22, Errc::invalid_argument, "tabulation depth must lie in [10, 22]");
        return cascade(smoothness, moments, depth);
    }
    // refine until the tabulated norms of phi and psi are 1 within 1e-9
    for (int d = 12;; d += 2) {
        auto sys = cascade(smoothness, moments, d);
        const double nf = inner_product_1d(*sys, {0, false, 0}, {0, false, 0});
        const double nw = inner_product_1d(*sys, {0, true, 0}, {0, true, 0});
        if ((std::abs(nf - 1) < 1e-9 && std::abs(nw - 1) < 1e-9) || d >= 20) return sys;
    }
}

namespace {

SystemPtr cascade(int smoothness, int moments, int depth)
{
    const int p = std::max(moments + 1, minimal_order_for_smoothness(smoothness));
    require(p <= max_filter_order, Errc::infeasible,
            "no available filter has " + std::to_string(moments) + " vanishing moments and C^" +
                std::to_string(smoothness) + " regularity");

    auto sys = std::make_shared<WaveletSystem>();
    sys->smoothness = smoothness;
    sys->moments = moments;
    sys->order = p;
    sys->depth = depth;
    sys->holder = holder_estimate(p);
    sys->low = daubechies_filter(p);
    const int L = 2 * p;
    sys->high.resize(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i)
        sys->high[static_cast<std::size_t>(i)] = (i % 2 ? -1.0 : 1.0) * sys->low[static_cast<std::size_t>(L - 1 - i)];

    // integer samples: phi(k) = sqrt2 sum_a h_a phi(2k - a), k = 1..L-2, with sum phi(k) = 1
    const int support = L - 1;
    const int m = support - 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= m; ++j) {
            const int a = 2 * i - j;
            if (a >= 0 && a < L) A(i - 1, j - 1) = std::sqrt(2.0) * sys->low[static_cast<std::size_t>(a)];
        }
        A(i - 1, i - 1) -= 1.0;
    }
    for (int j = 0; j < m; ++j) A(m, j) = 1.0;
    rhs(m) = 1.0;
    Eigen::VectorXd ints = A.colPivHouseholderQr().solve(rhs);

    std::vector<double> table(static_cast<std::size_t>(support) + 1, 0.0);
    for (int k = 1; k <= m; ++k) table[static_cast<std::size_t>(k)] = ints(k - 1);
    const double r2 = std::sqrt(2.0);
    for (int lev = 1; lev <= depth; ++lev) {
        const long long prev_span = 1LL << (lev - 1);
        std::vector<double> next(static_cast<std::size_t>(support) * (1ULL << lev) + 1, 0.0);
        for (std::size_t i = 0; i < next.size(); ++i) {
            if (i % 2 == 0) {
                next[i] = table[i / 2];
                continue;
            }
            double acc = 0;
            for (int a = 0; a < L; ++a) {
                const long long k = static_cast<long long>(i) - a * prev_span;
                if (k <= 0 || k >= static_cast<long long>(table.size())) continue;
                acc += sys->low[static_cast<std::size_t>(a)] * table[static_cast<std::size_t>(k)];
            }
            next[i] = r2 * acc;
        }
        table = std::move(next);
    }
    sys->scaling_table = std::move(table);

    // psi(x) = sqrt2 sum_a g_a phi(2x - a); 2x lands on the mesh 2^-(depth-1)
    const long long span = 1LL << (depth - 1);
    sys->wavelet_table.assign(sys->scaling_table.size(), 0.0);
    for (std::size_t i = 0; i < sys->wavelet_table.size(); ++i) {
        double acc = 0;
        for (int a = 0; a < L; ++a) {
            const long long k = 2 * (static_cast<long long>(i) - a * span);
            if (k <= 0 || k >= static_cast<long long>(sys->scaling_table.size())) continue;
            acc += sys->high[static_cast<std::size_t>(a)] * sys->scaling_table[static_cast<std::size_t>(k)];
        }
        sys->wavelet_table[i] = r2 * acc;
    }
    return sys;
}

} // namespace

double inner_product_1d(const WaveletSystem& sys, const Atom1D& a, const Atom1D& b)
{
    const int fine = std::min(a.level, b.level) + sys.depth;
    const int L = sys.support_length();
    // supports in units of 2^-fine
    const long long a_lo = static_cast<long long>(a.shift) << (fine - a.level);
    const long long a_hi = static_cast<long long>(a.shift + L) << (fine - a.level);
    const long long b_lo = static_cast<long long>(b.shift) << (fine - b.level);
    const long long b_hi = static_cast<long long>(b.shift + L) << (fine - b.level);
    const long long lo = std::max(a_lo, b_lo), hi = std::min(a_hi, b_hi);
    double acc = 0;
    for (long long i = lo; i <= hi; ++i) {
        // 2^l x - shift at x = i 2^-fine, as a multiple of 2^-(fine - l)
        const long long ia = i - a_lo, ib = i - b_lo;
        const double fa = a.is_wavelet ? sys.wavelet_at(ia, fine - a.level) : sys.scaling_at(ia, fine - a.level);
        if (fa == 0.0) continue;
        const double fb = b.is_wavelet ? sys.wavelet_at(ib, fine - b.level) : sys.scaling_at(ib, fine - b.level);
        acc += fa * fb;
    }
    return acc * std::ldexp(1.0, -fine) * std::sqrt(std::ldexp(1.0, a.level + b.level));
}

double moment(const WaveletSystem& sys, bool is_wavelet, int alpha)
{
    const auto& t = is_wavelet ? sys.wavelet_table : sys.scaling_table;
    const double h = std::ldexp(1.0, -sys.depth);
    double acc = 0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * std::pow(static_cast<double>(i) * h, alpha);
    return acc * h;
}

std::size_t CoeffSlice::cols() const
{
    std::size_t c = 1;
    for (std::size_t a = static_cast<std::size_t>(n); a < extent.size(); ++a) c *= static_cast<std::size_t>(extent[a]);
    return c;
}

std::vector<int> CoeffSlice::translation(std::size_t flat) const
{
    std::vector<int> mu(extent.size());
    for (std::size_t a = extent.size(); a-- > 0;) {
        mu[a] = origin[a] + static_cast<int>(flat % static_cast<std::size_t>(extent[a]));
        flat /= static_cast<std::size_t>(extent[a]);
    }
    return mu;
}

bool CoeffSlice::contains(std::span<const int> mu) const
{
    for (std::size_t a = 0; a < extent.size(); ++a)
        if (mu[a] < origin[a] || mu[a] >= origin[a] + extent[a]) return false;
    return true;
}

std::size_t CoeffSlice::flat_index(std::span<const int> mu) const
{
    require(contains(mu), Errc::invalid_argument, "translation outside slice");
    std::size_t idx = 0;
    for (std::size_t a = 0; a < extent.size(); ++a)
        idx = idx * static_cast<std::size_t>(extent[a]) + static_cast<std::size_t>(mu[a] - origin[a]);
    return idx;
}

const CoeffSlice* WaveletCoeffs::slice(int level, unsigned gender) const
{
    for (const auto& s : slices)
        if (s.level == level && s.gender == gender) return &s;
    return nullptr;
}

CoeffSlice* WaveletCoeffs::slice(int level, unsigned gender)
{
    for (auto& s : slices)
        if (s.level == level && s.gender == gender) return &s;
    return nullptr;
}

std::size_t WaveletCoeffs::entry_count() const
{
    std::size_t c = 0;
    for (const auto& s : slices)
        for (std::size_t i = 0; i < s.size(); ++i) c += s.is_active(i);
    return c;
}

double WaveletCoeffs::linf() const
{
    double m = 0;
    for (const auto& s : slices)
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.is_active(i)) m = std::max(m, std::abs(s.values[i]));
    return m;
}

double WaveletCoeffs::lq(double q) const
{
    double acc = 0;
    for (const auto& s : slices)
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.is_active(i)) acc += std::pow(std::abs(s.values[i]), q);
    return std::pow(acc, 1.0 / q);
}

bool WaveletCoeffs::support_inside_box(const CoeffSlice& s, std::size_t flat) const
{
    const auto mu = s.translation(flat);
    const int L = system->support_length();
    for (std::size_t a = 0; a < mu.size(); ++a) {
        const double lo = std::ldexp(static_cast<double>(mu[a]), -s.level);
        const double hi = std::ldexp(static_cast<double>(mu[a] + L), -s.level);
        if (lo < box.lo[a] || hi > box.hi[a]) return false;
    }
    return true;
}

std::size_t WaveletCoeffs::boundary_count() const
{
    std::size_t c = 0;
    for (const auto& s : slices)
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.is_active(i) && !support_inside_box(s, i)) ++c;
    return c;
}

WaveletCoeffs analyze(const Multiplier& m, SystemPtr system, int lambda_max, const Box& box,
                      const AnalysisOptions& opts)
{
    require(system != nullptr, Errc::invalid_argument, "missing wavelet system");
    require(lambda_max >= 0, Errc::invalid_argument, "lambda_max must be >= 0");
    require(opts.sublevels >= 1 && opts.sublevels <= system->depth, Errc::invalid_argument,
            "quadrature mesh must be finer than the finest wavelet scale and not finer than the tabulation");
    const std::size_t d = static_cast<std::size_t>(m.dim());
    require(box.lo.size() == d && box.hi.size() == d, Errc::invalid_argument, "box dimension mismatch");

    const auto& sys = *system;
    const int L = sys.support_length();
    const int J = lambda_max + 1;
    const int s = opts.sublevels;

    // needed[j][a]: translations at level j meeting the box; scal[j][a]: scaling coefficients computed
    std::vector<std::vector<Range>> needed(static_cast<std::size_t>(J + 1)), scal(static_cast<std::size_t>(J + 1));
    for (int j = 0; j <= J; ++j)
        for (std::size_t a = 0; a < d; ++a)
            needed[static_cast<std::size_t>(j)].push_back(meeting_range(box.lo[a], box.hi[a], j, L));
    scal[0] = needed[0];
    for (int j = 1; j <= J; ++j)
        for (std::size_t a = 0; a < d; ++a) {
            const auto& ps = scal[static_cast<std::size_t>(j - 1)][a];
            const auto& pn = needed[static_cast<std::size_t>(j - 1)][a];
            scal[static_cast<std::size_t>(j)].push_back({2 * std::min(ps.lo, pn.lo), 2 * std::max(ps.hi, pn.hi) + L});
        }

    // fine-level projection <m, phi_{J,mu}> by the dyadic rectangle rule (exact on polynomials of degree < p)
    const auto& fine = scal[static_cast<std::size_t>(J)];
    const long long sub = 1LL << s;
    std::vector<double> weights(static_cast<std::size_t>(L * sub + 1));
    const double wscale = std::ldexp(1.0, -s) * std::pow(2.0, -0.5 * J);
    for (std::size_t i = 0; i < weights.size(); ++i)
        weights[i] = wscale * sys.scaling_at(static_cast<long long>(i), s);

    Shape sample_shape;
    long double total_samples = 1;
    for (std::size_t a = 0; a < d; ++a) {
        sample_shape.push_back((fine[a].count() + L) * sub);
        total_samples *= static_cast<long double>(sample_shape.back());
    }
    require(total_samples <= static_cast<long double>(opts.max_samples), Errc::resource,
            "analysis needs " + std::to_string(static_cast<double>(total_samples)) + " multiplier samples");
    const double hfine = std::ldexp(1.0, -(J + s));

    long long lines = 1;
    for (std::size_t a = 0; a + 1 < d; ++a) lines *= sample_shape[a];
    const long long line_len = sample_shape[d - 1];
    const long long cols = fine[d - 1].count();
    std::vector<cplx> stage(static_cast<std::size_t>(lines * cols));
    parallel_for(static_cast<std::size_t>(lines), [&](std::size_t line) {
        std::vector<double> z(d);
        long long rem = static_cast<long long>(line);
        for (std::size_t a = d - 1; a-- > 0;) {
            z[a] = static_cast<double>(fine[a].lo * sub + rem % sample_shape[a]) * hfine;
            rem /= sample_shape[a];
        }
        std::vector<cplx> vals(static_cast<std::size_t>(line_len));
        for (long long k = 0; k < line_len; ++k) {
            z[d - 1] = static_cast<double>(fine[d - 1].lo * sub + k) * hfine;
            vals[static_cast<std::size_t>(k)] = m(z);
            if (!std::isfinite(vals[static_cast<std::size_t>(k)].real()) ||
                !std::isfinite(vals[static_cast<std::size_t>(k)].imag()))
                throw Error(Errc::non_finite, "multiplier not finite on the analysis mesh");
        }
        cplx* out = stage.data() + static_cast<long long>(line) * cols;
        for (long long c = 0; c < cols; ++c) {
            cplx acc{};
            for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * vals[static_cast<std::size_t>(c * sub) + i];
            out[c] = acc;
        }
    });
    Shape shape = sample_shape;
    shape[d - 1] = cols;
    std::vector<cplx> cur = std::move(stage);
    for (std::size_t a = d - 1; a-- > 0;) {
        cur = filter_axis(cur, shape, a, weights, sub, 0, fine[a].count());
        shape[a] = fine[a].count();
    }

    WaveletCoeffs out;
    out.system = system;
    out.n = m.n;
    out.lambda_max = lambda_max;
    out.box = box;
    out.source = m.name;

    // separable Mallat bank from level J down to 0
    for (int j = J; j >= 1; --j) {
        const auto& in_r = scal[static_cast<std::size_t>(j)];
        const auto& out_r = scal[static_cast<std::size_t>(j - 1)];
        const auto& keep = needed[static_cast<std::size_t>(j - 1)];
        std::vector<cplx> next_scal;
        std::function<void(std::vector<cplx>, Shape, std::size_t, unsigned)> bank =
            [&](std::vector<cplx> arr, Shape sh, std::size_t axis, unsigned mask) {
                if (axis == d) {
                    if (mask == 0) {
                        if (j - 1 == 0) {
                            auto sl = make_slice(0, 0, m.n, keep);
                            sl.values = crop(arr, out_r, keep);
                            out.slices.push_back(std::move(sl));
                        }
                        next_scal = std::move(arr);
                    } else {
                        auto sl = make_slice(j - 1, mask, m.n, keep);
                        sl.values = crop(arr, out_r, keep);
                        out.slices.push_back(std::move(sl));
                    }
                    return;
                }
                const long long offset = 2 * out_r[axis].lo - in_r[axis].lo;
                for (unsigned bit = 0; bit < 2; ++bit) {
                    auto f = filter_axis(arr, sh, axis, bit ? sys.high : sys.low, 2, offset, out_r[axis].count());
                    Shape sh2 = sh;
                    sh2[axis] = out_r[axis].count();
                    bank(std::move(f), sh2, axis + 1, mask | (bit << axis));
                }
            };
        bank(std::move(cur), shape, 0, 0);
        cur = std::move(next_scal);
        for (std::size_t a = 0; a < d; ++a) shape[a] = out_r[a].count();
    }
    std::sort(out.slices.begin(), out.slices.end(), [](const CoeffSlice& a, const CoeffSlice& b) {
        return std::pair(a.level, a.gender) < std::pair(b.level, b.gender);
    });
    return out;
}

Multiplier reconstruct(const WaveletCoeffs& c, const Box& box, double mesh)
{
    require(c.system != nullptr, Errc::invalid_argument, "missing wavelet system");
    require(mesh > 0, Errc::invalid_argument, "mesh must be > 0");
    const auto& sys = *c.system;
    const std::size_t d = static_cast<std::size_t>(2 * c.n);
    const int L = sys.support_length();
    const int J = c.lambda_max + 1;

    std::vector<Range> ranges;
    std::vector<cplx> cur;
    if (const auto* base = c.slice(0, 0)) {
        ranges = slice_ranges(*base);
        cur = active_values(*base);
    } else {
        ranges.assign(d, Range{0, 0});
        cur.assign(1, cplx{});
    }
    for (int j = 1; j <= J; ++j) {
        std::vector<Range> hull = ranges;
        for (const auto& s : c.slices) {
            if (s.level != j - 1 || s.gender == 0) continue;
            auto r = slice_ranges(s);
            for (std::size_t a = 0; a < d; ++a) {
                hull[a].lo = std::min(hull[a].lo, r[a].lo);
                hull[a].hi = std::max(hull[a].hi, r[a].hi);
            }
        }
        std::vector<Range> next_r(d);
        for (std::size_t a = 0; a < d; ++a) next_r[a] = {2 * hull[a].lo, 2 * hull[a].hi + L};
        Shape next_shape;
        for (const auto& r : next_r) next_shape.push_back(r.count());
        std::vector<cplx> next(static_cast<std::size_t>(shape_size(next_shape)));

        auto synth = [&](const std::vector<cplx>& vals, const std::vector<Range>& vr, unsigned mask) {
            std::vector<cplx> arr = vals;
            Shape sh;
            for (const auto& r : vr) sh.push_back(r.count());
            for (std::size_t a = 0; a < d; ++a) {
                Shape sh2 = sh;
                sh2[a] = next_r[a].count();
                std::vector<cplx> up(static_cast<std::size_t>(shape_size(sh2)));
                spread_axis(arr, sh, a, (mask >> a) & 1u ? sys.high : sys.low, 2, 2 * vr[a].lo - next_r[a].lo, up,
                            next_r[a].count());
                arr = std::move(up);
                sh = sh2;
            }
            for (std::size_t i = 0; i < next.size(); ++i) next[i] += arr[i];
        };
        synth(cur, ranges, 0);
        for (const auto& s : c.slices)
            if (s.level == j - 1 && s.gender != 0) synth(active_values(s), slice_ranges(s), s.gender);
        cur = std::move(next);
        ranges = std::move(next_r);
    }

    // evaluate sum_mu s_{J,mu} prod_a 2^{J/2} phi(2^J x_a - mu_a) on the node grid
    std::vector<int> count(d);
    Shape shape;
    for (const auto& r : ranges) shape.push_back(r.count());
    const double amp = std::pow(2.0, 0.5 * J);
    for (std::size_t a = d; a-- > 0;) {
        count[a] = static_cast<int>(std::lround((box.hi[a] - box.lo[a]) / mesh)) + 1;
        std::vector<std::vector<std::pair<long long, double>>> rows(static_cast<std::size_t>(count[a]));
        for (int i = 0; i < count[a]; ++i) {
            const double t = std::ldexp(box.lo[a] + i * mesh, J);
            const long long mu_lo = std::max(ranges[a].lo, static_cast<long long>(std::ceil(t)) - L);
            const long long mu_hi = std::min(ranges[a].hi, static_cast<long long>(std::floor(t)));
            for (long long mu = mu_lo; mu <= mu_hi; ++mu) {
                const double v = sys.scaling(t - static_cast<double>(mu));
                if (v != 0.0) rows[static_cast<std::size_t>(i)].emplace_back(mu - ranges[a].lo, amp * v);
            }
        }
        cur = sparse_axis(cur, shape, a, rows);
        shape[a] = count[a];
    }
    TabulatedGrid grid{c.n, box.lo, std::vector<double>(d, mesh), count, std::move(cur)};
    auto out = tabulated_multiplier(std::move(grid), "reconstruction of " + c.source);
    return out;
}

Multiplier slice_multiplier(const CoeffSlice& slice, SystemPtr system)
{
    require(system != nullptr, Errc::invalid_argument, "missing wavelet system");
    auto data = std::make_shared<const CoeffSlice>(slice);
    Multiplier m;
    m.n = slice.n;
    m.name = "slice l=" + std::to_string(slice.level) + " G=" + std::to_string(slice.gender);
    m.eval = [data, system](std::span<const double> z) {
        const auto& s = *data;
        const auto& sys = *system;
        const std::size_t d = s.extent.size();
        const int L = sys.support_length();
        const double amp = std::pow(2.0, 0.5 * s.level);
        std::vector<int> lo(d), ext(d);
        std::vector<std::vector<double>> fac(d);
        for (std::size_t a = 0; a < d; ++a) {
            const double t = std::ldexp(z[a], s.level);
            const long long mu_lo = std::max<long long>(s.origin[a], static_cast<long long>(std::ceil(t)) - L);
            const long long mu_hi = std::min<long long>(s.origin[a] + s.extent[a] - 1, static_cast<long long>(std::floor(t)));
            if (mu_hi < mu_lo) return cplx{};
            lo[a] = static_cast<int>(mu_lo);
            ext[a] = static_cast<int>(mu_hi - mu_lo + 1);
            for (long long mu = mu_lo; mu <= mu_hi; ++mu)
                fac[a].push_back(amp * sys.factor((s.gender >> a) & 1u, t - static_cast<double>(mu)));
        }
        cplx acc{};
        for (detail::IndexWalker w(lo, ext); !w.done(); w.next()) {
            auto mu = w.index();
            const std::size_t idx = s.flat_index(mu);
            if (!s.is_active(idx) || s.values[idx] == cplx{}) continue;
            double f = 1.0;
            for (std::size_t a = 0; a < d; ++a) f *= fac[a][static_cast<std::size_t>(mu[a] - lo[a])];
            acc += f * s.values[idx];
        }
        return acc;
    };
    return m;
}

std::vector<double> scale_maxima(const WaveletCoeffs& c)
{
    std::vector<double> out(static_cast<std::size_t>(c.lambda_max + 1), 0.0);
    for (const auto& s : c.slices) {
        if (s.gender == 0) continue;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.is_active(i))
                out[static_cast<std::size_t>(s.level)] = std::max(out[static_cast<std::size_t>(s.level)], std::abs(s.values[i]));
    }
    return out;
}

double TriebelEstimate::max_scale_bound() const
{
    double m = 0;
    for (const auto& s : per_scale) m = std::max(m, s.value);
    return m;
}

TriebelEstimate triebel_lq_estimate(const WaveletCoeffs& c, double q)
{
    require(q >= 1, Errc::invalid_argument, "q must be >= 1");
    TriebelEstimate est;
    est.q = q;
    const std::size_t d = static_cast<std::size_t>(2 * c.n);
    int top = 0;
    for (const auto& s : c.slices) top = std::max(top, s.level);
    // cell side 2^-(top+1); cube at (l, mu) covers cells [2^{top+1-l} mu - 2^{top-l}, +2^{top+1-l})
    std::vector<long long> lo(d, 0), hi(d, -1);
    bool any = false;
    for (const auto& s : c.slices) {
        const long long side = 1LL << (top + 1 - s.level);
        for (std::size_t a = 0; a < d; ++a) {
            const long long a0 = side * s.origin[a] - side / 2;
            const long long a1 = side * (s.origin[a] + s.extent[a] - 1) + side / 2 - 1;
            lo[a] = any ? std::min(lo[a], a0) : a0;
            hi[a] = any ? std::max(hi[a], a1) : a1;
        }
        any = true;
    }
    for (const auto& s : c.slices) {
        double acc = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.is_active(i)) acc += std::pow(std::abs(s.values[i]), q);
        const double scale = std::pow(2.0, s.level * c.n * (1.0 - 2.0 / q));
        est.per_scale.push_back({s.level, s.gender, scale * std::pow(acc, 1.0 / q)});
    }
    if (!any || c.linf() == 0.0) return est;

    std::vector<long long> ext(d);
    std::size_t total = 1;
    for (std::size_t a = 0; a < d; ++a) {
        ext[a] = hi[a] - lo[a] + 1;
        total *= static_cast<std::size_t>(ext[a]);
    }
    require(total <= (std::size_t{1} << 28), Errc::resource, "square-function grid too large");
    std::vector<double> sq(total, 0.0);
    for (const auto& s : c.slices) {
        const long long side = 1LL << (top + 1 - s.level);
        const double lift = std::pow(2.0, 2.0 * s.level * c.n);
        std::vector<int> cube_lo(d), cube_ext(d, static_cast<int>(side));
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s.is_active(i) || s.values[i] == cplx{}) continue;
            const auto mu = s.translation(i);
            for (std::size_t a = 0; a < d; ++a) cube_lo[a] = static_cast<int>(side * mu[a] - side / 2 - lo[a]);
            const double add = std::norm(s.values[i]) * lift;
            for (detail::IndexWalker w(cube_lo, cube_ext); !w.done(); w.next()) {
                auto cell = w.index();
                std::size_t idx = 0;
                for (std::size_t a = 0; a < d; ++a) idx = idx * static_cast<std::size_t>(ext[a]) + static_cast<std::size_t>(cell[a]);
                sq[idx] += add;
            }
        }
    }
    const double vol = std::ldexp(1.0, -static_cast<int>(d) * (top + 1));
    double acc = 0;
    for (double v : sq) acc += std::pow(v, q / 2.0);
    est.square_function = std::pow(acc * vol, 1.0 / q);
    return est;
}

LevelSetSplit level_split(const CoeffSlice& slice, int r, double q)
{
    require(slice.size() > 0, Errc::invalid_argument, "empty slice");
    require(q >= 1, Errc::invalid_argument, "q must be >= 1");
    require(r >= 0, Errc::invalid_argument, "level must be >= 0");
    LevelSetSplit sp;
    sp.r = r;
    sp.q = q;
    double acc = 0;
    for (std::size_t i = 0; i < slice.size(); ++i)
        if (slice.is_active(i)) {
            const double v = std::abs(slice.values[i]);
            sp.linf = std::max(sp.linf, v);
            acc += std::pow(v, q);
        }
    sp.lq = std::pow(acc, 1.0 / q);
    sp.proven_constant = std::pow(2.0, q);
    if (sp.linf == 0.0) return sp;
    sp.upper = std::ldexp(sp.linf, -r);
    sp.lower = std::ldexp(sp.linf, -r - 1);
    sp.row_threshold = std::pow(2.0, r * q / 2.0) * std::pow(sp.lq, q / 2.0) * std::pow(sp.linf, -q / 2.0);

    const std::size_t cols = slice.cols();
    std::map<std::size_t, std::size_t> row_count;
    for (std::size_t i = 0; i < slice.size(); ++i) {
        if (!slice.is_active(i)) continue;
        const double v = std::abs(slice.values[i]);
        if (v > sp.lower && v <= sp.upper) {
            sp.level_set.push_back({i / cols, i % cols});
            ++row_count[i / cols];
        }
    }
    for (const auto& [row, cnt] : row_count)
        if (static_cast<double>(cnt) >= sp.row_threshold) sp.heavy_rows.push_back(row);
    for (const auto& rc : sp.level_set) {
        if (std::binary_search(sp.heavy_rows.begin(), sp.heavy_rows.end(), rc.row))
            sp.heavy.push_back(rc);
        else
            sp.light.push_back(rc);
    }
    sp.measured_constant = static_cast<double>(sp.heavy_rows.size()) / sp.row_threshold;
    sp.bound_holds = static_cast<double>(sp.heavy_rows.size()) <= sp.proven_constant * sp.row_threshold;
    return sp;
}

int max_level(const CoeffSlice& slice)
{
    double linf = 0, smallest = 0;
    for (std::size_t i = 0; i < slice.size(); ++i) {
        if (!slice.is_active(i)) continue;
        const double v = std::abs(slice.values[i]);
        if (v == 0.0) continue;
        linf = std::max(linf, v);
        smallest = smallest == 0.0 ? v : std::min(smallest, v);
    }
    if (linf == 0.0) return 0;
    int r = 0;
    while (std::ldexp(linf, -r - 1) >= smallest) ++r;
    return r;
}

CoeffSlice restrict_slice(const CoeffSlice& slice, const std::vector<RowCol>& keep)
{
    CoeffSlice out = slice;
    out.active.assign(slice.size(), 0);
    const std::size_t cols = slice.cols();
    for (const auto& rc : keep) {
        const std::size_t i = rc.row * cols + rc.col;
        if (slice.is_active(i)) out.active[i] = 1;
    }
    return out;
}

std::pair<Multiplier, Multiplier> assemble_split_multipliers(const CoeffSlice& slice, const LevelSetSplit& split,
                                                             SystemPtr system)
{
    auto heavy = slice_multiplier(restrict_slice(slice, split.heavy), system);
    auto light = slice_multiplier(restrict_slice(slice, split.light), system);
    heavy.name = "m^{r=" + std::to_string(split.r) + ",1}";
    light.name = "m^{r=" + std::to_string(split.r) + ",2}";
    return {heavy, light};
}

std::pair<WaveletCoeffs, WaveletCoeffs> diagonal_split(const WaveletCoeffs& c, int j)
{
    require(j >= 1, Errc::invalid_argument, "cone aperture j must be >= 1");
    WaveletCoeffs diag = c, off = c;
    const int n = c.n;
    const int L = c.system->support_length();
    const double widen = std::ldexp(1.0, 2 * j);  // compare squared norms against 4^j
    for (std::size_t k = 0; k < c.slices.size(); ++k) {
        const auto& s = c.slices[k];
        auto& dmask = diag.slices[k].active;
        auto& omask = off.slices[k].active;
        dmask.assign(s.size(), 0);
        omask.assign(s.size(), 0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s.is_active(i)) continue;
            const auto mu = s.translation(i);
            // squared min/max of |xi| and |eta| over the closed support box
            double xi_min = 0, xi_max = 0, eta_min = 0, eta_max = 0;
            for (int a = 0; a < 2 * n; ++a) {
                const double lo = std::ldexp(static_cast<double>(mu[static_cast<std::size_t>(a)]), -s.level);
                const double hi = std::ldexp(static_cast<double>(mu[static_cast<std::size_t>(a)] + L), -s.level);
                const double near = (lo <= 0 && hi >= 0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
                const double far = std::max(std::abs(lo), std::abs(hi));
                if (a < n) {
                    xi_min += near * near;
                    xi_max += far * far;
                } else {
                    eta_min += near * near;
                    eta_max += far * far;
                }
            }
            const bool meets = xi_min <= widen * eta_max && eta_min <= widen * xi_max;
            (meets ? dmask : omask)[i] = 1;
        }
    }
    return {diag, off};
}

void write_coefficients_csv(const WaveletCoeffs& c, std::ostream& os)
{
    os << "lambda,gender_mask";
    for (int a = 1; a <= 2 * c.n; ++a) os << ",mu_" << a;
    os << ",re,im\n";
    const auto prec = os.precision(17);
    for (const auto& s : c.slices)
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!s.is_active(i)) continue;
            os << s.level << ',' << s.gender;
            for (int v : s.translation(i)) os << ',' << v;
            os << ',' << s.values[i].real() << ',' << s.values[i].imag() << '\n';
        }
    os.precision(prec);
}

} // namespace bilab::wavelet
