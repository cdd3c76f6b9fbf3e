#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/special_functions/daubechies_scaling.hpp>

#include "bilab/wavelet.hpp"

using namespace bilab;
using namespace bilab::wavelet;

namespace {

double slope(const std::vector<double>& ys)
{
    const double n = static_cast<double>(ys.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double x = static_cast<double>(i);
        sx += x, sy += ys[i], sxx += x * x, sxy += x * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

CoeffSlice random_slice(std::mt19937_64& rng, int rows, int cols)
{
    CoeffSlice s;
    s.n = 1;
    s.origin = {0, 0};
    s.extent = {rows, cols};
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution sparse(0.3);
    for (int i = 0; i < rows * cols; ++i) s.values.push_back(sparse(rng) ? cplx(u(rng), u(rng)) : cplx{});
    return s;
}

// definition-by-definition construction used as the oracle
struct Brute {
    std::set<std::pair<std::size_t, std::size_t>> u, u1, u2;
    std::set<std::size_t> e;
};

Brute brute_split(const CoeffSlice& s, int r, double q)
{
    double linf = 0, acc = 0;
    for (auto v : s.values) linf = std::max(linf, std::abs(v)), acc += std::pow(std::abs(v), q);
    const double lq = std::pow(acc, 1 / q);
    Brute b;
    const std::size_t cols = static_cast<std::size_t>(s.extent[1]);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double v = std::abs(s.values[i]);
        if (std::ldexp(linf, -r - 1) < v && v <= std::ldexp(linf, -r)) b.u.insert({i / cols, i % cols});
    }
    const double thr = std::pow(2.0, r * q / 2) * std::pow(lq, q / 2) * std::pow(linf, -q / 2);
    for (auto [k, l] : b.u) {
        std::size_t card = 0;
        for (auto [k2, l2] : b.u) card += (k2 == k);
        if (static_cast<double>(card) >= thr) {
            b.u1.insert({k, l});
            b.e.insert(k);
        } else {
            b.u2.insert({k, l});
        }
    }
    return b;
}

} // namespace

TEST_CASE("minimal system: unit integral and unit norm")
{
    auto sys = build_wavelet_system(0, 0);
    CHECK(sys->order == 2);
    CHECK(std::abs(moment(*sys, false, 0) - 1.0) < 1e-12);
    CHECK(std::abs(inner_product_1d(*sys, {0, false, 0}, {0, false, 0}) - 1.0) < 1e-8);
}

TEST_CASE("orthonormality and vanishing moments")
{
    for (int M : {0, 1, 2, 3, 5}) {
        auto sys = build_wavelet_system(0, M);
        CHECK(sys->order >= M + 1);
        CHECK(std::abs(inner_product_1d(*sys, {0, true, 0}, {0, true, 0}) - 1.0) < 1e-8);
        CHECK(std::abs(inner_product_1d(*sys, {0, false, 0}, {0, true, 0})) < 1e-8);
        CHECK(std::abs(inner_product_1d(*sys, {0, false, 0}, {0, false, 2})) < 1e-8);
        for (int a = 0; a <= M; ++a) CHECK(std::abs(moment(*sys, true, a)) < 1e-6);
        // compact support: nothing outside [0, 2p - 1]
        CHECK(sys->scaling(-1e-9) == 0.0);
        CHECK(sys->wavelet(sys->support_length() + 1e-9) == 0.0);
        CHECK(sys->scaling_table.front() == 0.0);
        CHECK(std::abs(sys->scaling_table.back()) < 1e-14);
    }
}

TEST_CASE("smoothness selects the filter order")
{
    CHECK(build_wavelet_system(1, 0)->order == 3);
    CHECK(build_wavelet_system(2, 1)->order == 6);
    CHECK(build_wavelet_system(0, 7)->order == 8);
    try {
        build_wavelet_system(4, 2);
        FAIL("expected infeasible");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::infeasible);
    }
    try {
        build_wavelet_system(0, 19);
        FAIL("expected infeasible");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::infeasible);
    }
}

TEST_CASE("tabulated scaling function agrees with an independent implementation")
{
    auto sys = build_wavelet_system(0, 3, 12);
    boost::math::daubechies_scaling<double, 4> phi;
    for (double x : {0.5, 1.0, 1.25, 2.0, 3.375, 4.5, 6.0})
        CHECK(std::abs(sys->scaling(x) - phi(x)) < 1e-9);
}

TEST_CASE("analysis of zero and of constants")
{
    auto sys = build_wavelet_system(0, 2);
    auto zero = analyze(constant_multiplier(1, 0.0), sys, 2, Box::cube(2, -1, 1));
    CHECK(zero.linf() == 0.0);
    auto one = analyze(constant_multiplier(1, 1.0), sys, 3, Box::cube(2, -2, 2));
    double worst = 0;
    for (const auto& s : one.slices)
        if (s.gender != 0)
            for (auto v : s.values) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-6);
    CHECK(one.slice(0, 0) != nullptr);
    CHECK(one.slice(1, 0) == nullptr);
    CHECK(one.slices.size() == 4 + 3 * 3);
    CHECK(one.boundary_count() > 0);
}

TEST_CASE("coefficient decay follows the moment count")
{
    auto m = product_bump_multiplier(1, spectral::BumpProfile(2.0, 8.0));
    for (int M : {2, 3}) {
        auto sys = build_wavelet_system(0, M);
        AnalysisOptions o;
        o.sublevels = 1;
        auto c = analyze(m, sys, 5, Box::cube(2, -8.5, 8.5), o);
        std::vector<double> logs;
        for (double v : scale_maxima(c)) logs.push_back(std::log2(v));
        CHECK(slope(logs) <= -(M + 1 + 1) + 0.5);
    }
}

TEST_CASE("reconstruction: zero, single atom, smooth multiplier")
{
    auto sys = build_wavelet_system(0, 3);
    auto c = analyze(constant_multiplier(1, 0.0), sys, 1, Box::cube(2, -1, 1));
    auto z = reconstruct(c, Box::cube(2, -1, 1), 0.125);
    CHECK(z({0.3, -0.2}) == cplx{});

    // one coefficient: wavelet factor on axis 0, scaling factor on axis 1
    auto lone = analyze(constant_multiplier(1, 0.0), sys, 0, Box::cube(2, 0, 7));
    lone.slice(0, 1)->values[lone.slice(0, 1)->flat_index(std::vector<int>{0, 0})] = 1.0;
    const double h = 1.0 / 128;
    auto r = reconstruct(lone, Box::cube(2, 0, 7), h);
    double mass = 0;
    for (int i = 0; i <= 7 * 128; ++i)
        for (int j = 0; j <= 7 * 128; ++j) {
            const double x = i * h, y = j * h;
            const cplx v = r({x, y});
            mass += std::norm(v);
            if (i % 37 == 0 && j % 41 == 0) CHECK(std::abs(v.real() - sys->wavelet(x) * sys->scaling(y)) < 1e-12);
        }
    CHECK(std::abs(mass * h * h - 1.0) < 1e-6);

    auto smooth = product_bump_multiplier(1, spectral::BumpProfile(0.5, 2.0));
    double prev = 1e300;
    for (int lmax : {1, 3, 5}) {
        auto cc = analyze(smooth, sys, lmax, Box::cube(2, -2.5, 2.5));
        auto rec = reconstruct(cc, Box::cube(2, -2, 2), 1.0 / 32);
        double num = 0, den = 0;
        for (int i = 0; i <= 128; ++i)
            for (int j = 0; j <= 128; ++j) {
                const double x = -2 + i / 32.0, y = -2 + j / 32.0;
                num += std::norm(rec({x, y}) - smooth({x, y}));
                den += std::norm(smooth({x, y}));
            }
        const double err = std::sqrt(num / den);
        CHECK(err <= prev * 1.05);
        prev = err;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("Triebel estimate: zero, lone coefficient, L2 agreement, per-scale bound")
{
    auto sys = build_wavelet_system(0, 2);
    auto zero = analyze(constant_multiplier(1, 0.0), sys, 2, Box::cube(2, -1, 1));
    CHECK(triebel_lq_estimate(zero, 3).square_function == 0.0);

    auto lone = zero;
    lone.slice(0, 0)->values[3] = cplx(0.6, -0.8);
    for (double q : {1.0, 2.0, 3.5}) CHECK(triebel_lq_estimate(lone, q).square_function == doctest::Approx(1.0).epsilon(1e-12));

    auto m = product_bump_multiplier(1, spectral::BumpProfile(0.5, 2.0));
    auto c = analyze(m, sys, 5, Box::cube(2, -2.5, 2.5));
    const double l2 = spectral::multiplier_lq_norm(m, 2, Box::cube(2, -2.5, 2.5), 1.0 / 64).value;
    CHECK(std::abs(triebel_lq_estimate(c, 2).square_function / l2 - 1) < 0.05);
    for (double q : {1.5, 3.0}) {
        auto est = triebel_lq_estimate(c, q);
        CHECK(est.max_scale_bound() <= est.square_function * (1 + 1e-12));
    }
}

TEST_CASE("level split examples and brute force")
{
    CoeffSlice flat;
    flat.n = 1;
    flat.origin = {0, 0};
    flat.extent = {4, 4};
    flat.values.assign(16, cplx(0, 2.0));
    CHECK(level_split(flat, 0, 2).level_set.size() == 16);
    for (int r = 1; r < 4; ++r) CHECK(level_split(flat, r, 2).level_set.empty());

    CoeffSlice single = flat;
    single.values.assign(16, cplx{});
    single.values[6] = 3.0;
    auto sp = level_split(single, 0, 2);
    REQUIRE(sp.level_set.size() == 1);
    CHECK(sp.level_set[0] == RowCol{1, 2});
    // threshold ||b||_2 / ||b||_inf = 1 and the row holds one entry
    CHECK(sp.row_threshold == doctest::Approx(1.0));
    CHECK(sp.heavy.size() == 1);
    CHECK(sp.heavy_rows == std::vector<std::size_t>{1});

    std::mt19937_64 rng(99);
    for (int t = 0; t < 200; ++t) {
        auto s = random_slice(rng, 16, 16);
        const double q = 1.0 + 3.0 * (t % 7) / 7.0;
        for (int r = 0; r <= 5; ++r) {
            auto a = level_split(s, r, q);
            auto b = brute_split(s, r, q);
            std::set<std::pair<std::size_t, std::size_t>> u, u1, u2;
            for (auto rc : a.level_set) u.insert({rc.row, rc.col});
            for (auto rc : a.heavy) u1.insert({rc.row, rc.col});
            for (auto rc : a.light) u2.insert({rc.row, rc.col});
            CHECK(u == b.u);
            CHECK(u1 == b.u1);
            CHECK(u2 == b.u2);
            CHECK(std::set<std::size_t>(a.heavy_rows.begin(), a.heavy_rows.end()) == b.e);
            CHECK(a.bound_holds);
        }
    }
    CoeffSlice empty;
    empty.n = 1;
    empty.origin = {0, 0};
    empty.extent = {0, 0};
    CHECK_THROWS_AS(level_split(empty, 0, 2), Error);
}

TEST_CASE("split multipliers partition the slice")
{
    auto sys = build_wavelet_system(0, 2);
    std::mt19937_64 rng(5);
    auto s = random_slice(rng, 8, 8);
    s.level = 1;
    s.gender = 2;
    s.origin = {-3, -2};
    auto whole = slice_multiplier(s, sys);
    const int rmax = max_level(s);
    std::vector<Multiplier> parts;
    for (int r = 0; r <= rmax; ++r) {
        auto sp = level_split(s, r, 2.0);
        auto [m1, m2] = assemble_split_multipliers(s, sp, sys);
        if (sp.heavy.empty()) CHECK(m1({0.1, 0.2}) == cplx{});
        parts.push_back(m1);
        parts.push_back(m2);
    }
    std::uniform_real_distribution<double> u(-2.5, 4.0);
    for (int t = 0; t < 200; ++t) {
        const double x = u(rng), y = u(rng);
        cplx acc{};
        for (const auto& p : parts) acc += p({x, y});
        CHECK(std::abs(acc - whole({x, y})) < 1e-8);
    }
}

TEST_CASE("diagonal split geometry")
{
    auto sys = build_wavelet_system(0, 2);
    auto m = product_bump_multiplier(1, spectral::BumpProfile(1.0, 3.0));
    auto c = analyze(m, sys, 2, Box::cube(2, -3, 3));
    for (int j : {1, 2, 3}) {
        auto [diag, off] = diagonal_split(c, j);
        CHECK(diag.entry_count() + off.entry_count() == c.entry_count());
        for (std::size_t k = 0; k < c.slices.size(); ++k)
            for (std::size_t i = 0; i < c.slices[k].size(); ++i)
                CHECK(diag.slices[k].is_active(i) != off.slices[k].is_active(i));
    }
    auto [all, none] = diagonal_split(c, 40);
    CHECK(none.entry_count() == 0);

    // level-2 atom with support [3, 4.25] x [0, 1.25]: needs |eta| >= 1.5 to reach the cone
    auto [d1, o1] = diagonal_split(c, 1);
    const auto* s = c.slice(2, 1);
    const std::size_t idx = s->flat_index(std::vector<int>{12, 0});
    CHECK(o1.slice(2, 1)->is_active(idx));
    CHECK_FALSE(d1.slice(2, 1)->is_active(idx));
}

TEST_CASE("Gram matrix of sampled product atoms")
{
    auto sys = build_wavelet_system(0, 2);
    std::mt19937_64 rng(17);
    struct Idx {
        int level;
        unsigned gender;
        int mu[2];
    };
    std::vector<Idx> atoms;
    std::set<std::tuple<int, unsigned, int, int>> seen;
    while (atoms.size() < 30) {
        const int l = static_cast<int>(rng() % 3);
        unsigned g = static_cast<unsigned>(rng() % 4);
        if (l > 0 && g == 0) continue;
        const int span = 3 << l;
        Idx a{l, g, {static_cast<int>(rng() % (2 * span)) - span, static_cast<int>(rng() % (2 * span)) - span}};
        if (!seen.insert({a.level, a.gender, a.mu[0], a.mu[1]}).second) continue;
        atoms.push_back(a);
    }
    double worst = 0;
    for (const auto& a : atoms)
        for (const auto& b : atoms) {
            double g = 1;
            for (int ax = 0; ax < 2; ++ax)
                g *= inner_product_1d(*sys, {a.level, bool((a.gender >> ax) & 1u), a.mu[ax]},
                                      {b.level, bool((b.gender >> ax) & 1u), b.mu[ax]});
            const double want = (&a == &b) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(g - want));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("coefficient export")
{
    auto sys = build_wavelet_system(0, 1);
    auto c = analyze(constant_multiplier(1, 1.0), sys, 0, Box::cube(2, 0, 1));
    std::ostringstream os;
    write_coefficients_csv(c, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "lambda,gender_mask,mu_1,mu_2,re,im");
    std::size_t lines = 0;
    for (std::string line; std::getline(is, line);) ++lines;
    CHECK(lines == c.entry_count());
}
