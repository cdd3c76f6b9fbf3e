#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bilab/bilinear.hpp"

using namespace bilab;
using namespace bilab::spectral;
using namespace bilab::bilinear;

namespace {

SpectralFunction random_function(const FreqLattice& lat, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    SpectralFunction f(lat);
    for (auto& c : f.coeffs) c = {nd(rng), nd(rng)};
    return f;
}

Multiplier random_table(int n, int radius, double period, std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    std::vector<int> count(static_cast<std::size_t>(2 * n), 2 * radius + 1);
    TabulatedGrid g{n, std::vector<double>(2 * n, -radius / period), std::vector<double>(2 * n, 1.0 / period), count, {}};
    std::size_t total = 1;
    for (int c : count) total *= static_cast<std::size_t>(c);
    for (std::size_t i = 0; i < total; ++i) g.values.push_back({nd(rng), nd(rng)});
    return tabulated_multiplier(std::move(g));
}

double max_abs_diff(const GridFunction& a, const GridFunction& b)
{
    double d = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) d = std::max(d, std::abs(a.samples[i] - b.samples[i]));
    return d;
}

double max_abs(const GridFunction& a)
{
    double d = 0;
    for (auto v : a.samples) d = std::max(d, std::abs(v));
    return d;
}

} // namespace

TEST_CASE("constant multiplier gives the pointwise product")
{
    std::mt19937_64 rng(1);
    FreqLattice lat(1, 6);
    auto f = random_function(lat, rng), g = random_function(lat, rng);
    auto t = apply_bilinear(constant_multiplier(1, 1.0), f, g);
    auto p = pointwise_product(synthesize(f), synthesize(g));
    CHECK(max_abs_diff(t, p) < 1e-11 * max_abs(p));
}

TEST_CASE("single modes")
{
    FreqLattice lat(2, 3);
    SpectralFunction f(lat), g(lat);
    f.at(std::vector<int>{1, -2}) = 1.0;
    g.at(std::vector<int>{3, 1}) = 1.0;
    Multiplier m;
    m.n = 2;
    m.eval = [](std::span<const double> z) { return cplx(z[0] + 2 * z[3], z[1]); };
    auto t = apply_bilinear(m, f, g);
    const cplx mv(1 + 2 * 1, -2);
    for (int j0 = 0; j0 < t.samples_per_axis; ++j0)
        for (int j1 = 0; j1 < t.samples_per_axis; ++j1) {
            const double x0 = j0 * t.step, x1 = j1 * t.step;
            const cplx want = mv * std::polar(1.0, 2 * std::numbers::pi * (x0 * 4 + x1 * -1));
            CHECK(std::abs(t.samples[static_cast<std::size_t>(j0 * t.samples_per_axis + j1)] - want) < 1e-12);
        }
}

TEST_CASE("fast path matches the direct double sum")
{
    std::mt19937_64 rng(5);
    for (int R : {4, 8}) {
        for (double period : {1.0, 3.0}) {
            FreqLattice lat(1, R, 2, period);
            auto m = random_table(1, R, period, rng);
            auto f = random_function(lat, rng), g = random_function(lat, rng);
            auto fast = apply_bilinear(m, f, g);
            auto direct = apply_bilinear_direct(m, f, g);
            CHECK(max_abs_diff(fast, direct) <= 1e-10 * max_abs(direct));
        }
    }
    FreqLattice lat2(2, 2);
    auto m2 = random_table(2, 2, 1.0, rng);
    auto f = random_function(lat2, rng), g = random_function(lat2, rng);
    CHECK(max_abs_diff(apply_bilinear(m2, f, g), apply_bilinear_direct(m2, f, g)) <=
          1e-10 * max_abs(apply_bilinear_direct(m2, f, g)));
}

TEST_CASE("bilinearity and translation covariance")
{
    std::mt19937_64 rng(9);
    FreqLattice lat(1, 5, 2, 2.0);
    auto m = random_table(1, 5, 2.0, rng);
    auto f1 = random_function(lat, rng), f2 = random_function(lat, rng), g = random_function(lat, rng);
    const cplx a{1.5, -0.2};
    auto lhs = apply_bilinear(m, a * f1 + f2, g);
    auto r1 = apply_bilinear(m, f1, g), r2 = apply_bilinear(m, f2, g);
    double worst = 0;
    for (std::size_t i = 0; i < lhs.samples.size(); ++i)
        worst = std::max(worst, std::abs(lhs.samples[i] - (a * r1.samples[i] + r2.samples[i])));
    CHECK(worst < 1e-12 * max_abs(lhs) * 10);

    // shift by a = 3 grid steps
    const int shift = 3;
    const double shift_x = shift * lat.step();
    SpectralFunction fs(lat), gs(lat);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const int nu = lat.point(i)[0];
        const cplx ph = std::polar(1.0, -2 * std::numbers::pi * shift_x * nu / lat.period);
        fs.coeffs[i] = f1.coeffs[i] * ph;
        gs.coeffs[i] = g.coeffs[i] * ph;
    }
    auto base = apply_bilinear(m, f1, g), moved = apply_bilinear(m, fs, gs);
    const int S = base.samples_per_axis;
    double err = 0;
    for (int j = 0; j < S; ++j)
        err = std::max(err, std::abs(moved.samples[static_cast<std::size_t>((j + shift) % S)] - base.samples[static_cast<std::size_t>(j)]));
    CHECK(err <= 1e-10 * max_abs(base));
}

TEST_CASE("adjoint multipliers")
{
    auto [c1, c2] = adjoint_multipliers(constant_multiplier(1, 1.0));
    CHECK(c1({0.3, -2.0}) == cplx(1.0));
    CHECK(c2({0.3, -2.0}) == cplx(1.0));

    Multiplier probe;
    probe.n = 1;
    probe.eval = [](std::span<const double> z) { return cplx(z[0]); };
    auto [p1, p2] = adjoint_multipliers(probe);
    CHECK(p1({0.25, 0.5}) == cplx(-0.75));
    CHECK(p2({0.25, 0.5}) == cplx(0.25));

    // integral T_m(f,g) h = integral T_m1(h,g) f = integral T_m2(f,h) g
    std::mt19937_64 rng(21);
    FreqLattice lat(1, 4);
    auto m = random_table(1, 8, 1.0, rng);
    auto [m1, m2] = adjoint_multipliers(m);
    auto f = random_function(lat, rng), g = random_function(lat, rng), h = random_function(lat, rng);
    const cplx lhs = pairing(apply_bilinear(m, f, g), synthesize(h));
    const cplx rhs1 = pairing(apply_bilinear(m1, h, g), synthesize(f));
    const cplx rhs2 = pairing(apply_bilinear(m2, f, h), synthesize(g));
    CHECK(std::abs(lhs - rhs1) <= 1e-10 * std::abs(lhs));
    CHECK(std::abs(lhs - rhs2) <= 1e-10 * std::abs(lhs));
}

TEST_CASE("dilated sums")
{
    std::mt19937_64 rng(4);
    FreqLattice lat(1, 6, 2, 4.0);
    auto f = random_function(lat, rng), g = random_function(lat, rng);
    spectral::BumpProfile annulus_outer(1.0, 2.0), annulus_inner(0.5, 1.0);
    Multiplier ann;
    ann.n = 1;
    ann.eval = [=](std::span<const double> z) {
        const double r = std::hypot(z[0], z[1]);
        return cplx(annulus_outer(r) - annulus_inner(r));
    };
    ann.decay = DecayRecord{4.0, 1.0, {}};

    DilatedSum single{ann, 0, 0, {1.0}, {}};
    auto one = apply_dilated_sum(single, f, g);
    CHECK(max_abs_diff(one.value, apply_bilinear(ann, f, g)) < 1e-12 * max_abs(one.value));

    DilatedSum zero{ann, -3, 3, std::vector<double>(7, 0.0), {}};
    CHECK(max_abs(apply_dilated_sum(zero, f, g).value) == 0.0);

    DilatedSum narrow{ann, -6, 6, {}, {}};
    DilatedSum wide{ann, -12, 12, {}, {}};
    auto a = apply_dilated_sum(narrow, f, g), b = apply_dilated_sum(wide, f, g);
    CHECK(a.contributing == b.contributing);
    CHECK(a.contributing > 0);
    CHECK(max_abs_diff(a.value, b.value) < 1e-12 * max_abs(b.value));
    CHECK(std::isfinite(b.tail_estimate));
    CHECK(b.tail_estimate < a.tail_estimate);

    DilatedSum empty{ann, 1, 0, {}, {}};
    CHECK_THROWS_AS(apply_dilated_sum(empty, f, g), Error);
}

TEST_CASE("witness norm basics")
{
    FreqLattice lat(1, 3);
    SpectralFunction f(lat);
    f.at(std::vector<int>{2}) = 1.0;
    std::vector<std::pair<SpectralFunction, SpectralFunction>> pairs{{f, f}};
    CHECK(witness_norm(constant_multiplier(1, 1.0), pairs).witnessed == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(witness_norm(constant_multiplier(1, 0.0), pairs).witnessed == 0.0);
    auto rep = witness_norm(constant_multiplier(1, 1.0), pairs, BoundInputs{2.0, 4.0, 9.0, 1.0});
    CHECK(rep.predicted == doctest::Approx(6.0));
    std::vector<std::pair<SpectralFunction, SpectralFunction>> bad{{SpectralFunction(lat), f}};
    CHECK_THROWS_AS(witness_norm(constant_multiplier(1, 1.0), bad), Error);
}
