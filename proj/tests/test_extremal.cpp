#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "bilab/bilinear.hpp"
#include "bilab/extremal.hpp"

using namespace bilab;
using namespace bilab::extremal;

TEST_CASE("sign sequences are deterministic and balanced")
{
    SignSequence a(42), b(42), c(43);
    int same = 0, plus = 0;
    for (long i = -500; i < 500; ++i) {
        CHECK(std::abs(a.draw(i)) == 1);
        CHECK(a.draw(i) == b.draw(i));
        same += a.draw(i) == c.draw(i);
        plus += a.draw(i) > 0;
    }
    CHECK(same > 400);
    CHECK(same < 600);
    CHECK(plus > 430);
    CHECK(plus < 570);

    // streams are independent of each other
    int agree = 0;
    for (long i = 0; i < 1000; ++i) agree += a.with_stream(1).draw(i) == a.with_stream(2).draw(i);
    CHECK(agree > 430);
    CHECK(agree < 570);

    const int v2[2] = {3, -7};
    CHECK(a.draw(std::span<const int>(v2)) == b.draw(std::span<const int>(v2)));
    const long one[1] = {17};
    CHECK(a.draw(std::span<const long>(one)) == a.draw(17L));

    auto k = SignSequence::constant(-1);
    CHECK(k.draw(5L) == -1);
    k.freeze(5, 1);
    CHECK(k.draw(5L) == 1);
    CHECK(k.draw(6L) == -1);
    CHECK_THROWS_AS(k.freeze(1, 0), Error);
}

TEST_CASE("block family weights and coefficients")
{
    Thm12Family fam(2);
    const auto w = fam.weights();
    for (long j = 1; j < static_cast<long>(w.size()); ++j) {
        if (j >= 4 && j <= 7) CHECK(w[static_cast<std::size_t>(j)] == 0.5);
        else CHECK(w[static_cast<std::size_t>(j)] == 0.0);
    }
    CHECK(fam.weight(8) == 0.0);
    for (int N = 2; N <= 12; ++N) {
        double s = 0;
        for (double x : Thm12Family(N).weights()) s += x * x;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(block_coefficient(2) == 1.0);
    CHECK(block_coefficient(1) == 0.0);
    CHECK(block_coefficient(11) == doctest::Approx(std::sqrt((1 + std::log(10.0)) / 10)));
    CHECK_THROWS_AS(Thm12Family(1), Error);
}

TEST_CASE("block pair spectra")
{
    for (int N = 2; N <= 8; ++N) {
        Thm12Family fam(N);
        CHECK(fam.min_radius() == (1 << (N + 1)));
        auto [f, g] = build_thm12_pair(fam);
        CHECK(f.l2_norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g.coeffs == f.coeffs);
    }
    // a torus wide enough to resolve the bump: norm is the profile mass, constant in N
    std::vector<double> norms;
    for (int N = 2; N <= 5; ++N) {
        Thm12Family fam(N, 1, 256.0);
        auto [f, g] = build_thm12_pair(fam);
        norms.push_back(f.l2_norm());
        CHECK(f.l2_norm() == doctest::Approx(std::sqrt(fam.profile_mass())).epsilon(1e-12));
    }
    CHECK(dispersion(norms) < 0.01);

    Thm12Family fam(4);
    CHECK_THROWS_AS(build_thm12_pair(fam, spectral::FreqLattice(1, 31)), Error);

    // two-dimensional variant: extra axis sits at frequency 1
    Thm12Family fam2(2, 2);
    auto [f2, g2] = build_thm12_pair(fam2);
    const int at[2] = {5, 1};
    CHECK(f2.at(at).real() == doctest::Approx(0.5));
    CHECK(f2.l2_norm() == doctest::Approx(1.0));
}

TEST_CASE("convolution weights")
{
    CHECK(conv_weight(30, 4) == Rational(0));
    CHECK(conv_weight(40, 4) == Rational(9, 16));
    CHECK(conv_weight(48, 4) == Rational(15, 16));
    // interval-count oracle
    for (int N = 2; N <= 8; ++N) {
        const long lo = 1L << N, hi = 2 * lo - 1;
        for (long l = 2; l <= 4 * lo + 4; ++l) {
            const long cnt = std::max(0L, std::min(hi, l - lo) - std::max(lo, l - hi) + 1);
            REQUIRE(conv_weight(l, N) == Rational(cnt, lo));
        }
    }
    CHECK_THROWS_AS(conv_weight(1, 4), Error);
}

TEST_CASE("square-function formula")
{
    std::vector<double> c(10, 0.0), b(10, 0.0), d(10, 0.0);
    b[1] = 1;
    d[2] = 1;
    CHECK(khintchine_l1(c, b, d) == 0.0);
    c[3] = 1;
    CHECK(khintchine_l1(c, b, d) == doctest::Approx(1.0));
    CHECK(khintchine_l1(c, b, d, 2.0, 2) == doctest::Approx(4.0));

    // direct oracle against exact convolution weights
    Thm12Family fam(5);
    double s = 0;
    for (long l = 2; l <= 4 * fam.block_lo(); ++l) {
        const double w = boost::rational_cast<double>(conv_weight(l, 5));
        s += std::pow(block_coefficient(l) * w, 2);
    }
    CHECK(khintchine_l1(fam) == doctest::Approx(std::sqrt(s)).epsilon(1e-12));

    // growth like N^{1/2}
    std::vector<double> kappa;
    for (int N = 4; N <= 12; ++N) kappa.push_back(khintchine_l1(Thm12Family(N)) / std::sqrt(N));
    CHECK(dispersion(kappa) <= 0.20);
}

TEST_CASE("randomized average")
{
    SUBCASE("constant signs reduce to one evaluation")
    {
        Thm12Family fam(4);
        auto r = randomized_l1_average(fam, 1, SignSequence::constant(1));
        auto [f, g] = build_thm12_pair(fam);
        auto m = thm12_multiplier(fam, SignSequence::constant(1));
        const double direct = spectral::lp_norm(bilinear::apply_bilinear(m, f, g), 1.0);
        CHECK(r.mean == doctest::Approx(direct).epsilon(1e-14));
        CHECK(r.std_error == 0.0);
    }
    SUBCASE("Khintchine sandwich")
    {
        for (int N = 4; N <= 7; ++N) {
            Thm12Family fam(N);
            auto r = randomized_l1_average(fam, 200, 7);
            CAPTURE(N);
            CHECK(r.ratio >= 0.70);
            CHECK(r.ratio <= 1.00);
            CHECK(r.mean >= r.square_function / std::sqrt(2.0));
            CHECK(r.mean <= r.square_function + 3 * r.std_error);
            CHECK(r.best >= r.mean);
        }
    }
    SUBCASE("seeded runs are identical")
    {
        Thm12Family fam(4);
        auto a = randomized_l1_average(fam, 20, 99), b = randomized_l1_average(fam, 20, 99);
        CHECK(a.per_trial == b.per_trial);
        CHECK(a.frozen_signs == b.frozen_signs);
    }
    SUBCASE("frozen signs reproduce the chosen trial on every block")
    {
        std::vector<RandomizedResult> blocks;
        for (int N = 3; N <= 5; ++N) blocks.push_back(randomized_l1_average(Thm12Family(N), 16, 5));
        const auto s = frozen_sequence(blocks);
        for (const auto& blk : blocks) {
            Thm12Family fam(blk.N);
            auto [f, g] = build_thm12_pair(fam);
            auto frozen = bilinear::apply_bilinear(thm12_multiplier(fam, s), f, g);
            auto chosen = bilinear::apply_bilinear(
                thm12_multiplier(fam, SignSequence(5).with_stream(static_cast<std::uint64_t>(blk.best_trial))), f, g);
            double err = 0;
            for (std::size_t i = 0; i < frozen.size(); ++i) err = std::max(err, std::abs(frozen.samples[i] - chosen.samples[i]));
            CHECK(err == 0.0);
            CHECK(spectral::lp_norm(frozen, 1.0) == doctest::Approx(blk.best).epsilon(1e-14));
        }
    }
}

TEST_CASE("block multiplier values")
{
    Thm12Family fam(3);
    SignSequence s(11);
    auto m = thm12_multiplier(fam, s);
    CHECK(m(std::initializer_list<double>{9.0, 10.0}).real() == doctest::Approx(s.draw(19L) * block_coefficient(19)));
    CHECK(m(std::initializer_list<double>{9.2, 10.0}) == cplx(0.0));
    CHECK(m(std::initializer_list<double>{0.0, 10.0}) == cplx(0.0));
    CHECK(std::abs(m(std::initializer_list<double>{9.03, 10.0})) == doctest::Approx(block_coefficient(19)));
    CHECK(m.derivative_bounds.at(0) == 1.0);
}

TEST_CASE("witnessed norm of the block pair tracks the square function")
{
    Thm12Family fam(6);
    auto r = randomized_l1_average(fam, 16, 3);
    auto m = thm12_multiplier(fam, frozen_sequence(std::span<const RandomizedResult>(&r, 1)));
    auto [f, g] = build_thm12_pair(fam);
    std::vector<std::pair<spectral::SpectralFunction, spectral::SpectralFunction>> pairs{{f, g}};
    auto rep = bilinear::witness_norm(m, pairs);
    CHECK(rep.witnessed == doctest::Approx(r.square_function).epsilon(0.15));
}

TEST_CASE("partial L^q sums of the counterexample")
{
    CHECK(counterexample_lq_partial(5, 2) == doctest::Approx(1.0));
    CHECK(counterexample_lq_partial(4, 2) == doctest::Approx(1.0));
    CHECK(counterexample_lq_partial(2, 3) == doctest::Approx(std::sqrt(1.0 + (1 + std::log(2.0)))));

    std::vector<double> inc;
    double prev = counterexample_lq_partial(5, 1L << 10);
    for (int e = 11; e <= 16; ++e) {
        const double cur = counterexample_lq_partial(5, 1L << e);
        inc.push_back(cur - prev);
        prev = cur;
    }
    for (std::size_t i = 1; i < inc.size(); ++i) CHECK(inc[i] < inc[i - 1]);
    CHECK(inc.back() < 0.02 * prev);

    std::vector<double> x, y;
    for (int e = 10; e <= 16; ++e) {
        const long L = 1L << e;
        x.push_back(std::log(1 + std::log(static_cast<double>(L - 1))));
        y.push_back(std::log(std::pow(counterexample_lq_partial(4, L), 4)));
    }
    CHECK(fit_line(x, y).slope == doctest::Approx(3.0).epsilon(0.1));
    CHECK_THROWS_AS(counterexample_lq_partial(0.5, 10), Error);
}

TEST_CASE("multi-scale index sets")
{
    for (int N = 4; N <= 10; ++N) {
        const auto I = block_I(N), J = block_J(N), L = block_L(N);
        std::set<long> sums;
        for (long a = I.lo; a <= I.hi; ++a)
            for (long b = I.lo; b <= I.hi; ++b) sums.insert(a + b);
        CHECK(static_cast<long>(sums.size()) == J.size());
        CHECK(*sums.begin() == J.lo);
        CHECK(*sums.rbegin() == J.hi);
        CHECK(J.contains(L.lo));
        CHECK(J.contains(L.hi));
        for (long l = J.lo - 2; l <= J.hi + 2; ++l) {
            long cnt = 0;
            for (long a = I.lo; a <= I.hi; ++a) cnt += I.contains(l - a);
            REQUIRE(pair_count(l, N) == cnt);
        }
        if (N > 4) CHECK(block_J(N - 1).hi < J.lo);
    }
    CHECK(block_J(4).lo == 42);
    CHECK_THROWS_AS(block_I(3), Error);
}

TEST_CASE("localization of the multi-scale family")
{
    Thm13Family fam;
    for (int K = 4; K <= 12; ++K) {
        auto rep = check_localization(fam, K, K + 3);
        CAPTURE(K);
        CHECK(rep.ok());
        CHECK(rep.meeting == block_I(K).size());
    }
    Thm13Family wide;
    wide.input_center = 1.5;
    wide.input_hat = spectral::BumpProfile(0.1, 0.6);
    CHECK_FALSE(check_localization(wide, 6, 9).ok());
}

TEST_CASE("spatial cutoff")
{
    Thm13Family fam;
    // brute-force midpoint oracle
    auto oracle = [&](double y) {
        const int M = 200000;
        double s = 0;
        for (int i = 0; i < M; ++i) {
            const double xi = -0.1 + (i + 0.5) * 0.2 / M;
            s += fam.cutoff_hat(xi) * std::cos(2 * M_PI * y * xi);
        }
        return s * 0.2 / M;
    };
    for (double y : {0.0, 0.3, 1.0, 7.5, 20.0, 63.0}) CHECK(fam.spatial_cutoff(y) == doctest::Approx(oracle(y)).epsilon(1e-8).scale(1e-3));
    CHECK(fam.spatial_cutoff(0) == doctest::Approx(0.15));
    CHECK(fam.spatial_cutoff(-3.0) == fam.spatial_cutoff(3.0));
    CHECK(std::abs(fam.spatial_cutoff(500.0)) < 1e-12);
}

TEST_CASE("multi-scale multiplier and closed form")
{
    Thm13Family fam;
    SignSequence s(2);
    auto m = fam.multiplier(s, 4, 6);
    const long j = 21, k = 23;  // both in I_4
    const long l[1] = {j + k};
    CHECK(m(std::initializer_list<double>{21.0, 23.0}).real() ==
          doctest::Approx(s.draw(std::span<const long>(l)) * fam.coefficient(44)));
    CHECK(m(std::initializer_list<double>{21.0, 41.0}) == cplx(0.0));  // 41 in I_5
    CHECK(m(std::initializer_list<double>{20.0, 23.0}) == cplx(0.0));  // 20 outside I_4
    CHECK(m(std::initializer_list<double>{21.2, 23.0}) == cplx(0.0));

    const int one[1] = {5};
    const double x0[1] = {0.0};
    // at x = 0 every phase is 1
    double expect = 0;
    for (long p = block_J(5).lo; p <= block_J(5).hi; ++p) {
        const long lp[1] = {p};
        expect += s.draw(std::span<const long>(lp)) * fam.coefficient(p) * pair_count(p, 5);
    }
    expect *= std::pow(fam.spatial_cutoff(0), 2) / 1024.0;
    CHECK(thm13_closed_form(fam, one, s, x0).real() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("closed form matches the dilated operator on the torus")
{
    Thm13Family fam;
    SignSequence s(8);
    const int single[1] = {4};
    // the torus must hold the slowly decaying spatial tail: error is periodization only
    auto coarse = thm13_cross_check(fam, single, s, 64);
    auto c1 = thm13_cross_check(fam, single, s, 256);
    CHECK(c1.relative_error() < 1e-8);
    CHECK(coarse.relative_error() > c1.relative_error());
    const int pair[2] = {4, 5};
    auto c2 = thm13_cross_check(fam, pair, s, 128);
    CHECK(c2.relative_error() < 1e-4);
    const int gap[2] = {4, 6};
    CHECK_THROWS_AS(thm13_cross_check(fam, gap, s), Error);
}

TEST_CASE("multi-scale square function growth")
{
    Thm13Family fam;
    std::vector<double> ratios;
    double prev = 0;
    for (int D = 6; D <= 10; ++D) {
        std::vector<int> S;
        for (int K = 4; K <= D; ++K) S.push_back(K);
        auto r = thm13_square_function(fam, S);
        CHECK(r.localized);
        CHECK(r.square_function > prev);
        prev = r.square_function;
        ratios.push_back(r.ratio);
        CHECK(r.anchor > 0);
        CHECK(r.anchor_mass > 0);
    }
    CHECK(dispersion(ratios) <= 0.25);

    Thm13Family fam2(2);
    fam2.quadrature_panels = 8;
    const int S2[3] = {4, 5, 6};
    auto r2 = thm13_square_function(fam2, S2);
    CHECK(r2.square_function > 0);
    CHECK(r2.level_sum > 0);
}

TEST_CASE("exponent sharpness")
{
    auto one = sharpness_exponent_test(1, 0.1, 0.5);
    CHECK(one.lhs == 0.0);
    CHECK(one.rhs == 0.0);

    for (long N : {10L, 100L, 1000L}) {
        const double eps = 0.3;
        auto s = sharpness_exponent_test(N, eps, 0.5);
        const double n = static_cast<double>(N);
        const double lhs = eps * eps * (n - 1) * (2 * n - 1) / (6 * n);
        const double rhs = std::sqrt(eps * eps * n * (n - 1) / 2);
        CHECK(s.lhs == doctest::Approx(lhs).epsilon(1e-12));
        CHECK(s.rhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    // asymptotic constant sqrt(2)/3 * eps at r = 1/2
    CHECK(sharpness_exponent_test(10000, 1.0, 0.5).ratio == doctest::Approx(std::sqrt(2.0) / 3).epsilon(1e-3));

    for (double r : {0.3, 0.4}) {
        std::vector<double> x, y;
        for (long N = 10; N <= 10000; N *= 10) {
            x.push_back(std::log(static_cast<double>(N)));
            y.push_back(std::log(sharpness_exponent_test(N, 0.5, r).ratio));
        }
        CHECK(fit_line(x, y).slope == doctest::Approx(1 - 2 * r).epsilon(0.25));
    }
}

TEST_CASE("derivative count scaling")
{
    auto base = derivative_count_test(0, 2.0, 1);
    CHECK(base.derivatives == 2);
    CHECK(base.input_l2 > 0);
    for (int lam = 1; lam <= 5; ++lam) {
        auto r = derivative_count_test(lam, 2.0, 1);
        CAPTURE(lam);
        CHECK(r.lq_scaled == doctest::Approx(base.lq_scaled).epsilon(1e-10));
        CHECK(r.input_l2 == doctest::Approx(base.input_l2).epsilon(1e-10));
        CHECK(r.output_l1 == doctest::Approx(base.output_l1).epsilon(0.10));
        CHECK(r.c0 == doctest::Approx(base.c0 * std::pow(2.0, lam * r.derivatives)).epsilon(1e-12));
        CHECK(r.exponent == doctest::Approx(lam * (2 * 0.5 - 0.5)));
    }
    ScalingOptions coarse;
    coarse.base_period = 400;
    CHECK_THROWS_AS(derivative_count_test(1, 2.0, 1, coarse), Error);
    CHECK_THROWS_AS(derivative_count_test(0, 4.0, 1), Error);
}

TEST_CASE("fit helpers")
{
    const double x[3] = {0, 1, 2}, y[3] = {1, 3, 5};
    auto f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    const double v[3] = {1, 1.1, 0.9};
    CHECK(dispersion(v) == doctest::Approx(0.2));
}
