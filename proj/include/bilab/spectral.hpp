#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bilab/error.hpp"

namespace bilab {

using cplx = std::complex<double>;

namespace spectral {

// Integer frequency box [-radius, radius]^n on a torus of side `period`.
// A lattice point nu stands for the frequency nu / period.
struct FreqLattice {
    int n = 1;
    int radius = 1;
    int oversample = 2;
    double period = 1.0;

    FreqLattice() = default;
    FreqLattice(int n, int radius, int oversample = 2, double period = 1.0);

    int side() const { return 2 * radius + 1; }
    std::size_t size() const;
    int samples_per_axis() const { return oversample * side(); }
    std::size_t sample_count() const;
    double step() const { return period / samples_per_axis(); }
    double frequency(int nu) const { return nu / period; }

    bool contains(std::span<const int> nu) const;
    std::size_t index(std::span<const int> nu) const;
    std::vector<int> point(std::size_t idx) const;

    bool operator==(const FreqLattice&) const = default;
};

// Fourier-series coefficients: f(x) = sum_nu coeffs[nu] exp(2 pi i x.nu/period).
struct SpectralFunction {
    FreqLattice lattice;
    std::vector<cplx> coeffs;

    SpectralFunction() = default;
    explicit SpectralFunction(const FreqLattice& lat);
    SpectralFunction(const FreqLattice& lat, std::vector<cplx> c);

    cplx& at(std::span<const int> nu) { return coeffs[lattice.index(nu)]; }
    cplx at(std::span<const int> nu) const { return coeffs[lattice.index(nu)]; }

    double l2_norm() const;
    SpectralFunction& operator+=(const SpectralFunction& o);
    SpectralFunction& operator*=(cplx s);
};

SpectralFunction operator+(SpectralFunction a, const SpectralFunction& b);
SpectralFunction operator*(cplx s, SpectralFunction a);

// Samples at x_j = j * step, j in [0, samples_per_axis)^n, row-major.
struct GridFunction {
    int n = 1;
    int samples_per_axis = 0;
    double step = 1.0;
    std::vector<cplx> samples;

    double cell_volume() const;
    std::size_t size() const { return samples.size(); }
};

enum class BumpKind { fourier_compact, space_compact };

// Radial smoothstep: 1 on |x| <= inner, 0 on |x| >= outer, C^smoothness in between.
struct BumpProfile {
    BumpKind kind = BumpKind::fourier_compact;
    double inner = 0.5;
    double outer = 1.0;
    int smoothness = 8;

    BumpProfile() = default;
    BumpProfile(double inner, double outer, int smoothness = 8,
                BumpKind kind = BumpKind::fourier_compact);

    double operator()(double x) const;
    double derivative(double x, int order) const;
    double derivative_sup(int order) const;
    double transition_width() const { return outer - inner; }
    std::string describe() const;
};

// smoothstep polynomial of order k on [0,1] and its derivatives
double smoothstep(int k, double t, int derivative = 0);

GridFunction synthesize(const SpectralFunction& f);
// Explicit samples per axis. Fewer samples than the lattice side fold frequencies
// mod the grid; grid values stay exact, only norms lose meaning.
GridFunction synthesize(const SpectralFunction& f, int samples_per_axis);

// p = infinity gives the max of |samples|.
double lp_norm(const GridFunction& u, double p);

GridFunction pointwise_product(const GridFunction& a, const GridFunction& b);

} // namespace spectral
} // namespace bilab
