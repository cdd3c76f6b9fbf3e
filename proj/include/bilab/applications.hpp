#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bilab/multiplier.hpp"
#include "bilab/spectral.hpp"

namespace bilab::applications {

using spectral::GridFunction;
using spectral::SpectralFunction;

// |S^{2n-1}| = 2 pi^n / Gamma(n)
double sphere_area(int n);

// Function on the unit sphere of R^{2n}, given by an analytic rule on unit vectors.
struct SphereSymbol {
    int n = 1;
    std::string name;
    std::function<double(std::span<const double>)> rule;
    double r = 2.0;   // integrability exponent tag

    double operator()(std::span<const double> unit) const { return rule(unit); }
};

// zero, first_coordinate, quadrupole, sign, rough_power
SphereSymbol sphere_symbol(const std::string& name, int n = 1, double r = 2.0);
std::vector<std::string> sphere_symbol_names();

struct SphereQuadrature {
    double tolerance = 1e-10;   // tanh-sinh tolerance per angle (endpoint singularities allowed)
    int azimuth = 8;            // trapezoid nodes in the last Hopf angle at n = 2
};

// integral over S^{2n-1} of rule(theta) d sigma; product-angle mesh split at the axes
double sphere_integral(int n, const std::function<double(std::span<const double>)>& rule,
                       const SphereQuadrature& quad = {});
double sphere_mean_value(const SphereSymbol& omega, const SphereQuadrature& quad = {});
double sphere_lr_norm(const SphereSymbol& omega, double r, const SphereQuadrature& quad = {});

// rho on (0, inf) with an L^2-average bound int_0^R |rho|^2 <= C R
struct RadialFactor {
    std::string name;
    std::function<double(double)> rule;
    double declared_bound = 1.0;

    double operator()(double r) const { return rule(r); }
};

// one, log_square, log_cosine
RadialFactor radial_factor(const std::string& name);
std::vector<std::string> radial_factor_names();

struct RadialCheck {
    double measured_bound = 0.0;   // max over the sweep of (1/R) int_0^R |rho|^2
    std::vector<double> radii;
    std::vector<double> averages;
    bool holds = true;
};

// dyadic sweep R = 2^lo .. 2^hi
RadialCheck verify_radial_bound(const RadialFactor& rho, int lo = -8, int hi = 8);

// beta(|x|) - beta(2|x|): supported in 1/2 <= |x| <= 2, dyadic dilates sum to 1
struct AnnulusProfile {
    spectral::BumpProfile beta{1.0, 2.0};
    double operator()(double radius) const { return beta(radius) - beta(2.0 * radius); }
    double inner() const { return beta.inner / 2.0; }
    double outer() const { return beta.outer; }
};

struct KernelGrid {
    double step = 1.0 / 64;   // spatial mesh
    double period = 8.0;      // side of the spatial box, centred at 0
};

struct RoughKernel {
    int n = 1;
    double r = 2.0;
    Multiplier multiplier;         // tabulated transform on the frequency node grid
    TabulatedGrid grid;
    double kernel_lr = 0.0;        // || K^0 ||_{L^r}
    double multiplier_lq = 0.0;    // || m ||_{L^{r'}} on the node grid
    double hy_ratio = 0.0;         // multiplier_lq / kernel_lr
    double origin_value = 0.0;     // |m(0)|
};

// K^0(x) = rho(|x|) Omega(x') |x|^{-2n} psi(x); transform of K^0 by FFT (n = 1)
RoughKernel rough_kernel_multiplier(const SphereSymbol& omega, const AnnulusProfile& profile = {},
                                    const KernelGrid& mesh = {},
                                    const std::function<double(double)>& radial = {});

struct FeffermanFamily {
    std::vector<int> scales;
    std::vector<RoughKernel> rescaled;     // M_k(2^{-k} .) for each k
    std::vector<double> lq_norms;          // || M_k(2^{-k} .) ||_{L^q}, q = r'
    double omega_lr = 0.0;
    double sup_ratio = 0.0;                // sup_k lq_norm / omega_lr
    double radial_bound = 0.0;             // measured C_rho
};

FeffermanFamily fefferman_scale_multipliers(const SphereSymbol& omega, const RadialFactor& rho,
                                            std::span<const int> scales, const AnnulusProfile& profile = {},
                                            const KernelGrid& mesh = {});

struct DecayOptions {
    double r_min = 16.0;
    double r_max = 256.0;
    int directions = 3;
    int samples_per_unit = 8;
    int shrink_steps = 20;
    double min_delta = 0.1;   // below this the envelope counts as non-decaying
};

struct DecayFit {
    double delta = 0.0;            // fitted decay exponent of the dyadic envelope
    double intercept = 0.0;
    std::vector<double> radii;
    std::vector<double> envelope;
    std::vector<double> origin_ratios;   // |m(z)| / |z| on a dyadic shrink sweep
    bool decaying = false;
    bool linear_near_origin = false;
};

DecayFit decay_check(const Multiplier& m, const DecayOptions& opts = {});

struct SurfaceFT {
    cplx value;
    bool converged = true;
};

struct SurfaceOptions {
    double max_radius = 4096.0;
};

// Fourier transform of the surface measure of S^{2n-1} at zeta in R^{2n}
SurfaceFT surface_measure_ft(int n, std::span<const double> zeta, const SurfaceOptions& opts = {});
// radial profile: value at |zeta| = rho
SurfaceFT surface_measure_radial(int n, double rho, const SurfaceOptions& opts = {});

// d sigma minus the Gaussian companion phi = psi (x) psi with (int psi)^2 = |S^{2n-1}|
struct SphericalMeasure {
    int n = 1;
    SurfaceOptions options;

    explicit SphericalMeasure(int n = 1) : n(n) {}
    double total_mass() const { return sphere_area(n); }
    double sigma_hat(std::span<const double> zeta) const;
    double phi_hat(std::span<const double> zeta) const;
    double mu_hat(std::span<const double> zeta) const;
    // symbols evaluated at 2^k (xi, eta)
    Multiplier sigma_multiplier(int k) const;
    Multiplier mu_multiplier(int k) const;
    Multiplier phi_multiplier(int k) const;
};

struct SphericalMaxResult {
    std::vector<int> scales;
    GridFunction maximal;            // A^d(f, g) = sup_k |A_{2^k}(f, g)|
    GridFunction maximal_f;          // centred-ball maximal surrogate of f
    GridFunction maximal_g;
    GridFunction mu_maximal;         // sup_k |A_{mu,k}(f, g)|
    std::vector<GridFunction> per_scale;
    std::vector<GridFunction> mu_per_scale;
    double worst_margin = 0.0;       // min over points of dominator - A^d
    bool dominated = true;
};

// Hardy-Littlewood surrogate: max over centred discrete balls of the average of |u|
// over radii up to max_periods torus periods, plus the r -> infinity limit mean |u|
GridFunction centred_maximal(const GridFunction& u, int max_periods = 4);

SphericalMaxResult dyadic_spherical_max(const SphericalMeasure& sm, const SpectralFunction& f,
                                        const SpectralFunction& g, std::span<const int> scales);

struct KhintchineResult {
    double p = 1.0;
    double square_function = 0.0;     // || (sum_k |A_{mu,k}|^2)^{1/2} ||_p
    double randomized = 0.0;          // mean over trials of || sum_k r_k A_{mu,k} ||_p
    double ratio = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

KhintchineResult khintchine_square_function(const SphericalMeasure& sm, const SpectralFunction& f,
                                            const SpectralFunction& g, std::span<const int> scales,
                                            int trials, std::uint64_t seed, double p = 1.0);

// real band-limited test function with random Hermitian coefficients
SpectralFunction random_real_spectrum(const spectral::FreqLattice& lat, std::uint64_t seed);

} // namespace bilab::applications
