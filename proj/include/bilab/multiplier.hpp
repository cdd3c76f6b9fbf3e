#pragma once

#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bilab/spectral.hpp"

namespace bilab {

// |m(z)| <= c_prime * min(|z|, |z|^-delta); c_alpha[j] bounds sup |d^alpha m| over |alpha| = j.
struct DecayRecord {
    double c_prime = 0.0;
    double delta = 0.0;
    std::vector<double> c_alpha;
};

// Function on R^n x R^n; evaluation points are (xi_1..xi_n, eta_1..eta_n).
struct Multiplier {
    using Rule = std::function<cplx(std::span<const double>)>;

    int n = 1;
    Rule eval;
    std::optional<DecayRecord> decay;
    // derivative_bounds[j] = max over |alpha| = j of sup |d^alpha m|
    std::vector<double> derivative_bounds;
    // smallest length scale on which m varies; 0 when unknown
    double feature_width = 0.0;
    std::string name;

    int dim() const { return 2 * n; }
    cplx operator()(std::span<const double> z) const { return eval(z); }
    cplx operator()(std::initializer_list<double> z) const
    {
        return eval(std::span<const double>(z.begin(), z.size()));
    }
};

Multiplier constant_multiplier(int n, cplx c);

// prod_a profile(z_a - center_a) over all 2n coordinates
Multiplier product_bump_multiplier(int n, const spectral::BumpProfile& profile,
                                   std::vector<double> center = {});

// z -> m(factor * z); registered bounds and metadata are rescaled exactly
Multiplier dilate(const Multiplier& m, double factor);

// Named compactly supported smooth multipliers; the first entry is the calibration member.
std::vector<std::string> smooth_catalogue_names();
Multiplier smooth_catalogue(const std::string& name, int n = 1);

// Values on a node grid lo + i * step, i in [0, count)^dim; multilinear in between, 0 outside.
struct TabulatedGrid {
    int n = 1;
    std::vector<double> lo;
    std::vector<double> step;
    std::vector<int> count;
    std::vector<cplx> values;

    std::size_t index(std::span<const int> i) const;
    cplx interpolate(std::span<const double> z) const;
};

Multiplier tabulated_multiplier(TabulatedGrid grid, std::string name = "tabulated");
TabulatedGrid tabulate(const Multiplier& m, std::vector<double> lo, std::vector<double> step,
                       std::vector<int> count);

// Axis-aligned box in R^dim.
struct Box {
    std::vector<double> lo, hi;
    static Box cube(int dim, double a, double b);
    int dim() const { return static_cast<int>(lo.size()); }
};

namespace spectral {

struct LqNormResult {
    double value = 0.0;
    double boundary_fraction = 0.0;
    bool converged = true;
};

// Midpoint tensor rule of |m|^q on the box; flags when the outer cell layer carries > 1%.
LqNormResult multiplier_lq_norm(const Multiplier& m, double q, const Box& box, double mesh);

struct DerivativeOptions {
    std::optional<Box> box;  // defaults to [-4, 4]^{2n}
    double step = 0.0;  // finite-difference step; 0 picks feature_width / (4 (M+1))
    double sample_spacing = 0.0;  // spacing of sup probes; 0 uses step
};

double sup_derivative_bound(const Multiplier& m, int order, const DerivativeOptions& opts = {});

} // namespace spectral
} // namespace bilab
