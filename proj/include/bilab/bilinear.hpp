#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bilab/multiplier.hpp"
#include "bilab/spectral.hpp"

namespace bilab::bilinear {

using spectral::GridFunction;
using spectral::SpectralFunction;

// sum over nonzero (xi, eta) pairs accumulated per output frequency, then one inverse DFT
GridFunction apply_bilinear(const Multiplier& m, const SpectralFunction& f, const SpectralFunction& g);

// naive double sum evaluated independently at every grid point
GridFunction apply_bilinear_direct(const Multiplier& m, const SpectralFunction& f,
                                   const SpectralFunction& g);

// Output-frequency coefficients of T_m(f,g) on the lattice of radius 2R.
SpectralFunction bilinear_spectrum(const Multiplier& m, const SpectralFunction& f,
                                   const SpectralFunction& g);

struct DilatedSum {
    Multiplier base;
    int k_min = -12;
    int k_max = 12;
    std::vector<double> signs;           // r_k for k = k_min..k_max; empty means all +1
    std::vector<Multiplier> per_scale;   // optional M_k replacing base(2^k .)

    double sign(int k) const;
    Multiplier scale(int k) const;
};

struct DilatedSumResult {
    GridFunction value;
    int k_min = 0;
    int k_max = 0;
    int contributing = 0;
    double tail_estimate = 0.0;  // NaN when no decay record is registered
};

DilatedSumResult apply_dilated_sum(const DilatedSum& T, const SpectralFunction& f,
                                   const SpectralFunction& g);

std::pair<Multiplier, Multiplier> adjoint_multipliers(const Multiplier& m);

// integral over the periodic cell of u * v
cplx pairing(const GridFunction& u, const GridFunction& v);

struct BoundInputs {
    double q = 2.0;
    double lq_norm = 0.0;
    double c0 = 0.0;
    double constant = 1.0;
};

struct NormReport {
    double q = 0.0;
    double lq_norm = 0.0;
    double c0 = 0.0;
    double predicted = 0.0;
    double witnessed = 0.0;
    std::size_t best_pair = 0;
    std::vector<double> per_pair;
    std::string method = "witness: max over supplied test pairs (no power iteration)";
    std::map<std::string, std::string> metadata;
};

double predicted_bound(const BoundInputs& in);

NormReport witness_norm(const Multiplier& m,
                        std::span<const std::pair<SpectralFunction, SpectralFunction>> pairs,
                        std::optional<BoundInputs> bound = std::nullopt);

} // namespace bilab::bilinear
