#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bilab/multiplier.hpp"

namespace bilab::wavelet {

// Daubechies pair with p vanishing moments, tabulated on the dyadic mesh 2^-depth.
struct WaveletSystem {
    int smoothness = 0;   // requested continuous derivatives
    int moments = 0;      // requested vanishing moments (alpha = 0..moments)
    int order = 2;        // filter order p, filter length 2p
    int depth = 12;
    double holder = 0.0;  // Hoelder exponent of the scaling function (tabulated estimate)
    std::vector<double> low;   // h_i, sum = sqrt 2
    std::vector<double> high;  // g_i = (-1)^i h_{2p-1-i}
    std::vector<double> scaling_table;  // phi(i 2^-depth), i = 0..(2p-1) 2^depth
    std::vector<double> wavelet_table;  // psi on the same mesh

    int filter_length() const { return 2 * order; }
    int support_length() const { return 2 * order - 1; }
    double scaling(double x) const;
    double wavelet(double x) const;
    double factor(bool is_wavelet, double x) const { return is_wavelet ? wavelet(x) : scaling(x); }
    // exact table lookup at x = i 2^-level, level <= depth
    double scaling_at(long long i, int level) const;
    double wavelet_at(long long i, int level) const;
};

using SystemPtr = std::shared_ptr<const WaveletSystem>;

// Smallest filter order whose scaling function is C^k.
int minimal_order_for_smoothness(int k);
double holder_estimate(int order);

// depth <= 0 refines the tabulation until the L2 norms are 1 within 1e-9.
SystemPtr build_wavelet_system(int smoothness, int moments, int depth = 0);

// 1D L2 inner product of 2^{l/2} f(2^l x - m) functions by the tabulation rule.
struct Atom1D {
    int level = 0;
    bool is_wavelet = false;
    int shift = 0;
};
double inner_product_1d(const WaveletSystem& sys, const Atom1D& a, const Atom1D& b);
double moment(const WaveletSystem& sys, bool is_wavelet, int alpha);

struct CoeffSlice {
    int level = 0;
    unsigned gender = 0;  // bit a set: wavelet factor on axis a
    int n = 1;
    std::vector<int> origin;  // first translation per axis (2n axes)
    std::vector<int> extent;
    std::vector<cplx> values;  // row-major, axis 0 slowest
    std::vector<std::uint8_t> active;  // empty means every entry is present

    std::size_t size() const { return values.size(); }
    std::size_t cols() const;  // product of the last n extents
    std::size_t rows() const { return cols() ? size() / cols() : 0; }
    bool is_active(std::size_t i) const { return active.empty() || active[i] != 0; }
    std::vector<int> translation(std::size_t flat) const;
    std::size_t flat_index(std::span<const int> mu) const;
    bool contains(std::span<const int> mu) const;
};

struct WaveletCoeffs {
    SystemPtr system;
    int n = 1;
    int lambda_max = 0;
    Box box;
    std::string source;
    std::vector<CoeffSlice> slices;  // ordered by (level, gender)

    const CoeffSlice* slice(int level, unsigned gender) const;
    CoeffSlice* slice(int level, unsigned gender);
    std::size_t entry_count() const;
    double linf() const;
    double lq(double q) const;
    // support [2^-l mu, 2^-l (mu + 2p - 1)] inside the analysis box on every axis
    bool support_inside_box(const CoeffSlice& s, std::size_t flat) const;
    std::size_t boundary_count() const;
};

struct AnalysisOptions {
    int sublevels = 2;  // quadrature mesh 2^-(lambda_max + 1 + sublevels)
    std::size_t max_samples = std::size_t{1} << 27;
};

WaveletCoeffs analyze(const Multiplier& m, SystemPtr system, int lambda_max, const Box& box,
                      const AnalysisOptions& opts = {});

// Tabulated sum of all active entries on the node grid box.lo + i * mesh.
Multiplier reconstruct(const WaveletCoeffs& c, const Box& box, double mesh);

// Evaluable expansion over one slice (inactive entries skipped).
Multiplier slice_multiplier(const CoeffSlice& slice, SystemPtr system);

// max over translations and non-trivial genders per level, index = level
std::vector<double> scale_maxima(const WaveletCoeffs& c);

struct ScaleBound {
    int level = 0;
    unsigned gender = 0;
    double value = 0.0;  // 2^{l n (1 - 2/q)} ||b||_q over the slice
};

struct TriebelEstimate {
    double q = 2.0;
    double square_function = 0.0;
    std::vector<ScaleBound> per_scale;
    double max_scale_bound() const;
};

// Cubes are side 2^-l centred at 2^-l mu, so they tile space per scale and
// a lone level-0 coefficient b gives exactly |b|.
TriebelEstimate triebel_lq_estimate(const WaveletCoeffs& c, double q);

struct RowCol {
    std::size_t row = 0;
    std::size_t col = 0;
    auto operator<=>(const RowCol&) const = default;
};

struct LevelSetSplit {
    int r = 0;
    double q = 2.0;
    double linf = 0.0;
    double lq = 0.0;
    double lower = 0.0;          // strict: |b| > lower
    double upper = 0.0;          // non-strict: |b| <= upper
    double row_threshold = 0.0;  // 2^{rq/2} ||b||_q^{q/2} ||b||_inf^{-q/2}
    std::vector<RowCol> level_set;
    std::vector<RowCol> heavy;   // rows with at least row_threshold members
    std::vector<RowCol> light;
    std::vector<std::size_t> heavy_rows;
    double proven_constant = 0.0;    // 2^q: card E <= 2^q * row_threshold
    double measured_constant = 0.0;  // card E / row_threshold
    bool bound_holds = true;
};

LevelSetSplit level_split(const CoeffSlice& slice, int r, double q);

// Largest r for which the level set can be nonempty.
int max_level(const CoeffSlice& slice);

// (heavy part, light part) as slice expansions with the tensor factors of each entry intact
std::pair<Multiplier, Multiplier> assemble_split_multipliers(const CoeffSlice& slice,
                                                             const LevelSetSplit& split,
                                                             SystemPtr system);

// Slice restricted to the given entries (others inactive).
CoeffSlice restrict_slice(const CoeffSlice& slice, const std::vector<RowCol>& keep);

// (meets the cone 2^-j|xi| <= |eta| <= 2^j|xi|, complement)
std::pair<WaveletCoeffs, WaveletCoeffs> diagonal_split(const WaveletCoeffs& c, int j);

// columns: lambda,gender_mask,mu_1..mu_2n,re,im
void write_coefficients_csv(const WaveletCoeffs& c, std::ostream& os);

} // namespace bilab::wavelet
