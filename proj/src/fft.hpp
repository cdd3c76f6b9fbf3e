#pragma once

#include <complex>
#include <vector>

namespace bilab::detail {

// In-place n-dimensional DFT on a cube of side `side`, row-major.
// sign = +1 computes sum_k a_k exp(+2 pi i j.k / side); sign = -1 the forward kernel.
void dft_inplace(std::vector<std::complex<double>>& data, int n, int side, int sign);

} // namespace bilab::detail
