#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace bilab::detail {

namespace {
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace

void dft_inplace(std::vector<std::complex<double>>& data, int n, int side, int sign)
{
    std::vector<int> dims(static_cast<std::size_t>(n), side);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft(n, dims.data(), buf, buf, sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD,
                             FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fftw plan creation failed");
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
}

} // namespace bilab::detail
