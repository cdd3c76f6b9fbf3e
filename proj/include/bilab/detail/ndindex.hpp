#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bilab::detail {

// Row-major walk over a box of integer multi-indices, last axis fastest.
class IndexWalker {
public:
    IndexWalker(std::vector<int> lo, std::vector<int> extent)
        : lo_(std::move(lo)), extent_(std::move(extent)), cur_(lo_)
    {
        done_ = extent_.empty();
        for (int e : extent_)
            if (e <= 0) done_ = true;
    }

    bool done() const { return done_; }
    std::span<const int> index() const { return cur_; }

    void next()
    {
        for (std::size_t a = cur_.size(); a-- > 0;) {
            if (++cur_[a] < lo_[a] + extent_[a]) return;
            cur_[a] = lo_[a];
        }
        done_ = true;
    }

private:
    std::vector<int> lo_, extent_, cur_;
    bool done_ = false;
};

inline std::size_t product(std::span<const int> extent)
{
    std::size_t p = 1;
    for (int e : extent) p *= static_cast<std::size_t>(e);
    return p;
}

inline long long floor_div(long long a, long long b)
{
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline long long pos_mod(long long a, long long b)
{
    long long r = a % b;
    return r < 0 ? r + b : r;
}

} // namespace bilab::detail
