#pragma once

#include <stdexcept>
#include <string>

namespace bilab {

enum class Errc {
    invalid_argument,
    lattice_mismatch,
    non_finite,
    not_converged,
    infeasible,
    resource,
    schema,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline void require(bool ok, Errc code, const std::string& what)
{
    if (!ok) throw Error(code, what);
}

} // namespace bilab
