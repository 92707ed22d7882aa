#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace nhflow {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

// Iterative kernels that fail to converge throw this, carrying the index
// (eigenvalue, particle, grid cell) where things went wrong.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::ptrdiff_t index = -1)
        : std::runtime_error(what), index_(index) {}
    std::ptrdiff_t index() const noexcept { return index_; }

private:
    std::ptrdiff_t index_;
};

inline double abs2(cplx z) { return z.real() * z.real() + z.imag() * z.imag(); }

}  // namespace nhflow
