#pragma once

#include <nhflow/common.hpp>

#include <cmath>
#include <cstddef>

namespace nhflow::linalg::detail {

// Elementary reflector G = I - tau v v^H with v = (1, x), chosen so that
// G^H (alpha, x) = (beta, 0) with beta real. On return x holds v[1:] and
// alpha holds beta.
struct Reflector {
    cplx tau;
    double beta;
};

inline Reflector make_reflector(cplx& alpha, cplx* x, std::size_t n) {
    double xnorm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) xnorm2 += abs2(x[i]);
    const double ar = alpha.real();
    const double ai = alpha.imag();
    if (xnorm2 == 0.0 && ai == 0.0) return {0.0, ar};
    const double beta = -std::copysign(std::sqrt(ar * ar + ai * ai + xnorm2), ar);
    const cplx tau{(beta - ar) / beta, -ai / beta};
    const cplx scale = 1.0 / (alpha - beta);
    for (std::size_t i = 0; i < n; ++i) x[i] *= scale;
    alpha = beta;
    return {tau, beta};
}

// y <- G^H y on a contiguous vector of length n+1, v = (1, vtail).
inline void apply_left(cplx tau, const cplx* vtail, cplx* y, std::size_t n) {
    cplx s = y[0];
    for (std::size_t i = 0; i < n; ++i) s += std::conj(vtail[i]) * y[i + 1];
    s *= std::conj(tau);
    y[0] -= s;
    for (std::size_t i = 0; i < n; ++i) y[i + 1] -= s * vtail[i];
}

}  // namespace nhflow::linalg::detail
