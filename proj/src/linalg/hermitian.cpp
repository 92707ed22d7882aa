#include <nhflow/linalg.hpp>

#include "householder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nhflow::linalg {
namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

// Implicit-shift QL on a symmetric tridiagonal (d, e) with e[i] coupling
// i and i+1. Rotations are accumulated into the columns of z (n x n,
// column-major) when z is non-null.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, double* z) {
    const int n = static_cast<int>(d.size());
    if (n == 0) return;
    e.resize(n);
    e[n - 1] = 0.0;
    double anorm = 0.0;
    for (int i = 0; i < n; ++i) anorm = std::max(anorm, std::abs(d[i]) + std::abs(e[i]) + (i ? std::abs(e[i - 1]) : 0.0));
    const double floor = eps * anorm * 1e-2;
    const int max_iter = 60;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd || std::abs(e[m]) <= floor) break;
            }
            if (m != l) {
                if (iter++ == max_iter) throw NumericalError("tridiagonal QL did not converge", l);
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    e[i + 1] = (r = std::hypot(f, g));
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if (z) {
                        double* zi = z + static_cast<std::size_t>(i) * n;
                        double* zi1 = zi + n;
                        for (int k = 0; k < n; ++k) {
                            f = zi1[k];
                            zi1[k] = s * zi[k] + c * f;
                            zi[k] = c * zi[k] - s * f;
                        }
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e) {
    if (!d.empty() && e.size() + 1 != d.size()) throw std::invalid_argument("tridiagonal_eigenvalues: size mismatch");
    tridiagonal_ql(d, e, nullptr);
    std::sort(d.begin(), d.end());
    return d;
}

HermitianEigen hermitian_eigensolve(const ComplexMatrix& h, bool want_vectors) {
    if (!h.square()) throw std::invalid_argument("hermitian_eigensolve: matrix must be square");
    const std::size_t n = h.rows();
    const double hnorm = h.frobenius_norm();
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i)
            if (std::abs(h(i, j) - std::conj(h(j, i))) > 1e-12 * std::max(1.0, hnorm))
                throw std::invalid_argument("hermitian_eigensolve: matrix is not Hermitian");

    HermitianEigen out;
    if (n == 0) return out;

    ComplexMatrix a = h;
    ComplexMatrix q = want_vectors ? ComplexMatrix::identity(n) : ComplexMatrix{};
    std::vector<double> d(n), e(n > 1 ? n - 1 : 0);
    std::vector<cplx> v(n), w(n);

    for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t m = n - k - 1;
        cplx* colk = a.col(k) + k + 1;
        const auto r = detail::make_reflector(colk[0], colk + 1, m - 1);
        e[k] = r.beta;
        v[0] = 1.0;
        for (std::size_t i = 1; i < m; ++i) v[i] = colk[i];
        for (std::size_t i = 1; i < m; ++i) colk[i] = 0.0;
        if (r.tau == cplx{}) continue;

        // w = tau A22 v, then w -= (tau/2)(w^H v) v, then A22 -= v w^H + w v^H
        for (std::size_t i = 0; i < m; ++i) w[i] = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const cplx* aj = a.col(k + 1 + j) + k + 1;
            const cplx vj = v[j];
            for (std::size_t i = 0; i < m; ++i) w[i] += aj[i] * vj;
        }
        cplx wv = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            w[i] *= r.tau;
            wv += std::conj(w[i]) * v[i];
        }
        const cplx alpha = -0.5 * r.tau * wv;
        for (std::size_t i = 0; i < m; ++i) w[i] += alpha * v[i];
        for (std::size_t j = 0; j < m; ++j) {
            cplx* aj = a.col(k + 1 + j) + k + 1;
            const cplx wj = std::conj(w[j]);
            const cplx vj = std::conj(v[j]);
            for (std::size_t i = 0; i < m; ++i) aj[i] -= v[i] * wj + w[i] * vj;
        }
        if (want_vectors) {
            // Q[:, k+1:] -= tau (Q[:, k+1:] v) v^H
            std::vector<cplx> qv(n);
            for (std::size_t j = 0; j < m; ++j) {
                const cplx* qj = q.col(k + 1 + j);
                for (std::size_t i = 0; i < n; ++i) qv[i] += qj[i] * v[j];
            }
            for (std::size_t j = 0; j < m; ++j) {
                cplx* qj = q.col(k + 1 + j);
                const cplx c = r.tau * std::conj(v[j]);
                for (std::size_t i = 0; i < n; ++i) qj[i] -= qv[i] * c;
            }
        }
    }
    for (std::size_t k = 0; k < n; ++k) d[k] = a(k, k).real();

    std::vector<double> zr;
    if (want_vectors) {
        zr.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) zr[i * n + i] = 1.0;
    }
    tridiagonal_ql(d, e, want_vectors ? zr.data() : nullptr);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = d[order[i]];

    if (want_vectors) {
        out.vectors = ComplexMatrix(n, n);
        for (std::size_t jj = 0; jj < n; ++jj) {
            const double* zj = zr.data() + order[jj] * n;
            cplx* vj = out.vectors.col(jj);
            for (std::size_t k = 0; k < n; ++k) {
                const double c = zj[k];
                if (c == 0.0) continue;
                const cplx* qk = q.col(k);
                for (std::size_t i = 0; i < n; ++i) vj[i] += qk[i] * c;
            }
        }
        const ComplexMatrix hv = h * out.vectors;
        double res = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += abs2(hv(i, j) - out.values[j] * out.vectors(i, j));
            res = std::max(res, std::sqrt(s));
        }
        out.residual = hnorm > 0.0 ? res / hnorm : res;
        const ComplexMatrix gram = out.vectors.adjoint() * out.vectors;
        out.orthogonality_error = max_abs_difference(gram, ComplexMatrix::identity(n));
    }
    return out;
}

}  // namespace nhflow::linalg
