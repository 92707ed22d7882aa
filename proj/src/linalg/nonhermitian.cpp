#include <nhflow/linalg.hpp>

#include "householder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nhflow::linalg {
namespace {

constexpr double ulp = std::numeric_limits<double>::epsilon();
constexpr double safe_min = std::numeric_limits<double>::min();
constexpr double deflation_tol = 1e-14;

inline double abs1(cplx z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Diagonal similarity by powers of two so row and column norms are comparable.
// Returns the scaling D with A <- D^{-1} A D.
std::vector<double> balance(ComplexMatrix& a) {
    const std::size_t n = a.rows();
    std::vector<double> scale(n, 1.0);
    constexpr double radix = 2.0;
    bool converged = false;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        converged = true;
        for (std::size_t i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                c += abs2(a(j, i));
                r += abs2(a(i, j));
            }
            c = std::sqrt(c);
            r = std::sqrt(r);
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix, f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= radix;
                r /= radix;
                g = r / radix;
            }
            g = r * radix;
            while (c >= g) {
                f /= radix;
                c /= radix;
                r *= radix;
                g = r * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                converged = false;
                scale[i] *= f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) /= f;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
    return scale;
}

// Householder reduction to upper Hessenberg form, A <- Q^H A Q. When q is
// non-null it receives Q.
void hessenberg(ComplexMatrix& a, ComplexMatrix* q, std::vector<cplx>& w) {
    const std::size_t n = a.rows();
    w.resize(n);
    std::vector<cplx> v(n);
    if (q) *q = ComplexMatrix::identity(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t m = n - k - 1;
        cplx* colk = a.col(k) + k + 1;
        const auto r = detail::make_reflector(colk[0], colk + 1, m - 1);
        v[0] = 1.0;
        for (std::size_t i = 1; i < m; ++i) {
            v[i] = colk[i];
            colk[i] = 0.0;
        }
        if (r.tau == cplx{}) continue;
        // left: rows k+1.., columns k+1..
        for (std::size_t j = k + 1; j < n; ++j) detail::apply_left(r.tau, v.data() + 1, a.col(j) + k + 1, m - 1);
        // right: all rows, columns k+1..
        std::fill(w.begin(), w.end(), cplx{});
        for (std::size_t j = 0; j < m; ++j) {
            const cplx* aj = a.col(k + 1 + j);
            const cplx vj = v[j];
            for (std::size_t i = 0; i < n; ++i) w[i] += aj[i] * vj;
        }
        for (std::size_t j = 0; j < m; ++j) {
            cplx* aj = a.col(k + 1 + j);
            const cplx c = r.tau * std::conj(v[j]);
            for (std::size_t i = 0; i < n; ++i) aj[i] -= w[i] * c;
        }
        if (q) {
            std::fill(w.begin(), w.end(), cplx{});
            for (std::size_t j = 0; j < m; ++j) {
                const cplx* qj = q->col(k + 1 + j);
                for (std::size_t i = 0; i < n; ++i) w[i] += qj[i] * v[j];
            }
            for (std::size_t j = 0; j < m; ++j) {
                cplx* qj = q->col(k + 1 + j);
                const cplx c = r.tau * std::conj(v[j]);
                for (std::size_t i = 0; i < n; ++i) qj[i] -= w[i] * c;
            }
        }
    }
}

// Single-shift complex QR on an upper Hessenberg matrix. With want_t the full
// triangular Schur factor is formed and z (if non-null) accumulates the
// transformations; otherwise only the active window is updated.
void schur_qr(ComplexMatrix& h, ComplexMatrix* z, bool want_t, std::vector<cplx>& w) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(h.rows());
    w.assign(n, cplx{});
    if (n == 0) return;
    const std::ptrdiff_t sweep_cap = 40 * n;
    std::ptrdiff_t sweeps = 0;

    std::ptrdiff_t i = n - 1;
    while (i >= 0) {
        std::ptrdiff_t l = 0;
        for (int its = 0;; ++its) {
            std::ptrdiff_t k;
            for (k = i; k > 0; --k) {
                const double sub = abs1(h(k, k - 1));
                if (sub <= safe_min) break;
                double tst = abs1(h(k - 1, k - 1)) + abs1(h(k, k));
                if (tst == 0.0) {
                    if (k - 2 >= 0) tst += std::abs(h(k - 1, k - 2).real());
                    if (k + 1 < n) tst += std::abs(h(k + 1, k).real());
                }
                if (sub <= deflation_tol * tst) break;
            }
            l = k;
            if (l > 0) h(l, l - 1) = 0.0;
            if (l >= i) break;
            if (++sweeps > sweep_cap) throw NumericalError("Schur QR iteration cap exceeded", i);

            const std::ptrdiff_t i1 = want_t ? 0 : l;
            const std::ptrdiff_t i2 = want_t ? n - 1 : i;

            cplx t;
            if (its == 10) {
                t = 0.75 * std::abs(h(l + 1, l).real()) + h(l, l);
            } else if (its == 20) {
                t = 0.75 * std::abs(h(i, i - 1).real()) + h(i, i);
            } else {
                // Wilkinson shift: eigenvalue of the trailing 2x2 closer to h(i,i)
                t = h(i, i);
                const cplx u = std::sqrt(h(i - 1, i)) * std::sqrt(h(i, i - 1));
                double s = abs1(u);
                if (s != 0.0) {
                    const cplx x = 0.5 * (h(i - 1, i - 1) - t);
                    const double sx = abs1(x);
                    s = std::max(s, sx);
                    cplx y = s * std::sqrt((x / s) * (x / s) + (u / s) * (u / s));
                    if (sx > 0.0) {
                        const cplx xs = x / sx;
                        if (xs.real() * y.real() + xs.imag() * y.imag() < 0.0) y = -y;
                    }
                    t -= u * (u / (x + y));
                }
            }

            for (std::ptrdiff_t k2 = l; k2 < i; ++k2) {
                cplx v0, v1;
                if (k2 == l) {
                    v0 = h(l, l) - t;
                    v1 = h(l + 1, l);
                } else {
                    v0 = h(k2, k2 - 1);
                    v1 = h(k2 + 1, k2 - 1);
                }
                const auto r = detail::make_reflector(v0, &v1, 1);
                if (k2 > l) {
                    h(k2, k2 - 1) = r.beta;
                    h(k2 + 1, k2 - 1) = 0.0;
                }
                const cplx tau = r.tau;
                const cplx v2 = v1;
                const cplx ctau = std::conj(tau);
                const cplx cv2 = std::conj(v2);
                for (std::ptrdiff_t j = k2; j <= i2; ++j) {
                    cplx* hj = h.col(j);
                    const cplx sum = ctau * (hj[k2] + cv2 * hj[k2 + 1]);
                    hj[k2] -= sum;
                    hj[k2 + 1] -= sum * v2;
                }
                cplx* hk = h.col(k2);
                cplx* hk1 = h.col(k2 + 1);
                const std::ptrdiff_t jmax = std::min(k2 + 2, i);
                for (std::ptrdiff_t j = i1; j <= jmax; ++j) {
                    const cplx sum = tau * (hk[j] + v2 * hk1[j]);
                    hk[j] -= sum;
                    hk1[j] -= sum * cv2;
                }
                if (z) {
                    cplx* zk = z->col(k2);
                    cplx* zk1 = z->col(k2 + 1);
                    for (std::ptrdiff_t j = 0; j < n; ++j) {
                        const cplx sum = tau * (zk[j] + v2 * zk1[j]);
                        zk[j] -= sum;
                        zk1[j] -= sum * cv2;
                    }
                }
            }
        }
        w[i] = h(i, i);
        i = l - 1;
        // one eigenvalue deflated at index l == i; blocks of size one only
    }
}

}  // namespace

void eigenvalues(const ComplexMatrix& x, EigenWorkspace& ws, std::vector<cplx>& out) {
    if (!x.square()) throw std::invalid_argument("eigenvalues: matrix must be square");
    ws.h = x;
    balance(ws.h);
    hessenberg(ws.h, nullptr, ws.scratch);
    schur_qr(ws.h, nullptr, false, out);
}

std::vector<cplx> eigenvalues(const ComplexMatrix& x) {
    EigenWorkspace ws;
    std::vector<cplx> out;
    eigenvalues(x, ws, out);
    return out;
}

SpectralDecomposition nonhermitian_eigensolve(const ComplexMatrix& x, const EigenOptions& opts) {
    if (!x.square()) throw std::invalid_argument("nonhermitian_eigensolve: matrix must be square");
    const std::size_t n = x.rows();
    if (n > opts.max_dimension) throw std::invalid_argument("nonhermitian_eigensolve: dimension above configured cap");

    SpectralDecomposition out;
    out.matrix_norm = x.frobenius_norm();
    if (n == 0) return out;

    ComplexMatrix t = x;
    std::vector<double> scale = opts.balance ? balance(t) : std::vector<double>(n, 1.0);
    std::vector<cplx> scratch;
    if (!opts.want_vectors) {
        hessenberg(t, nullptr, scratch);
        schur_qr(t, nullptr, false, out.eigenvalues);
        return out;
    }

    ComplexMatrix q;
    hessenberg(t, &q, scratch);
    schur_qr(t, &q, true, out.eigenvalues);

    // Eigenvectors of the triangular factor: right by back substitution,
    // left (y^H T = λ y^H) by forward substitution.
    double tnorm = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) tnorm = std::max(tnorm, abs1(t(i, j)));
    const double smlnum = safe_min * (static_cast<double>(n) / ulp);

    ComplexMatrix yr(n, n), yl(n, n);
    std::vector<cplx> b(n);
    for (std::size_t k = 0; k < n; ++k) {
        const cplx lam = t(k, k);
        const double smin = std::max(ulp * abs1(lam), std::max(ulp * tnorm * 1e-3, smlnum));
        cplx* xr = yr.col(k);
        xr[k] = 1.0;
        for (std::size_t i = 0; i < k; ++i) b[i] = -t(i, k);
        for (std::size_t jj = k; jj-- > 0;) {
            cplx den = t(jj, jj) - lam;
            if (abs1(den) < smin) den = smin;
            const cplx xj = b[jj] / den;
            xr[jj] = xj;
            const cplx* tj = t.col(jj);
            for (std::size_t i = 0; i < jj; ++i) b[i] -= tj[i] * xj;
        }
        cplx* xl = yl.col(k);
        xl[k] = 1.0;
        const cplx clam = std::conj(lam);
        for (std::size_t jj = k + 1; jj < n; ++jj) {
            const cplx* tj = t.col(jj);
            cplx s = 0.0;
            for (std::size_t i = k; i < jj; ++i) s += std::conj(tj[i]) * xl[i];
            cplx den = std::conj(tj[jj]) - clam;
            if (abs1(den) < smin) den = smin;
            xl[jj] = -s / den;
        }
    }

    // Back-transform with Q (triangular structure of yr/yl exploited) and undo balancing.
    out.right = ComplexMatrix(n, n);
    out.left = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx* r = out.right.col(k);
        const cplx* yk = yr.col(k);
        for (std::size_t j = 0; j <= k; ++j) {
            const cplx c = yk[j];
            const cplx* qj = q.col(j);
            for (std::size_t i = 0; i < n; ++i) r[i] += qj[i] * c;
        }
        cplx* l = out.left.col(k);
        const cplx* ylk = yl.col(k);
        for (std::size_t j = k; j < n; ++j) {
            const cplx c = ylk[j];
            const cplx* qj = q.col(j);
            for (std::size_t i = 0; i < n; ++i) l[i] += qj[i] * c;
        }
        for (std::size_t i = 0; i < n; ++i) {
            r[i] *= scale[i];
            l[i] /= scale[i];
        }
        // r unit norm; l is the conjugate-sense left vector, turn it into the
        // transpose-sense L with L^T R = 1.
        double rn = 0.0;
        for (std::size_t i = 0; i < n; ++i) rn += abs2(r[i]);
        rn = std::sqrt(rn);
        for (std::size_t i = 0; i < n; ++i) r[i] /= rn;
        cplx d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += std::conj(l[i]) * r[i];
        for (std::size_t i = 0; i < n; ++i) l[i] = std::conj(l[i]) / d;
    }
    out.has_vectors = true;

    out.condition.resize(n);
    out.defective.assign(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        double ln = 0.0;
        const cplx* l = out.left.col(k);
        for (std::size_t i = 0; i < n; ++i) ln += abs2(l[i]);
        out.condition[k] = std::sqrt(ln);
        if (!(out.condition[k] < opts.defect_condition)) out.defective[k] = true;
    }

    if (opts.verify) {
        const ComplexMatrix xr = x * out.right;
        out.residual_norms.resize(n);
        const double xn = out.matrix_norm > 0.0 ? out.matrix_norm : 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += abs2(xr(i, k) - out.eigenvalues[k] * out.right(i, k));
            out.residual_norms[k] = std::sqrt(s) / xn;
            if (out.residual_norms[k] > 1e-8) out.defective[k] = true;
        }
        const ComplexMatrix lr = out.left.transpose() * out.right;
        out.biorthogonality_error = max_abs_difference(lr, ComplexMatrix::identity(n));
    }
    return out;
}

}  // namespace nhflow::linalg
