#include <nhflow/linalg.hpp>

#include "householder.hpp"

#include <algorithm>
#include <cmath>

namespace nhflow::linalg {

// Golub-Kahan bidiagonalization of X - z, then the eigenvalues of the
// Hermitization in its permuted tridiagonal form
//   [0 d0 . . .; d0 0 e0 . .; . e0 0 d1 .; ...]
// whose spectrum is ±(singular values). No A*A is ever formed, so small
// singular values keep absolute accuracy ~ eps ||X - z||.
void singular_values(const ComplexMatrix& x, cplx z, SvdWorkspace& ws, std::vector<double>& out) {
    if (!x.square()) throw std::invalid_argument("singular_values: matrix must be square");
    const std::size_t n = x.rows();
    out.clear();
    if (n == 0) return;

    ComplexMatrix& a = ws.a;
    a = x;
    for (std::size_t i = 0; i < n; ++i) a(i, i) -= z;
    ws.scratch.resize(n);
    std::vector<cplx>& w = ws.scratch;
    std::vector<cplx> v(n);
    ws.d.assign(n, 0.0);
    ws.e.assign(n > 1 ? n - 1 : 0, 0.0);

    for (std::size_t k = 0; k < n; ++k) {
        // left reflector on column k, rows k..n-1
        {
            const std::size_t m = n - k;
            cplx* ck = a.col(k) + k;
            const auto r = detail::make_reflector(ck[0], ck + 1, m - 1);
            ws.d[k] = r.beta;
            if (r.tau != cplx{})
                for (std::size_t j = k + 1; j < n; ++j) detail::apply_left(r.tau, ck + 1, a.col(j) + k, m - 1);
        }
        if (k + 1 >= n) break;
        // right reflector on row k, columns k+1..n-1: built from the conjugated row
        {
            const std::size_t m = n - k - 1;
            for (std::size_t j = 0; j < m; ++j) v[j] = std::conj(a(k, k + 1 + j));
            const auto r = detail::make_reflector(v[0], v.data() + 1, m - 1);
            ws.e[k] = r.beta;
            if (r.tau == cplx{}) continue;
            v[0] = 1.0;
            const std::size_t rows = n - k - 1;
            std::fill(w.begin(), w.begin() + rows, cplx{});
            for (std::size_t j = 0; j < m; ++j) {
                const cplx* aj = a.col(k + 1 + j) + k + 1;
                const cplx vj = v[j];
                for (std::size_t i = 0; i < rows; ++i) w[i] += aj[i] * vj;
            }
            for (std::size_t j = 0; j < m; ++j) {
                cplx* aj = a.col(k + 1 + j) + k + 1;
                const cplx c = r.tau * std::conj(v[j]);
                for (std::size_t i = 0; i < rows; ++i) aj[i] -= w[i] * c;
            }
        }
    }

    std::vector<double> td(2 * n, 0.0), te(2 * n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        te[2 * k] = ws.d[k];
        if (k + 1 < n) te[2 * k + 1] = ws.e[k];
    }
    auto ev = tridiagonal_eigenvalues(std::move(td), std::move(te));
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(ev[n + i]);
    std::sort(out.begin(), out.end());
}

std::vector<double> singular_values(const ComplexMatrix& x, cplx z) {
    SvdWorkspace ws;
    std::vector<double> out;
    singular_values(x, z, ws, out);
    return out;
}

SingularTriplets singular_triplets(const ComplexMatrix& x, cplx z) {
    const auto herm = hermitize(x, z);
    const auto eig = hermitian_eigensolve(herm.materialize(), true);
    const std::size_t n = x.rows();
    SingularTriplets out;
    out.values.resize(n);
    out.left = ComplexMatrix(n, n);
    out.right = ComplexMatrix(n, n);
    const double s2 = std::sqrt(2.0);
    // Eigenvalues ascending: the upper half carries +λ_i with vector (u; v)/√2.
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t col = n + i;
        out.values[i] = std::max(0.0, eig.values[col]);
        double nu = 0.0, nv = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            nu += abs2(eig.vectors(r, col));
            nv += abs2(eig.vectors(n + r, col));
        }
        // For λ ~ 0 the ± pair can mix; rescale each half to unit norm.
        const double su = nu > 0.0 ? 1.0 / std::sqrt(nu) : s2;
        const double sv = nv > 0.0 ? 1.0 / std::sqrt(nv) : s2;
        for (std::size_t r = 0; r < n; ++r) {
            out.left(r, i) = eig.vectors(r, col) * su;
            out.right(r, i) = eig.vectors(n + r, col) * sv;
        }
    }
    const ComplexMatrix a = shifted(x, z);
    const ComplexMatrix av = a * out.right;
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += abs2(av(r, i) - out.values[i] * out.left(r, i));
        res = std::max(res, std::sqrt(s));
    }
    const double an = a.frobenius_norm();
    out.residual = an > 0.0 ? res / an : res;
    out.orthogonality_error = std::max(max_abs_difference(out.left.adjoint() * out.left, ComplexMatrix::identity(n)),
                                       max_abs_difference(out.right.adjoint() * out.right, ComplexMatrix::identity(n)));
    return out;
}

}  // namespace nhflow::linalg
