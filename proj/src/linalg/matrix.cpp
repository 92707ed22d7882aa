#include <nhflow/linalg.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace nhflow::linalg {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const cplx> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

void ComplexMatrix::resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.resize(rows * cols);
}

void ComplexMatrix::fill(cplx v) { std::fill(data_.begin(), data_.end(), v); }

double ComplexMatrix::frobenius_norm() const {
    double s = 0.0;
    for (const auto& v : data_) s += abs2(v);
    return std::sqrt(s);
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
        for (std::size_t i = 0; i < rows_; ++i) r(j, i) = std::conj((*this)(i, j));
    return r;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
        for (std::size_t i = 0; i < rows_; ++i) r(j, i) = (*this)(i, j);
    return r;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("matrix size mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("matrix size mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix product size mismatch");
    ComplexMatrix c(a.rows(), b.cols());
    const std::size_t m = a.rows();
    for (std::size_t j = 0; j < b.cols(); ++j) {
        cplx* cj = c.col(j);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx bkj = b(k, j);
            const cplx* ak = a.col(k);
            for (std::size_t i = 0; i < m; ++i) cj[i] += ak[i] * bkj;
        }
    }
    return c;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

std::vector<cplx> operator*(const ComplexMatrix& a, std::span<const cplx> x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matrix-vector size mismatch");
    std::vector<cplx> y(a.rows());
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const cplx* ak = a.col(k);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += ak[i] * x[k];
    }
    return y;
}

ComplexMatrix shifted(const ComplexMatrix& a, cplx z) {
    if (!a.square()) throw std::invalid_argument("shifted: matrix must be square");
    ComplexMatrix r = a;
    for (std::size_t i = 0; i < a.rows(); ++i) r(i, i) -= z;
    return r;
}

double max_abs_difference(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("matrix size mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

HermitizedOperator::HermitizedOperator(ComplexMatrix base, cplx z) : base_(std::move(base)), z_(z) {
    if (!base_.square()) throw std::invalid_argument("hermitize: matrix must be square");
}

ComplexMatrix HermitizedOperator::materialize() const {
    const std::size_t n = base_.rows();
    ComplexMatrix h(2 * n, 2 * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) {
            const cplx a = base_(i, j) - (i == j ? z_ : cplx{});
            h(i, n + j) = a;
            h(n + j, i) = std::conj(a);
        }
    return h;
}

void HermitizedOperator::apply(std::span<const cplx> in, std::span<cplx> out) const {
    const std::size_t n = base_.rows();
    if (in.size() != 2 * n || out.size() != 2 * n) throw std::invalid_argument("hermitized apply: size mismatch");
    // top = (X - z) in_bottom, bottom = (X - z)* in_top
    for (std::size_t i = 0; i < 2 * n; ++i) out[i] = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const cplx* xj = base_.col(j);
        const cplx b = in[n + j];
        cplx acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += xj[i] * b;
            acc += std::conj(xj[i]) * in[i];
        }
        out[n + j] = acc - std::conj(z_) * in[j];
        out[j] -= z_ * b;
    }
}

HermitizedOperator hermitize(const ComplexMatrix& x, cplx z) { return HermitizedOperator(x, z); }

LogAbsDet lu_logabsdet_inplace(ComplexMatrix& a) {
    if (!a.square()) throw std::invalid_argument("lu_logabsdet: matrix must be square");
    const std::size_t n = a.rows();
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(a(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best == 0.0) return {-INFINITY, true};
        if (p != k)
            for (std::size_t j = k; j < n; ++j) std::swap(a(k, j), a(p, j));
        const cplx pivot = a(k, k);
        acc += std::log(best);
        const cplx inv = 1.0 / pivot;
        cplx* ck = a.col(k);
        for (std::size_t i = k + 1; i < n; ++i) ck[i] *= inv;
        for (std::size_t j = k + 1; j < n; ++j) {
            cplx* cj = a.col(j);
            const cplx akj = cj[k];
            if (akj == cplx{}) continue;
            for (std::size_t i = k + 1; i < n; ++i) cj[i] -= ck[i] * akj;
        }
    }
    return {acc, false};
}

LogAbsDet lu_logabsdet(const ComplexMatrix& a) {
    ComplexMatrix w = a;
    return lu_logabsdet_inplace(w);
}

cplx resolvent_trace(std::span<const double> sv, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("resolvent_trace: eta must be positive");
    double s = 0.0;
    for (double l : sv) s += 2.0 * eta / (l * l + eta * eta);
    return {0.0, s};
}

void write_spectrum_binary(const std::string& path, std::span<const cplx> values) {
    static_assert(std::endian::native == std::endian::little, "spectrum dump assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const auto& v : values) {
        const double pair[2] = {v.real(), v.imag()};
        out.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
}

std::vector<cplx> read_spectrum_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<cplx> out;
    double pair[2];
    while (in.read(reinterpret_cast<char*>(pair), sizeof pair)) out.emplace_back(pair[0], pair[1]);
    return out;
}

}  // namespace nhflow::linalg
