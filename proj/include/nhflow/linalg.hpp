#pragma once

#include <nhflow/common.hpp>

#include <span>
#include <string>
#include <vector>

namespace nhflow::linalg {

// Dense complex matrix, column-major.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diagonal(std::span<const cplx> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }
    bool empty() const noexcept { return data_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

    cplx* col(std::size_t j) { return data_.data() + j * rows_; }
    const cplx* col(std::size_t j) const { return data_.data() + j * rows_; }
    cplx* data() noexcept { return data_.data(); }
    const cplx* data() const noexcept { return data_.data(); }
    std::span<const cplx> values() const noexcept { return data_; }

    // Keeps the allocation when the size is unchanged.
    void resize(std::size_t rows, std::size_t cols);
    void fill(cplx v);

    double frobenius_norm() const;
    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cplx s);

    bool operator==(const ComplexMatrix& o) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);
std::vector<cplx> operator*(const ComplexMatrix& a, std::span<const cplx> x);

// A − z·I for square A.
ComplexMatrix shifted(const ComplexMatrix& a, cplx z);

double max_abs_difference(const ComplexMatrix& a, const ComplexMatrix& b);

// [[0, X − z],[(X − z)*, 0]], kept implicit.
class HermitizedOperator {
public:
    HermitizedOperator(ComplexMatrix base, cplx z);

    std::size_t dim() const noexcept { return 2 * base_.rows(); }
    const ComplexMatrix& base() const noexcept { return base_; }
    cplx shift() const noexcept { return z_; }

    ComplexMatrix materialize() const;
    void apply(std::span<const cplx> in, std::span<cplx> out) const;

private:
    ComplexMatrix base_;
    cplx z_;
};

HermitizedOperator hermitize(const ComplexMatrix& x, cplx z);

struct LogAbsDet {
    double value = 0.0;  // -inf when singular
    bool singular = false;
};

LogAbsDet lu_logabsdet(const ComplexMatrix& a);
// Factorizes `a` in place; use when the caller owns a scratch copy.
LogAbsDet lu_logabsdet_inplace(ComplexMatrix& a);

struct HermitianEigen {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // columns, empty when not requested
    double residual = 0.0;       // max_i ||H v_i - λ_i v_i|| / ||H||_F
    double orthogonality_error = 0.0;
};

HermitianEigen hermitian_eigensolve(const ComplexMatrix& h, bool want_vectors = true);

// Real symmetric tridiagonal (diagonal d, off-diagonal e, |e| = |d| - 1).
// Eigenvalues ascending.
std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e);

struct EigenOptions {
    bool want_vectors = true;
    bool balance = true;
    bool verify = true;
    std::size_t max_dimension = 1024;
    // Pairs whose condition number sqrt(O_ii) exceeds this are flagged defective.
    double defect_condition = 1e8;
};

struct SpectralDecomposition {
    std::vector<cplx> eigenvalues;
    ComplexMatrix right;  // columns R_i, unit norm
    ComplexMatrix left;   // columns L_i with L_i^T R_j = δ_ij
    std::vector<double> residual_norms;  // ||X R_i - σ_i R_i|| / ||X||_F
    std::vector<double> condition;       // ||L_i|| ||R_i||
    std::vector<bool> defective;
    double biorthogonality_error = 0.0;
    double matrix_norm = 0.0;
    bool has_vectors = false;

    std::size_t size() const noexcept { return eigenvalues.size(); }
};

SpectralDecomposition nonhermitian_eigensolve(const ComplexMatrix& x, const EigenOptions& opts = {});

// Eigenvalues only; the scratch matrix is reused across calls.
struct EigenWorkspace {
    ComplexMatrix h;
    std::vector<cplx> scratch;
};
void eigenvalues(const ComplexMatrix& x, EigenWorkspace& ws, std::vector<cplx>& out);
std::vector<cplx> eigenvalues(const ComplexMatrix& x);

struct SvdWorkspace {
    ComplexMatrix a;
    std::vector<cplx> scratch;
    std::vector<double> d;
    std::vector<double> e;
};
// Singular values of X − z, ascending.
void singular_values(const ComplexMatrix& x, cplx z, SvdWorkspace& ws, std::vector<double>& out);
std::vector<double> singular_values(const ComplexMatrix& x, cplx z);

struct SingularTriplets {
    std::vector<double> values;  // ascending
    ComplexMatrix left;          // u_i columns
    ComplexMatrix right;         // v_i columns, (X - z) v_i = λ_i u_i
    double residual = 0.0;
    double orthogonality_error = 0.0;
};
SingularTriplets singular_triplets(const ComplexMatrix& x, cplx z);

// Tr G^z(iη) for the Hermitization, from the singular values of X − z.
cplx resolvent_trace(std::span<const double> singular_values, double eta);

// Little-endian (re, im) f64 pairs, no header.
void write_spectrum_binary(const std::string& path, std::span<const cplx> values);
std::vector<cplx> read_spectrum_binary(const std::string& path);

}  // namespace nhflow::linalg
