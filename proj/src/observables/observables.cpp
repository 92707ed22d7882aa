#include <nhflow/observables.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace nhflow::observables {

double linear_sum(std::span<const cplx> eigenvalues, const TestFunction& f) {
    double s = 0.0;
    for (const cplx& z : eigenvalues) s += f(z);
    return s;
}

LinearStatistic linear_statistic(const SpectralDecomposition& spec, const TestFunction& f, double time) {
    for (std::size_t i = 0; i < spec.residual_norms.size(); ++i)
        if (!(spec.residual_norms[i] <= 1e-8))
            throw NumericalError("linear_statistic: eigenpair residual above tolerance", static_cast<std::ptrdiff_t>(i));
    return {f.id(), time, linear_sum(spec.eigenvalues, f)};
}

std::vector<linalg::LogAbsDet> logdet_field(const ComplexMatrix& x, std::span<const cplx> points) {
    if (!x.square()) throw std::invalid_argument("logdet_field: matrix must be square");
    std::vector<linalg::LogAbsDet> out;
    out.reserve(points.size());
    ComplexMatrix work;
    for (const cplx& z : points) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument("logdet_field: points must be finite");
        work = x;
        for (std::size_t i = 0; i < x.rows(); ++i) work(i, i) -= z;
        out.push_back(linalg::lu_logabsdet_inplace(work));
    }
    return out;
}

OverlapResult diagonal_overlaps(const SpectralDecomposition& spec) {
    if (!spec.has_vectors) throw std::invalid_argument("diagonal_overlaps: decomposition has no eigenvectors");
    if (spec.biorthogonality_error > 1e-6)
        throw NumericalError("diagonal_overlaps: left/right eigenvectors are not biorthogonal");
    OverlapResult res;
    const std::size_t n = spec.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (spec.defective[i]) {
            ++res.excluded;
            continue;
        }
        double r2 = 0.0, l2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            r2 += abs2(spec.right(k, i));
            l2 += abs2(spec.left(k, i));
        }
        const double o = r2 * l2;
        if (o < 1.0 - 1e-8)
            throw NumericalError("diagonal_overlaps: overlap below 1 (normalization broken)", static_cast<std::ptrdiff_t>(i));
        res.records.push_back({i, spec.eigenvalues[i], o});
    }
    return res;
}

GirkoSplit girko_decompose(const ComplexMatrix& x, const TestFunction& f, double eta0, double eta_c, double T,
                           std::span<const kernels::Node> nodes) {
    if (!(eta0 > 0.0 && eta0 < eta_c && eta_c < T && std::isfinite(T)))
        throw std::invalid_argument("girko_decompose: need 0 < eta0 < eta_c < T < inf");
    GirkoSplit out;
    out.eta0 = eta0;
    out.eta_c = eta_c;
    out.T = T;
    linalg::SvdWorkspace ws;
    std::vector<double> sv;
    const double e0 = eta0 * eta0, ec = eta_c * eta_c, tt = T * T;
    double j = 0.0, is = 0.0, im = 0.0, ims = 0.0;
    for (const auto& nd : nodes) {
        const double lap = f.laplacian(nd.z);
        if (lap == 0.0) continue;
        linalg::singular_values(x, nd.z, ws, sv);
        if (sv.front() == 0.0) {
            ++out.singular_points;
            continue;
        }
        // F(η) differences, accumulated as log1p where the ratio is small
        double fT = 0.0, small = 0.0, micro = 0.0, meso = 0.0;
        for (double l : sv) {
            const double l2 = l * l;
            fT += std::log(l2 + tt);
            small += std::log1p(e0 / l2);
            micro += std::log((l2 + ec) / (l2 + e0));
            meso += std::log((l2 + tt) / (l2 + ec));
        }
        const double w = nd.w * lap;
        j += w * fT;
        is += w * small;
        im += w * micro;
        ims += w * meso;
    }
    const double c = 1.0 / (4.0 * pi);
    out.J_T = c * j;
    out.I_small = -c * is;
    out.I_micro = -c * im;
    out.I_meso = -c * ims;
    if (!std::isfinite(out.total())) throw NumericalError("girko_decompose: quadrature produced a non-finite value");
    return out;
}

GirkoSplit girko_decompose(const ComplexMatrix& x, const TestFunction& f, double eta0, double eta_c, double T,
                           const kernels::QuadratureGrid& grid) {
    const auto nodes = kernels::support_nodes(f, false, grid);
    return girko_decompose(x, f, eta0, eta_c, T, nodes);
}

TestFunction rescale_function(const TestFunction& f, cplx v, double a, std::size_t N) {
    if (!(a >= 0.0 && a < 0.5)) throw std::invalid_argument("rescale_function: need 0 <= a < 1/2");
    return f.rescaled(v, std::pow(static_cast<double>(N), a));
}

void write_csv_header(std::ostream& os) { os << "replica,time,function_id,value\n"; }

void write_csv_row(std::ostream& os, const ObservableRow& row) {
    std::ostringstream line;
    line << std::setprecision(17) << row.replica << ',' << row.time << ',' << row.function_id << ',' << row.value
         << '\n';
    os << line.str();
}

}  // namespace nhflow::observables
