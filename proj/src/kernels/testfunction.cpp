#include <nhflow/kernels.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>

namespace nhflow::kernels {
namespace {

constexpr int max_degree = 16;

std::vector<Monomial> merge(const std::vector<Monomial>& in) {
    std::map<std::pair<int, int>, cplx> acc;
    for (const auto& t : in) acc[{t.k, t.l}] += t.c;
    std::vector<Monomial> out;
    for (const auto& [kl, c] : acc)
        if (c != cplx{}) out.push_back({kl.first, kl.second, c});
    return out;
}

// ∂_ζ [ζ^k ζ̄^l e^{-ζζ̄/2s²}] = (k ζ^{k-1} ζ̄^l - ζ^k ζ̄^{l+1}/2s²) e^{...}
std::vector<Monomial> d_zeta(const std::vector<Monomial>& p, double s) {
    const double h = 0.5 / (s * s);
    std::vector<Monomial> out;
    for (const auto& t : p) {
        if (t.k > 0) out.push_back({t.k - 1, t.l, t.c * static_cast<double>(t.k)});
        out.push_back({t.k, t.l + 1, -t.c * h});
    }
    return merge(out);
}

std::vector<Monomial> d_zetabar(const std::vector<Monomial>& p, double s) {
    const double h = 0.5 / (s * s);
    std::vector<Monomial> out;
    for (const auto& t : p) {
        if (t.l > 0) out.push_back({t.k, t.l - 1, t.c * static_cast<double>(t.l)});
        out.push_back({t.k + 1, t.l, -t.c * h});
    }
    return merge(out);
}

}  // namespace

TestFunction::TestFunction(std::string id, cplx center, double width, std::vector<Monomial> terms)
    : id_(std::move(id)), center_(center), width_(width) {
    if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("test function width must be positive");
    terms_ = merge(terms);
    if (terms_.empty()) throw std::invalid_argument("test function needs at least one term");
    double cmax = 0.0;
    for (const auto& t : terms_) {
        if (t.k < 0 || t.l < 0) throw std::invalid_argument("negative monomial power");
        degree_ = std::max(degree_, t.k + t.l);
        cmax = std::max(cmax, std::abs(t.c));
    }
    if (degree_ > max_degree - 4) throw std::invalid_argument("test function degree too large");
    for (const auto& t : terms_) {
        cplx partner{};
        for (const auto& u : terms_)
            if (u.k == t.l && u.l == t.k) partner = u.c;
        if (std::abs(partner - std::conj(t.c)) > 1e-12 * cmax)
            throw std::invalid_argument("test function '" + id_ + "' is not real: coefficients must satisfy c_lk = conj(c_kl)");
    }
    dz_terms_ = d_zeta(terms_, width_);
    lap_terms_ = d_zeta(d_zetabar(terms_, width_), width_);
    for (auto& t : lap_terms_) t.c *= 4.0;
}

TestFunction TestFunction::gaussian(std::string id, cplx center, double width, double amplitude) {
    return TestFunction(std::move(id), center, width, {{0, 0, amplitude}});
}

TestFunction TestFunction::angular_mode(std::string id, double width, int k, cplx c) {
    if (k < 0) throw std::invalid_argument("angular mode index must be nonnegative");
    if (k == 0) return TestFunction(std::move(id), 0.0, width, {{0, 0, c.real()}});
    return TestFunction(std::move(id), 0.0, width, {{k, 0, 0.5 * c}, {0, k, 0.5 * std::conj(c)}});
}

cplx TestFunction::eval_poly(const std::vector<Monomial>& p, cplx zeta) {
    std::array<cplx, max_degree + 1> zp, zbp;
    zp[0] = zbp[0] = 1.0;
    const cplx zb = std::conj(zeta);
    for (int i = 1; i <= max_degree; ++i) {
        zp[i] = zp[i - 1] * zeta;
        zbp[i] = zbp[i - 1] * zb;
    }
    cplx s = 0.0;
    for (const auto& t : p) s += t.c * zp[t.k] * zbp[t.l];
    return s;
}

double TestFunction::window(cplx zeta) const { return std::exp(-abs2(zeta) / (2.0 * width_ * width_)); }

double TestFunction::operator()(cplx z) const {
    const cplx zeta = z - center_;
    return eval_poly(terms_, zeta).real() * window(zeta);
}

cplx TestFunction::dz(cplx z) const {
    const cplx zeta = z - center_;
    return eval_poly(dz_terms_, zeta) * window(zeta);
}

cplx TestFunction::dzbar(cplx z) const { return std::conj(dz(z)); }

double TestFunction::laplacian(cplx z) const {
    const cplx zeta = z - center_;
    return eval_poly(lap_terms_, zeta).real() * window(zeta);
}

double TestFunction::support_radius() const noexcept { return width_ * (8.6 + degree_); }

TestFunction TestFunction::rescaled(cplx v, double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("rescaling factor must be positive");
    std::vector<Monomial> t = terms_;
    for (auto& m : t) m.c *= std::pow(lambda, m.k + m.l);
    return TestFunction(id_, v + center_ / lambda, width_ / lambda, std::move(t));
}

BoundarySeries boundary_series(const TestFunction& f, int kmax) {
    if (kmax < 1) throw std::invalid_argument("boundary_series: kmax must be positive");
    const int n = std::max(512, 8 * kmax);
    std::vector<double> vals(n);
    for (int j = 0; j < n; ++j) vals[j] = f(std::polar(1.0, 2.0 * pi * j / n));
    BoundarySeries bs;
    bs.kmax = kmax;
    bs.coeff.resize(2 * kmax + 1);
    for (int k = -kmax; k <= kmax; ++k) {
        cplx s = 0.0;
        for (int j = 0; j < n; ++j) s += vals[j] * std::polar(1.0, -2.0 * pi * k * j / n);
        bs.coeff[k + kmax] = s / static_cast<double>(n);
    }
    for (int k = std::max(1, kmax - 3); k <= kmax; ++k)
        bs.tail = std::max({bs.tail, std::abs(bs.at(k)), std::abs(bs.at(-k))});
    return bs;
}

double h_half_pairing(const BoundarySeries& f, const BoundarySeries& g, double tau) {
    if (tau < 0.0) throw std::invalid_argument("h_half_pairing: tau must be nonnegative");
    const int kmax = std::min(f.kmax, g.kmax);
    double s = 0.0;
    for (int k = -kmax; k <= kmax; ++k) {
        if (k == 0) continue;
        const double w = std::abs(k) * std::exp(-0.5 * std::abs(k) * tau);
        s += w * (f.at(k) * std::conj(g.at(k))).real();
    }
    return s;
}

double circle_average(const TestFunction& f) {
    const int n = 512;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += f(std::polar(1.0, 2.0 * pi * j / n));
    return s / n;
}

double disk_average(const TestFunction& f, const QuadratureGrid& grid) {
    double s = 0.0;
    for (const auto& nd : support_nodes(f, true, grid)) s += nd.w * f(nd.z);
    return s / pi;
}

}  // namespace nhflow::kernels
