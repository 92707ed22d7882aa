#include <nhflow/kernels.hpp>

#include <algorithm>
#include <cmath>

namespace nhflow::kernels {
namespace {

struct GaussRule {
    std::vector<double> x, w;
};

GaussRule make_gauss(int n) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return r;
}

const GaussRule& gauss_rule(int n) {
    static const std::vector<GaussRule> table = [] {
        std::vector<GaussRule> t(257);
        for (int k = 1; k <= 256; ++k) t[k] = make_gauss(k);
        return t;
    }();
    if (n < 1 || n > 256) throw std::invalid_argument("Gauss-Legendre order out of range [1, 256]");
    return table[n];
}

// Parameter interval of {origin + ρe : ρ ≥ 0} inside the disk |w - c| < R.
bool ray_disk(cplx origin, cplx e, cplx c, double R, double& lo, double& hi) {
    const cplx d = origin - c;
    const double b = (d * std::conj(e)).real();
    const double q = abs2(d) - R * R;
    const double disc = b * b - q;
    if (disc <= 0.0) return false;
    const double sq = std::sqrt(disc);
    lo = std::max(0.0, -b - sq);
    hi = -b + sq;
    return hi > lo;
}

std::vector<Node> midpoint_nodes(const RegionSpec& region, const QuadratureGrid& grid) {
    const int n = std::max(grid.radial, 2);
    const double h = 2.0 * region.radius / n;
    std::vector<Node> out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cplx z = region.center + cplx(-region.radius + (i + 0.5) * h, -region.radius + (j + 0.5) * h);
            if (std::abs(z - region.center) >= region.radius) continue;
            if (region.clip_to_unit_disk && std::abs(z) >= 1.0) continue;
            out.push_back({z, h * h});
        }
    return out;
}

}  // namespace

QuadratureGrid QuadratureGrid::scaled(double factor) const {
    QuadratureGrid g = *this;
    g.radial = std::max(2, static_cast<int>(std::lround(radial * factor)));
    g.angular = std::max(4, static_cast<int>(std::lround(angular * factor)));
    return g;
}

std::vector<Node> region_nodes(const RegionSpec& region, cplx origin, double scale, int depth,
                               const QuadratureGrid& grid) {
    if (!(region.radius > 0.0)) throw std::invalid_argument("region radius must be positive");
    if (grid.scheme == QuadratureGrid::Scheme::TensorMidpoint) return midpoint_nodes(region, grid);

    const GaussRule& gr = gauss_rule(grid.radial);
    const int na = grid.angular;
    const double dth = 2.0 * pi / na;
    std::vector<Node> out;
    out.reserve(static_cast<std::size_t>(na) * grid.radial * 4);
    std::vector<double> br;
    for (int j = 0; j < na; ++j) {
        const cplx e = std::polar(1.0, dth * (j + 0.5));
        double lo, hi;
        if (!ray_disk(origin, e, region.center, region.radius, lo, hi)) continue;
        if (region.clip_to_unit_disk) {
            double ulo, uhi;
            if (!ray_disk(origin, e, 0.0, 1.0, ulo, uhi)) continue;
            lo = std::max(lo, ulo);
            hi = std::min(hi, uhi);
            if (hi <= lo) continue;
        }
        br.assign({lo, hi});
        if (region.split_at_unit_circle) {
            const double b = (origin * std::conj(e)).real();
            const double disc = b * b - (abs2(origin) - 1.0);
            if (disc > 0.0)
                for (double r : {-b - std::sqrt(disc), -b + std::sqrt(disc)})
                    if (r > lo && r < hi) br.push_back(r);
        }
        if (scale > 0.0)
            for (double r = scale * std::pow(4.0, -depth); r < hi; r *= 4.0)
                if (r > lo) br.push_back(r);
        std::sort(br.begin(), br.end());
        for (std::size_t p = 0; p + 1 < br.size(); ++p) {
            const double a = br[p], b = br[p + 1];
            if (b - a <= 1e-15 * std::max(1.0, b)) continue;
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (int k = 0; k < grid.radial; ++k) {
                const double rho = mid + half * gr.x[k];
                out.push_back({origin + rho * e, dth * half * gr.w[k] * rho});
            }
        }
    }
    return out;
}

std::vector<Node> support_nodes(const TestFunction& f, bool clip_to_unit_disk, const QuadratureGrid& grid) {
    return region_nodes({f.center(), f.support_radius(), clip_to_unit_disk, false}, f.center(), 0.0, 0, grid);
}

}  // namespace nhflow::kernels
