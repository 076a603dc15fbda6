#include "nsalab/counterexample.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "nsalab/csv.hpp"
#include "nsalab/graph_transform.hpp"
#include "nsalab/parallel.hpp"
#include "nsalab/regularity.hpp"

namespace nsalab {

namespace {

double stable_parameter(const TorusPoint& q, const Eigen::Vector2d& e_s, const Eigen::Vector2d& e_u) {
    const Eigen::Vector2d d = torus_delta(TorusPoint(0.0, 0.0), q);
    Eigen::Matrix2d frame;
    frame << e_s, e_u;
    const Eigen::Vector2d su = frame.inverse() * d;
    if (std::abs(su.y()) > 1e-9) throw std::invalid_argument("p and p' must lie on the stable line through 0");
    return su.x();
}

// (s, u) coordinates of q relative to c.
Eigen::Vector2d local_coords(const CounterexampleGeometry& g, const TorusPoint& c, const TorusPoint& q) {
    Eigen::Matrix2d frame;
    frame << g.e_s, g.e_u;
    return frame.inverse() * torus_delta(c, q);
}

double phi_minus_id(const BumpSpec& f, const TorusPoint& y) {
    // f = phi o A, so phi(y) = f(A^{-1} y)
    const TorusPoint x(Eigen::Vector2d(f.base.inverse() * y.coords()));
    return torus_dist(nsalab::apply(f, x), y);
}

Eigen::Matrix2d phi_tangent_at(const BumpSpec& f, const TorusPoint& y) {
    const Eigen::Matrix2d a_inv = f.base.inverse();
    const TorusPoint x(Eigen::Vector2d(a_inv * y.coords()));
    return tangent(f, x) * a_inv;
}

}  // namespace

void CounterexampleParams::check() const {
    if (!is_hyperbolic_toral(A)) throw std::invalid_argument("counterexample base must be a hyperbolic toral matrix");
    if (!(b >= 0.0 && b <= 0.2)) throw std::invalid_argument("b must be in [0, 0.2]");
    if (!(theta > 0.0 && theta < std::atan(1.0))) throw std::invalid_argument("theta must be in (0, pi/4)");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (!(base_ratio > 0.0 && base_ratio < 1.0)) throw std::invalid_argument("base_ratio must be in (0, 1)");
    if (!(height_pad >= 0.0)) throw std::invalid_argument("height_pad must be >= 0");
    if (!(support_width > 0.0 && support_height > 0.0)) throw std::invalid_argument("bump support must be positive");
}

double CounterexampleParams::mu() const { return std::tan(theta); }

TorusPoint CounterexampleGeometry::p_n(std::size_t n) const {
    return TorusPoint(Eigen::Vector2d(s_p * std::pow(lambda_s, double(n)) * e_s));
}

TorusPoint CounterexampleGeometry::p_prime_n(std::size_t n) const {
    return TorusPoint(Eigen::Vector2d(s_pp * std::pow(lambda_s, double(n)) * e_s));
}

double CounterexampleGeometry::separation(std::size_t n) const {
    return std::abs(s_p - s_pp) * std::pow(std::abs(lambda_s), double(n));
}

CounterexampleGeometry geometry(const CounterexampleParams& params) {
    params.check();
    CounterexampleGeometry g;
    std::tie(g.e_s, g.e_u) = eigen_directions(params.A);
    const Eigen::Vector2d vals = params.A.eigenvalues().real();
    const double l0 = vals[0], l1 = vals[1];
    g.lambda_s = std::abs(l0) < std::abs(l1) ? l0 : l1;
    g.eta = std::max(std::abs(l0), std::abs(l1));
    const TorusPoint p = params.p.value_or(TorusPoint(Eigen::Vector2d(0.1 * g.e_s)));
    const TorusPoint pp = params.p_prime.value_or(TorusPoint(Eigen::Vector2d(-0.1 * g.e_s)));
    g.s_p = stable_parameter(p, g.e_s, g.e_u);
    g.s_pp = stable_parameter(pp, g.e_s, g.e_u);
    if (std::abs(g.s_p - g.s_pp) < 1e-9) throw std::invalid_argument("p and p' must differ");
    const double grow = (1.0 + params.b) * (1.0 + params.b);
    const double mu = params.mu();
    g.stretch = std::sqrt(grow + (grow - 1.0) * mu * mu) - 1.0;
    return g;
}

BumpSpec member(const CounterexampleParams& params, std::size_t n) {
    const CounterexampleGeometry g = geometry(params);
    const double d = g.separation(n);
    return BumpSpec{params.A,        g.p_n(n).coords(),         g.e_s, g.e_u,
                    params.support_width * d, params.support_height * d, g.stretch};
}

MapFamily build_family(const CounterexampleParams& params) {
    const CounterexampleGeometry g = geometry(params);
    // the support [-w, w] around p_n must stay clear of R'_n, whose base is
    // base_ratio * d around p'_n at distance d
    if (params.support_width + params.base_ratio / 2.0 >= 1.0) throw std::invalid_argument("rectangle geometry violated");
    const BumpSpec first = member(params, 1);
    validate(first);
    return MapFamily::generated([params, g](std::size_t n) -> DiffeoSpec {
        const double d = g.separation(n);
        return BumpSpec{params.A, g.p_n(n).coords(), g.e_s, g.e_u,
                        params.support_width * d, params.support_height * d, g.stretch};
    });
}

PropertyReport verify_properties(const CounterexampleParams& params, std::size_t n, int grid) {
    if (n < 1) throw std::invalid_argument("verify_properties needs n >= 1");
    const CounterexampleGeometry g = geometry(params);
    const MapFamily fam = build_family(params);
    const BumpSpec f = std::get<BumpSpec>(fam[n]);
    const double d = g.separation(n);
    const double mu = params.mu();
    PropertyReport r;
    r.n = n;

    constexpr int kLocal = 41;
    // identity on the stable line through 0, sampled through the bump
    for (int k = 0; k <= 4 * kLocal; ++k) {
        const double s = -2.0 * d + 4.0 * d * k / (4 * kLocal) + g.s_p * std::pow(g.lambda_s, double(n));
        const TorusPoint y(Eigen::Vector2d(s * g.e_s));
        r.stable_line_displacement = std::max(r.stable_line_displacement, phi_minus_id(f, y));
    }
    for (int k = 0; k <= 200; ++k) {
        const TorusPoint y(Eigen::Vector2d((-0.5 + k / 200.0) * g.e_s));
        r.stable_line_displacement = std::max(r.stable_line_displacement, phi_minus_id(f, y));
    }
    r.stable_line_ok = r.stable_line_displacement < 1e-12;

    // C^1 distance over a grid plus the bump box
    std::vector<TorusPoint> ys;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) ys.emplace_back(double(i) / grid, double(j) / grid);
    const TorusPoint pn = g.p_n(n);
    for (int i = 0; i < kLocal; ++i)
        for (int j = 0; j < kLocal; ++j) {
            const double s = f.half_width * (-1.0 + 2.0 * i / (kLocal - 1));
            const double u = f.half_height * (-1.0 + 2.0 * j / (kLocal - 1));
            ys.push_back(translate(pn, Eigen::Vector2d(s * g.e_s + u * g.e_u)));
        }
    double c0 = 0.0, c1 = 0.0;
    for (const auto& y : ys) {
        c0 = std::max(c0, phi_minus_id(f, y));
        c1 = std::max(c1, op_norm(phi_tangent_at(f, y) - Eigen::Matrix2d::Identity()));
    }
    r.c1_distance = c0 + c1;
    r.c1_ok = r.c1_distance < params.eps / 2.0;

    // expansion on the plateau: |s| <= w/2, |u| <= h/2, v in K^u
    r.min_expansion = std::numeric_limits<double>::infinity();
    constexpr int kPlateau = 11;
    constexpr int kDirs = 17;
    for (int i = 0; i < kPlateau; ++i)
        for (int j = 0; j < kPlateau; ++j) {
            const double s = 0.5 * f.half_width * (-1.0 + 2.0 * i / (kPlateau - 1));
            const double u = 0.5 * f.half_height * (-1.0 + 2.0 * j / (kPlateau - 1));
            const Eigen::Matrix2d dphi = phi_tangent_at(f, translate(pn, Eigen::Vector2d(s * g.e_s + u * g.e_u)));
            for (int q = 0; q < kDirs; ++q) {
                const double a = mu * (-1.0 + 2.0 * q / (kDirs - 1));
                const Eigen::Vector2d v = (g.e_u + a * g.e_s).normalized();
                r.min_expansion = std::min(r.min_expansion, (dphi * v).norm());
            }
        }
    r.expansion_degenerate = params.b == 0.0;
    r.expansion_ok = !r.expansion_degenerate && r.min_expansion >= (1.0 + params.b) * (1.0 - 1e-12);

    // R'_n: base base_ratio * d, height eta^{-n} (|p - p'| + pad), centered at p'_n
    const TorusPoint ppn = g.p_prime_n(n);
    const double base = params.base_ratio * d;
    const double height = std::pow(g.eta, -double(n)) * (std::abs(g.s_p - g.s_pp) + params.height_pad);
    for (int i = 0; i < kPlateau; ++i)
        for (int j = 0; j < kPlateau; ++j) {
            const double s = 0.5 * base * (-1.0 + 2.0 * i / (kPlateau - 1));
            const double u = 0.5 * height * (-1.0 + 2.0 * j / (kPlateau - 1));
            const TorusPoint y = translate(ppn, Eigen::Vector2d(s * g.e_s + u * g.e_u));
            r.rprime_deviation = std::max(
                r.rprime_deviation,
                phi_minus_id(f, y) + op_norm(phi_tangent_at(f, y) - Eigen::Matrix2d::Identity()));
        }
    r.rprime_ok = r.rprime_deviation < 1e-12;

    r.cones = check_cones(f, eigen_cones(params.A, mu), grid);
    r.cones_ok = r.cones.passed();
    return r;
}

BlowupTable blowup_experiment(const CounterexampleParams& params, std::size_t n_max, const BlowupOptions& opts) {
    const CounterexampleGeometry g = geometry(params);
    const MapFamily fam = build_family(params);
    const TorusPoint p = g.p_n(0);
    const TorusPoint pp = g.p_prime_n(0);
    const Direction across = Direction::of(g.e_u);
    const Transversal tau_p{pp, across, opts.transversal_half_length, 3};
    const double leaf_len = std::abs(g.s_p - g.s_pp);

    BlowupTable table;
    table.rows.resize(n_max + 1);
    parallel_for(n_max + 1, [&](std::size_t N) {
        BlowupRow& row = table.rows[N];
        row.N = N;
        const auto prefix = family_prefix(fam, N);
        auto forward_u = [&](double l) {
            TorusPoint x = translate(p, Eigen::Vector2d(l * g.e_u));
            for (const auto& f : prefix) x = nsalab::apply(f, x);
            return local_coords(g, g.p_n(N), x).y();
        };
        // F_N(p + l e_u) at unstable offset d_N / 2: the edge of the N-th plateau
        const double target = 0.5 * params.support_height * g.separation(N);
        // keep the bracket small enough that F_N(I) does not wrap around the torus
        double ell = std::min(opts.transversal_half_length, 0.1 * std::pow(g.eta, -double(N)));
        if (forward_u(ell) > target) {
            double lo = std::log(1e-300), hi = std::log(ell);
            for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (forward_u(std::exp(mid)) > target) hi = mid; else lo = mid;
            }
            ell = std::exp(0.5 * (lo + hi));
        }
        // stable field of (f_1..f_N, A, A, ...): beyond N the stable line is e_s
        std::vector<DiffeoSpec> chain = prefix;
        for (std::size_t k = 0; k < opts.extra_depth; ++k) chain.emplace_back(LinearSpec{params.A});
        const Direction seed = Direction::of(g.e_s);
        const DirectionFieldFn field = [&](const TorusPoint& x) {
            return cone_pullback(std::span<const DiffeoSpec>(chain), x, seed);
        };
        const Transversal tau{p, across, ell, 3};
        HolonomyOptions hopt;
        hopt.step = opts.step;
        hopt.max_arclen = 2.0 * leaf_len;
        // the row's tau is only 2 ell long; run in serial (rows are the parallel axis)
        const HolonomyResult h = holonomy(field, tau, tau_p, hopt);
        row.seg_len = 2.0 * ell;
        row.valid = h.crossed.front() && h.crossed.back();
        row.img_len = row.valid ? std::abs(h.image_params.back() - h.image_params.front()) : 0.0;
        row.ratio = row.valid ? row.img_len / row.seg_len : 0.0;
        row.valid = row.valid && row.ratio > 0.0;
    });
    return table;
}

double fitted_log_slope(const BlowupTable& table, std::size_t n_min) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (const auto& r : table.rows) {
        if (!r.valid || r.N < n_min) continue;
        const double x = double(r.N), y = std::log(r.ratio);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1;
    }
    if (n < 2) throw std::invalid_argument("need at least two valid rows to fit a slope");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_blowup_csv(std::ostream& os, const BlowupTable& table) {
    os << "# schema=blowup version=1\n";
    os << "N,seg_len,img_len,ratio\n";
    for (const auto& r : table.rows) {
        if (r.valid)
            os << r.N << ',' << fmt_real(r.seg_len) << ',' << fmt_real(r.img_len) << ',' << fmt_real(r.ratio) << '\n';
        else
            os << r.N << ',' << fmt_real(r.seg_len) << ",nan,nan\n";
    }
}

}  // namespace nsalab
