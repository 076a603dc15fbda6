#include "nsalab/cone_verify.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nsalab/parallel.hpp"

namespace nsalab {

namespace {

Eigen::Matrix2d frame_at(const ConeField& c, const TorusPoint& p) {
    Eigen::Matrix2d m;
    m.col(0) = c.h_dir(p).unit();
    m.col(1) = c.v_dir(p).unit();
    return m;
}

std::vector<TorusPoint> sample_points(const DiffeoSpec& f, int grid) {
    std::vector<TorusPoint> pts;
    pts.reserve(std::size_t(grid) * grid);
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) pts.emplace_back(double(i) / grid, double(j) / grid);
    const auto local = local_samples(f);
    for (const auto& q : local) pts.push_back(q);
    for (const auto& q : local) pts.push_back(nsalab::apply(f, q));
    return pts;
}

// Signed margin of the ray w relative to the target cone. `slope` maps frame
// coordinates to the cone's slope parameter; the cone is |slope| <= mu.
struct RayCheck {
    bool inside;
    double slope;
    double margin;  // angular distance to the cone boundary, negative outside
};

template <typename SlopeFn>
RayCheck check_ray(const Eigen::Vector2d& w, const Eigen::Matrix2d& frame, const Eigen::Matrix2d& frame_inv,
                   double mu, const Eigen::Vector2d& b1, const Eigen::Vector2d& b2, SlopeFn slope_of) {
    const Eigen::Vector2d c = frame_inv * w;
    const double t = slope_of(c);
    const bool inside = std::abs(t) <= mu * (1.0 + 1e-12) + 1e-15;
    const Direction d = Direction::of(w);
    const double dist =
        std::min(proj_dist(d, Direction::of(frame * b1)), proj_dist(d, Direction::of(frame * b2)));
    return {inside, t, inside ? dist : -dist};
}

struct PointResult {
    bool ok_u = true;
    bool ok_s = true;
    double margin = std::numeric_limits<double>::infinity();
};

PointResult invariance_at(const DiffeoSpec& f, const ConeField& cones, const TorusPoint& x) {
    PointResult r;
    const double mu = cones.mu;
    const Eigen::Matrix2d fx = frame_at(cones, x);

    // unstable: D_x f K^u(x) inside K^u(f x); slope = v2 / v1
    {
        const TorusPoint y = nsalab::apply(f, x);
        const Eigen::Matrix2d fy = frame_at(cones, y);
        const Eigen::Matrix2d fy_inv = fy.inverse();
        const Eigen::Matrix2d d = tangent(f, x);
        const Eigen::Vector2d b1(1.0, mu), b2(1.0, -mu), ctr(1.0, 0.0);
        auto slope = [](const Eigen::Vector2d& c) { return c.y() / c.x(); };
        const RayCheck r1 = check_ray(d * (fx * b1), fy, fy_inv, mu, b1, b2, slope);
        const RayCheck r2 = check_ray(d * (fx * b2), fy, fy_inv, mu, b1, b2, slope);
        const RayCheck rc = check_ray(d * (fx * ctr), fy, fy_inv, mu, b1, b2, slope);
        const bool between = (rc.slope - r1.slope) * (rc.slope - r2.slope) <= 0.0;
        r.ok_u = r1.inside && r2.inside && rc.inside && between;
        r.margin = std::min({r.margin, r1.margin, r2.margin});
        if (!between) r.margin = std::min(r.margin, -1.0);
    }
    // stable: D_x f^{-1} K^s(x) inside K^s(f^{-1} x); slope = v1 / v2
    {
        const TorusPoint y = inverse_apply(f, x);
        const Eigen::Matrix2d fy = frame_at(cones, y);
        const Eigen::Matrix2d fy_inv = fy.inverse();
        const Eigen::Matrix2d d = inverse_tangent_at_preimage(f, y);
        const Eigen::Vector2d b1(mu, 1.0), b2(-mu, 1.0), ctr(0.0, 1.0);
        auto slope = [](const Eigen::Vector2d& c) { return c.x() / c.y(); };
        const RayCheck r1 = check_ray(d * (fx * b1), fy, fy_inv, mu, b1, b2, slope);
        const RayCheck r2 = check_ray(d * (fx * b2), fy, fy_inv, mu, b1, b2, slope);
        const RayCheck rc = check_ray(d * (fx * ctr), fy, fy_inv, mu, b1, b2, slope);
        const bool between = (rc.slope - r1.slope) * (rc.slope - r2.slope) <= 0.0;
        r.ok_s = r1.inside && r2.inside && rc.inside && between;
        r.margin = std::min({r.margin, r1.margin, r2.margin});
        if (!between) r.margin = std::min(r.margin, -1.0);
    }
    return r;
}

void merge_worst(ConeReport& into, const std::vector<TorusPoint>& pts, std::size_t limit = 16) {
    for (const auto& p : pts) {
        if (into.worst_points.size() >= limit) break;
        into.worst_points.push_back(p);
    }
}

}  // namespace

Direction DirectionField::operator()(const TorusPoint& p) const {
    if (const auto* d = std::get_if<Direction>(&field_)) return *d;
    return (*std::get<std::shared_ptr<const Section>>(field_))(p);
}

void ConeField::check(int grid) const {
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("cone aperture mu must lie in (0, 1)");
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const TorusPoint p(double(i) / grid, double(j) / grid);
            if (proj_dist(h_dir(p), v_dir(p)) < 1e-6) throw std::invalid_argument("cone centers are not transversal");
        }
}

std::pair<Eigen::Vector2d, Eigen::Vector2d> eigen_directions(const Eigen::Matrix2d& a) {
    Eigen::EigenSolver<Eigen::Matrix2d> es(a);
    const auto vals = es.eigenvalues();
    if (std::abs(vals[0].imag()) > 0 || std::abs(vals[1].imag()) > 0)
        throw std::invalid_argument("matrix is not hyperbolic (complex eigenvalues)");
    const int s = std::abs(vals[0].real()) < std::abs(vals[1].real()) ? 0 : 1;
    const int u = 1 - s;
    if (!(std::abs(vals[s].real()) < 1.0 && std::abs(vals[u].real()) > 1.0))
        throw std::invalid_argument("matrix is not hyperbolic");
    Eigen::Vector2d es_v = es.eigenvectors().col(s).real().normalized();
    Eigen::Vector2d eu_v = es.eigenvectors().col(u).real().normalized();
    return {es_v, eu_v};
}

ConeField eigen_cones(const Eigen::Matrix2d& a, double mu) {
    const auto [es, eu] = eigen_directions(a);
    return ConeField{Direction::of(eu), Direction::of(es), mu};
}

ConeReport check_invariance(const DiffeoSpec& f, const ConeField& cones, int grid) {
    cones.check(std::min(grid, 16));
    const auto pts = sample_points(f, grid);
    std::vector<PointResult> res(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) { res[k] = invariance_at(f, cones, pts[k]); });

    ConeReport rep;
    rep.invariant_s = true;
    rep.invariant_u = true;
    double margin = std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    std::vector<TorusPoint> failing;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        rep.invariant_u = rep.invariant_u && res[k].ok_u;
        rep.invariant_s = rep.invariant_s && res[k].ok_s;
        if (!res[k].ok_u || !res[k].ok_s) failing.push_back(pts[k]);
        if (res[k].margin < margin) {
            margin = res[k].margin;
            worst = k;
        }
    }
    rep.angle_margin = std::max(0.0, margin);
    if (failing.empty())
        rep.worst_points.push_back(pts[worst]);
    else
        merge_worst(rep, failing);
    return rep;
}

std::pair<double, double> expansion_constants(const DiffeoSpec& f, const ConeField& cones, int grid,
                                              int directions) {
    if (directions < 3) throw std::invalid_argument("need at least 3 directions per cone");
    const auto pts = sample_points(f, grid);
    std::vector<std::pair<double, double>> res(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) {
        const TorusPoint& x = pts[k];
        const Eigen::Matrix2d fr = frame_at(cones, x);
        const Eigen::Matrix2d d = tangent(f, x);
        const Eigen::Matrix2d d_inv = inverse_tangent(f, x);
        double eu = std::numeric_limits<double>::infinity();
        double es = std::numeric_limits<double>::infinity();
        for (int k2 = 0; k2 < directions; ++k2) {
            const double t = cones.mu * (-1.0 + 2.0 * k2 / (directions - 1));
            const Eigen::Vector2d vu = (fr * Eigen::Vector2d(1.0, t)).normalized();
            const Eigen::Vector2d vs = (fr * Eigen::Vector2d(t, 1.0)).normalized();
            eu = std::min(eu, (d * vu).norm());
            es = std::min(es, (d_inv * vs).norm());
        }
        res[k] = {eu, es};
    });
    double eta_u = std::numeric_limits<double>::infinity();
    double eta_s = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : res) {
        eta_u = std::min(eta_u, a);
        eta_s = std::min(eta_s, b);
    }
    return {eta_u, eta_s};
}

ConeReport check_cones(const DiffeoSpec& f, const ConeField& cones, int grid) {
    ConeReport rep = check_invariance(f, cones, grid);
    std::tie(rep.eta_u, rep.eta_s) = expansion_constants(f, cones, grid);
    return rep;
}

ConeReport common_condition(const MapFamily& fam, const ConeField& cones, std::size_t n_max, int grid) {
    std::size_t count = n_max;
    if (auto p = fam.period()) count = std::min(count, *p);
    ConeReport agg;
    agg.invariant_s = true;
    agg.invariant_u = true;
    agg.angle_margin = std::numeric_limits<double>::infinity();
    agg.eta_u = agg.eta_s = std::numeric_limits<double>::infinity();
    std::vector<TorusPoint> best_single;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= count; ++n) {
        const ConeReport r = check_cones(fam[n], cones, grid);
        agg.invariant_s = agg.invariant_s && r.invariant_s;
        agg.invariant_u = agg.invariant_u && r.invariant_u;
        agg.eta_u = std::min(agg.eta_u, r.eta_u);
        agg.eta_s = std::min(agg.eta_s, r.eta_s);
        if (!r.passed())
            merge_worst(agg, r.worst_points);
        else if (r.angle_margin < worst_margin) {
            worst_margin = r.angle_margin;
            best_single = r.worst_points;
        }
        agg.angle_margin = std::min(agg.angle_margin, r.angle_margin);
    }
    if (count == 0) agg.angle_margin = 0.0;
    if (agg.worst_points.empty()) agg.worst_points = best_single;
    return agg;
}

}  // namespace nsalab
