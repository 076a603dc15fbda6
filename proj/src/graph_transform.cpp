#include "nsalab/graph_transform.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nsalab/parallel.hpp"

namespace nsalab {

namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Per-point quantities recorded during a sweep.
struct SweepStats {
    double lambda = 0.0;
    double kappa = 0.0;
    double delta = 0.0;
    double delta_beta = 0.0;
};

struct Sweep {
    Section sigma;
    DerivField deriv;
    SweepStats stats;
};

// One application of (Gamma_n, Psi_n^sigma) with optional band check.
Sweep paired_sweep(const DiffeoSpec& f, const Section& sigma, const DerivField* h, const Band* band,
                   std::size_t index, std::optional<double> beta) {
    const int n = sigma.resolution();
    const std::size_t total = std::size_t(n) * n;
    Sweep out{Section(n, Direction()), h ? DerivField(n) : DerivField(), {}};
    std::vector<SweepStats> stats(total);
    std::vector<char> violated(total, 0);
    parallel_for(total, [&](std::size_t k) {
        const int i = int(k / n), j = int(k % n);
        const TorusPoint x = sigma.point(i, j);
        const TorusPoint y = nsalab::apply(f, x);
        const Direction z = sigma(y);
        const FiberJet jet = fiber_jet(f, x, z);
        out.sigma.set(i, j, jet.value);
        const Eigen::Matrix2d dfx = tangent(f, x);
        if (h) out.deriv.set(i, j, (jet.dy + jet.dz * (*h)(y)) * dfx);
        const double lam = std::abs(jet.dz);
        const double kap = op_norm(dfx);
        stats[k] = {lam, kap, lam * kap, beta ? lam * std::pow(kap, 1.0 + *beta) : 0.0};
        if (band && !band->contains(x, jet.value, 1e-9)) violated[k] = 1;
    });
    if (std::find(violated.begin(), violated.end(), 1) != violated.end()) throw FiberInvarianceError(index);
    for (const auto& s : stats) {
        out.stats.lambda = std::max(out.stats.lambda, s.lambda);
        out.stats.kappa = std::max(out.stats.kappa, s.kappa);
        out.stats.delta = std::max(out.stats.delta, s.delta);
        out.stats.delta_beta = std::max(out.stats.delta_beta, s.delta_beta);
    }
    return out;
}

void absorb(SweepStats& into, const SweepStats& s) {
    into.lambda = std::max(into.lambda, s.lambda);
    into.kappa = std::max(into.kappa, s.kappa);
    into.delta = std::max(into.delta, s.delta);
    into.delta_beta = std::max(into.delta_beta, s.delta_beta);
}

struct PairState {
    Section sigma;
    DerivField deriv;
    SweepStats stats;
};

// Gamma_{first} o ... o Gamma_{last} applied to state (last first).
PairState run_range(const std::vector<DiffeoSpec>& specs, std::size_t first, std::size_t last, PairState state,
                    const Band& band, std::optional<double> beta) {
    state.stats = {};
    for (std::size_t n = last; n >= first && n >= 1; --n) {
        Sweep s = paired_sweep(specs[n - 1], state.sigma, &state.deriv, &band, n, beta);
        state.sigma = std::move(s.sigma);
        state.deriv = std::move(s.deriv);
        absorb(state.stats, s.stats);
        if (n == first) break;
    }
    return state;
}

// Band-wide constants sampled over a coarse grid and fiber samples.
void band_constants(const std::vector<DiffeoSpec>& members, const Band& band, ContractionDiagnostics& d) {
    constexpr int kGrid = 32;
    constexpr int kFiber = 9;
    constexpr double kStep = 1e-5;
    for (const auto& f : members) {
        std::vector<std::array<double, 4>> res(std::size_t(kGrid) * kGrid);
        parallel_for(res.size(), [&](std::size_t k) {
            const TorusPoint x(double(k / kGrid) / kGrid, double(k % kGrid) / kGrid);
            const TorusPoint y = nsalab::apply(f, x);
            const double kap = op_norm(tangent(f, x));
            std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
            const Direction c = band.center(y);
            for (int q = 0; q < kFiber; ++q) {
                const double off = band.radius * (-1.0 + 2.0 * q / (kFiber - 1));
                const Direction z(c.theta() + off);
                const FiberJet jet = fiber_jet(f, x, z);
                const double lam = std::abs(jet.dz);
                acc[0] = std::max(acc[0], lam);
                acc[1] = std::max(acc[1], lam * kap);
                acc[2] = std::max(acc[2], std::hypot(jet.dy.norm(), jet.dz));
                // second differences of D h in y (through exact preimages) and z
                const FiberJet jz = fiber_jet(f, x, Direction(z.theta() + kStep));
                double m = std::hypot((jz.dy - jet.dy).norm(), jz.dz - jet.dz) / kStep;
                for (int axis = 0; axis < 2; ++axis) {
                    Eigen::Vector2d e = Eigen::Vector2d::Zero();
                    e[axis] = kStep;
                    const TorusPoint x2 = inverse_apply(f, translate(y, e));
                    const FiberJet jy = fiber_jet(f, x2, z);
                    m = std::max(m, std::hypot((jy.dy - jet.dy).norm(), jy.dz - jet.dz) / kStep);
                }
                acc[3] = std::max(acc[3], m);
            }
            res[k] = acc;
        });
        for (const auto& a : res) {
            d.lambda_band = std::max(d.lambda_band, a[0]);
            d.delta_band = std::max(d.delta_band, a[1]);
            d.b_hat = std::max(d.b_hat, a[2]);
            d.m_hat = std::max(d.m_hat, a[3]);
        }
    }
}

}  // namespace

Direction fiber_map(const DiffeoSpec& f, const TorusPoint& x, Direction z) {
    return projective_action(inverse_tangent(f, x), z);
}

FiberJet fiber_jet(const DiffeoSpec& f, const TorusPoint& pre, Direction z) {
    const Eigen::Matrix2d df = tangent(f, pre);
    const double det_df = df.determinant();
    if (det_df == 0.0 || !std::isfinite(det_df)) throw SingularMatrixError();
    const Eigen::Matrix2d m = df.inverse();
    const Eigen::Vector2d u = z.unit();
    const Eigen::Vector2d w = m * u;
    const double w2 = w.squaredNorm();
    FiberJet jet;
    jet.value = Direction::of(w);
    jet.dz = m.determinant() / w2;
    // d_{y_k} M = -M T_k M with T_k = sum_j M_jk d_j Df (chain rule through g = f^{-1})
    const auto d2 = second_derivative(f, pre);
    for (int k = 0; k < 2; ++k) {
        const Eigen::Matrix2d tk = m(0, k) * d2[0] + m(1, k) * d2[1];
        const Eigen::Vector2d dw = -(m * tk * m) * u;
        jet.dy[k] = cross(w, dw) / w2;
    }
    return jet;
}

Section graph_transform(const DiffeoSpec& f, const Section& sigma, const Band* band, std::size_t index) {
    return paired_sweep(f, sigma, nullptr, band, index, std::nullopt).sigma;
}

Section compose_prefix(const MapFamily& fam, std::size_t depth, const Section& sigma0, const Band* band) {
    Section s = sigma0;
    for (std::size_t n = depth; n >= 1; --n) s = graph_transform(fam[n], s, band, n);
    return s;
}

std::vector<DiffeoSpec> family_prefix(const MapFamily& fam, std::size_t depth) {
    std::vector<DiffeoSpec> out;
    out.reserve(depth);
    for (std::size_t n = 1; n <= depth; ++n) out.push_back(fam[n]);
    return out;
}

Direction cone_pullback(std::span<const DiffeoSpec> prefix, const TorusPoint& x, Direction seed) {
    std::vector<TorusPoint> orbit;
    orbit.reserve(prefix.size() + 1);
    orbit.push_back(x);
    for (const auto& f : prefix) orbit.push_back(nsalab::apply(f, orbit.back()));
    Eigen::Vector2d v = seed.unit();
    for (std::size_t k = prefix.size(); k >= 1; --k) {
        v = inverse_tangent_at_preimage(prefix[k - 1], orbit[k - 1]) * v;
        v.normalize();
    }
    return Direction::of(v);
}

Direction cone_pullback(const MapFamily& fam, std::size_t depth, const TorusPoint& x, Direction seed) {
    const auto prefix = family_prefix(fam, depth);
    return cone_pullback(std::span<const DiffeoSpec>(prefix), x, seed);
}

DerivField derivative_transform(const DiffeoSpec& f, const Section& sigma, const DerivField& h) {
    if (h.resolution() != sigma.resolution()) throw std::invalid_argument("section and field resolutions differ");
    return paired_sweep(f, sigma, &h, nullptr, 0, std::nullopt).deriv;
}

double derivative_lipschitz_bound(const DiffeoSpec& f, const Section& sigma) {
    return paired_sweep(f, sigma, nullptr, nullptr, 0, std::nullopt).stats.delta;
}

Band default_band(const ConeField& cones, int grid, double pad) {
    auto center = Section::from_function(grid, [&](const TorusPoint& p) { return cones.v_dir(p); });
    double half = 0.0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const TorusPoint p = center.point(i, j);
            Eigen::Matrix2d fr;
            fr.col(0) = cones.h_dir(p).unit();
            fr.col(1) = cones.v_dir(p).unit();
            const Direction c = center.at(i, j);
            half = std::max(half, proj_dist(c, Direction::of(fr * Eigen::Vector2d(cones.mu, 1.0))));
            half = std::max(half, proj_dist(c, Direction::of(fr * Eigen::Vector2d(-cones.mu, 1.0))));
        }
    Band band{std::move(center), half + pad};
    band.check();
    return band;
}

SectionSolution solve_section(const MapFamily& fam, const Band& band, const SolveOptions& opts) {
    band.check();
    if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
    if (opts.max_depth == 0) throw std::invalid_argument("max_depth must be positive");
    const int n = band.center.resolution();
    const PairState start{band.center, DerivField(n), {}};

    std::vector<DiffeoSpec> specs = family_prefix(fam, opts.max_depth);
    PairState prev = start;
    PairState cur;
    std::size_t depth = 0;
    double best = std::numeric_limits<double>::infinity();
    double res_sigma = 0.0, res_deriv = 0.0;
    const std::optional<std::size_t> period = fam.period();

    while (true) {
        std::size_t next_depth;
        if (period) {
            next_depth = depth + *period;
            if (next_depth > opts.max_depth) break;
            // periodic: the depth-(d+P) composition is the first period applied to the depth-d result
            cur = run_range(specs, 1, *period, prev, band, opts.beta);
        } else {
            next_depth = std::max(depth + 1, std::size_t(std::ceil(depth * 1.25)));
            if (next_depth > opts.max_depth) break;
            cur = run_range(specs, 1, next_depth, start, band, opts.beta);
        }
        depth = next_depth;
        res_sigma = sup_proj_dist(cur.sigma, prev.sigma);
        res_deriv = sup_norm_diff(cur.deriv, prev.deriv);
        best = std::min(best, std::max(res_sigma, res_deriv));
        prev = cur;
        if (res_sigma < opts.tol && res_deriv < opts.tol) {
            SectionSolution sol{cur.sigma, cur.deriv, {}};
            auto& d = sol.diagnostics;
            d.lambda_hat = cur.stats.lambda;
            d.kappa_hat = cur.stats.kappa;
            d.delta_hat = cur.stats.delta;
            if (opts.beta) {
                d.beta = opts.beta;
                d.delta_beta_hat = cur.stats.delta_beta;
            }
            d.iterations = depth;
            d.residual = res_sigma;
            d.deriv_residual = res_deriv;
            const std::size_t sampled = period ? *period : std::min<std::size_t>(depth, 8);
            band_constants(std::vector<DiffeoSpec>(specs.begin(), specs.begin() + sampled), band, d);
            d.b_hat = std::max(d.b_hat, d.kappa_hat);
            if (d.delta_hat < 1.0)
                d.slope_bound = d.b_hat * d.b_hat / (1.0 - d.delta_hat);
            else
                d.warnings.emplace_back("contraction condition not verified empirically");
            if (opts.beta && d.delta_beta_hat && *d.delta_beta_hat >= 1.0)
                d.warnings.emplace_back("Holder contraction condition not verified empirically");
            return sol;
        }
    }
    throw ConvergenceError("section iteration did not converge within max depth", best);
}

}  // namespace nsalab
