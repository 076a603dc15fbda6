#include <gtest/gtest.h>

#include <random>

#include "nsalab/errors.hpp"
#include "nsalab/graph_transform.hpp"
#include "nsalab/regularity.hpp"

using namespace nsalab;

namespace {

Eigen::Matrix2d cat() { return (Eigen::Matrix2d() << 2, 1, 1, 1).finished(); }
TrigSpec trig(double eps) { return TrigSpec{cat(), eps, {{0, 1, 0}, {1, 0, 1}}}; }
const double kLambdaS = (3 - std::sqrt(5.0)) / 2;

// h(y, z) evaluated from scratch at the image point y
Direction fiber_at_image(const DiffeoSpec& f, const TorusPoint& y, double z) {
    return projective_action(inverse_tangent(f, y), Direction(z));
}

}  // namespace

TEST(FiberMap, IsProjectiveInverseDifferential) {
    const DiffeoSpec f = trig(0.05);
    const TorusPoint x(0.2, 0.7);
    const Direction z(1.1);
    EXPECT_EQ(fiber_map(f, x, z).theta(), projective_action(inverse_tangent(f, x), z).theta());
}

TEST(FiberJet, MatchesFiniteDifferences) {
    const DiffeoSpec f = trig(0.05);
    const double h = 1e-6;
    for (const TorusPoint& pre : {TorusPoint(0.1, 0.2), TorusPoint(0.55, 0.9), TorusPoint(0.8, 0.33)}) {
        const TorusPoint y = nsalab::apply(f, pre);
        for (double z : {0.3, 2.1, 2.8}) {
            const FiberJet jet = fiber_jet(f, pre, Direction(z));
            EXPECT_LT(proj_dist(jet.value, fiber_at_image(f, y, z)), 1e-12);
            const double dz = proj_diff(fiber_at_image(f, y, z - h), fiber_at_image(f, y, z + h)) / (2 * h);
            EXPECT_NEAR(jet.dz, dz, 1e-6);
            for (int k = 0; k < 2; ++k) {
                Eigen::Vector2d e = Eigen::Vector2d::Zero();
                e[k] = h;
                const double dy = proj_diff(fiber_at_image(f, translate(y, Eigen::Vector2d(-e)), z),
                                            fiber_at_image(f, translate(y, e), z)) /
                                  (2 * h);
                EXPECT_NEAR(jet.dy[k], dy, 1e-6);
            }
        }
    }
}

TEST(FiberJet, CatContractionAtStableDirection) {
    // derivative of the projective action of A^{-1} at its expanding direction
    // is the eigenvalue ratio (1/eta) / eta = lambda_s^2
    const auto [es, eu] = eigen_directions(cat());
    const FiberJet jet = fiber_jet(LinearSpec{cat()}, TorusPoint(0.4, 0.1), Direction::of(es));
    EXPECT_NEAR(jet.dz, kLambdaS * kLambdaS, 1e-14);
    EXPECT_EQ(jet.dy.norm(), 0.0);
    EXPECT_LT(proj_dist(jet.value, Direction::of(es)), 1e-14);
}

TEST(GraphTransform, CatFixesStableSection) {
    const auto [es, eu] = eigen_directions(cat());
    const Section s(32, Direction::of(es));
    EXPECT_LT(sup_proj_dist(graph_transform(LinearSpec{cat()}, s), s), 1e-15);
    EXPECT_LT(sup_proj_dist(compose_prefix(MapFamily::constant(LinearSpec{cat()}), 0, s), s), 0.0 + 1e-300);
}

TEST(GraphTransform, BandViolationNamesIndex) {
    const auto [es, eu] = eigen_directions(cat());
    const Band band{Section(16, Direction(Direction::of(es).theta() + 0.5)), 0.1};
    try {
        compose_prefix(MapFamily::constant(LinearSpec{cat()}), 3, band.center, &band);
        FAIL();
    } catch (const FiberInvarianceError& e) {
        EXPECT_EQ(e.index(), 3u);
        EXPECT_NE(std::string(e.what()).find("fiber invariance violated"), std::string::npos);
    }
}

TEST(GraphTransform, ContractsInTheFiber) {
    const DiffeoSpec f = trig(0.05);
    const ConeField cones = eigen_cones(cat(), 0.2);
    const Band band = default_band(cones, 64);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    const double lam = 0.35;  // above the sampled band sup of |d_z h| for this map
    for (int trial = 0; trial < 5; ++trial) {
        const double a1 = u(rng), a2 = u(rng), ph = u(rng);
        auto make = [&](double sign) {
            return Section::from_function(64, [&](const TorusPoint& p) {
                return Direction(band.center(p).theta() +
                                 sign * 0.9 * band.radius * 0.5 * (a1 * std::sin(2 * M_PI * p.x1() + ph) + a2 * std::cos(2 * M_PI * p.x2())));
            });
        };
        const Section s1 = make(1), s2 = make(-1);
        const double before = sup_proj_dist(s1, s2);
        const double after = sup_proj_dist(graph_transform(f, s1, &band), graph_transform(f, s2, &band));
        EXPECT_LE(after, lam * before + 1e-12);
    }
}

TEST(ConePullback, AgreesWithComposePrefix) {
    const auto fam = MapFamily::periodic({trig(0.03), trig(0.05)});
    const ConeField cones = eigen_cones(cat(), 0.2);
    const Band band = default_band(cones, 64);
    const Section deep = compose_prefix(fam, 30, band.center, &band);
    const Direction seed = band.center.at(0, 0);
    double worst = 0;
    for (int i = 0; i < 64; i += 7)
        for (int j = 0; j < 64; j += 5)
            worst = std::max(worst, proj_dist(deep.at(i, j), cone_pullback(fam, 30, deep.point(i, j), seed)));
    EXPECT_LT(worst, 1e-6 + deep.max_neighbour_jump());
}

TEST(ConePullback, SeedIndependentAtDepth) {
    const auto fam = MapFamily::constant(trig(0.05));
    const auto [es, eu] = eigen_directions(cat());
    const TorusPoint x(0.31, 0.77);
    const Direction a = cone_pullback(fam, 40, x, Direction::of(es));
    const Direction b = cone_pullback(fam, 40, x, Direction(Direction::of(es).theta() + 0.15));
    EXPECT_LT(proj_dist(a, b), 1e-12);
}

TEST(SolveSection, CatGroundTruth) {
    const ConeField cones = eigen_cones(cat(), 0.2);
    const auto sol = solve_section(MapFamily::constant(LinearSpec{cat()}), default_band(cones, 64), {1e-10, 100, 0.2});
    const double target = wrap_angle(std::atan(-(1 + std::sqrt(5.0)) / 2));
    EXPECT_LT(sup_proj_dist(sol.sigma, Section(64, Direction(target))), 1e-8);
    EXPECT_LT(sup_norm(sol.deriv), 1e-8);
    const auto& d = sol.diagnostics;
    EXPECT_NEAR(d.lambda_hat, kLambdaS * kLambdaS, 1e-12);
    EXPECT_NEAR(d.kappa_hat, 1 / kLambdaS, 1e-12);
    EXPECT_NEAR(d.delta_hat, kLambdaS, 1e-12);
    ASSERT_TRUE(d.delta_beta_hat.has_value());
    EXPECT_NEAR(*d.delta_beta_hat, kLambdaS * std::pow(1 / kLambdaS, 0.2), 1e-12);
    EXPECT_GE(d.lambda_band, d.lambda_hat);
    EXPECT_TRUE(d.warnings.empty());
    EXPECT_NEAR(d.slope_bound, d.b_hat * d.b_hat / (1 - d.delta_hat), 1e-12);
}

TEST(SolveSection, PeriodicFixedPointAndDerivative) {
    const auto fam = MapFamily::periodic({trig(0.03), trig(0.05)});
    const Band band = default_band(eigen_cones(cat(), 0.2), 64);
    const auto sol = solve_section(fam, band, {1e-11, 200, std::nullopt});
    EXPECT_EQ(sol.diagnostics.iterations % 2, 0u);
    // invariance: Gamma_1 Gamma_2 sigma = sigma
    const Section again = graph_transform(fam[1], graph_transform(fam[2], sol.sigma));
    EXPECT_LT(sup_proj_dist(again, sol.sigma), 1e-9);
    EXPECT_LT(sup_norm_diff(finite_diff_deriv(sol.sigma), sol.deriv), 10.0 / 64);
    EXPECT_LT(sol.diagnostics.delta_hat, 1.0);
}

TEST(SolveSection, GeneralFamilyUsesDepthSchedule) {
    const auto fam = MapFamily::random_choice({trig(0.02), trig(0.04), trig(0.05)}, 11);
    const Band band = default_band(eigen_cones(cat(), 0.2), 32);
    const auto sol = solve_section(fam, band, {1e-10, 400, std::nullopt});
    const TorusPoint x = sol.sigma.point(5, 9);
    // grid interpolation at each step leaves an O(h^2) gap to the exact pull-back
    const double gap = proj_dist(sol.sigma.at(5, 9), cone_pullback(fam, 60, x, band.center.at(0, 0)));
    EXPECT_LT(gap, 1e-6 + sol.sigma.max_neighbour_jump());
    EXPECT_LT(gap, 1e-4);
    EXPECT_LT(sol.diagnostics.residual, 1e-10);
}

TEST(SolveSection, NonConvergenceCarriesResidual) {
    const Band band = default_band(eigen_cones(cat(), 0.2), 32);
    try {
        solve_section(MapFamily::constant(trig(0.05)), band, {1e-14, 3, std::nullopt});
        FAIL();
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.best_residual(), 0.0);
        EXPECT_TRUE(std::isfinite(e.best_residual()));
    }
}

TEST(SolveSection, WarnsWhenContractionIsNotVerified) {
    // strongly sheared hyperbolic matrix: ||A|| lambda > 1 although the fixed direction is exact
    const Eigen::Matrix2d a = (Eigen::Matrix2d() << 2, 10, 0, 0.5).finished();
    const Band band = default_band(eigen_cones(a, 0.1), 16);
    const auto sol = solve_section(MapFamily::constant(LinearSpec{a}), band, {1e-10, 50, std::nullopt});
    EXPECT_GE(sol.diagnostics.delta_hat, 1.0);
    ASSERT_FALSE(sol.diagnostics.warnings.empty());
    EXPECT_EQ(sol.diagnostics.warnings[0], "contraction condition not verified empirically");
}

TEST(DerivativeTransform, LipschitzInH) {
    const DiffeoSpec f = trig(0.05);
    const Band band = default_band(eigen_cones(cat(), 0.2), 32);
    const double bound = derivative_lipschitz_bound(f, band.center);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    DerivField h1(32), h2(32);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) {
            h1.set(i, j, Eigen::RowVector2d(u(rng), u(rng)));
            h2.set(i, j, Eigen::RowVector2d(u(rng), u(rng)));
        }
    const double before = sup_norm_diff(h1, h2);
    const double after = sup_norm_diff(derivative_transform(f, band.center, h1), derivative_transform(f, band.center, h2));
    EXPECT_LE(after, bound * before + 1e-12);
    EXPECT_LT(bound, 1.0);
}
