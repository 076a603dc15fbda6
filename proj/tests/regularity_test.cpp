#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "nsalab/graph_transform.hpp"
#include "nsalab/regularity.hpp"

using namespace nsalab;

namespace {

constexpr double kPi = std::numbers::pi;
Eigen::Matrix2d cat() { return (Eigen::Matrix2d() << 2, 1, 1, 1).finished(); }

DerivField sample(int n, const std::function<Eigen::RowVector2d(const TorusPoint&)>& fn) {
    DerivField h(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) h.set(i, j, fn(TorusPoint(double(i) / n, double(j) / n)));
    return h;
}

Section trig_sigma(int grid) {
    const TrigSpec f{cat(), 0.05, {{0, 1, 0}, {1, 0, 1}}};
    return solve_section(MapFamily::constant(f), default_band(eigen_cones(cat(), 0.2), grid)).sigma;
}

}  // namespace

TEST(FiniteDiff, ConstantAndSine) {
    EXPECT_EQ(sup_norm(finite_diff_deriv(Section(16, Direction(2.0)))), 0.0);
    const double a = 0.05;
    const int n = 128;
    const auto s = Section::from_function(n, [&](const TorusPoint& p) { return Direction(1.0 + a * std::sin(2 * kPi * p.x1())); });
    const auto exact = sample(n, [&](const TorusPoint& p) { return Eigen::RowVector2d(2 * kPi * a * std::cos(2 * kPi * p.x1()), 0); });
    EXPECT_LT(sup_norm_diff(finite_diff_deriv(s), exact), 2 * kPi * a * std::pow(2 * kPi / n, 2));
}

TEST(FiniteDiff, AffineAngleIsExact) {
    // theta = 0.3 + 0.1 x1 - 0.2 x2 in the interior: centered differences are exact there
    const int n = 32;
    const auto s = Section::from_function(n, [](const TorusPoint& p) { return Direction(0.3 + 0.1 * p.x1() - 0.2 * p.x2() + 1.0); });
    const DerivField d = finite_diff_deriv(s);
    for (int i = 1; i < n - 1; ++i)
        for (int j = 1; j < n - 1; ++j) {
            EXPECT_NEAR(d.at(i, j)[0], 0.1, 1e-12);
            EXPECT_NEAR(d.at(i, j)[1], -0.2, 1e-12);
        }
}

TEST(FiniteDiff, Linear) {
    const int n = 64;
    auto t1 = [](const TorusPoint& p) { return 0.05 * std::sin(2 * kPi * p.x1()); };
    auto t2 = [](const TorusPoint& p) { return 0.03 * std::cos(2 * kPi * p.x2()); };
    const double a = 0.7, b = -1.3, base = 1.2;
    const auto s1 = Section::from_function(n, [&](const TorusPoint& p) { return Direction(base + t1(p)); });
    const auto s2 = Section::from_function(n, [&](const TorusPoint& p) { return Direction(base + t2(p)); });
    const auto mix = Section::from_function(n, [&](const TorusPoint& p) { return Direction(base + a * t1(p) + b * t2(p)); });
    const DerivField d1 = finite_diff_deriv(s1), d2 = finite_diff_deriv(s2), dm = finite_diff_deriv(mix);
    const DerivField lin = sample(n, [&](const TorusPoint& p) {
        const int i = int(std::lround(p.x1() * n)) % n, j = int(std::lround(p.x2() * n)) % n;
        return Eigen::RowVector2d(a * d1.at(i, j) + b * d2.at(i, j));
    });
    EXPECT_LT(sup_norm_diff(dm, lin), 1e-12);
}

TEST(Holder, Calibration) {
    const auto lip = sample(256, [](const TorusPoint& p) { return Eigen::RowVector2d(std::cos(2 * kPi * p.x1()), 0); });
    EXPECT_GE(holder_exponent(lip).beta_hat, 0.9);

    const auto flat = holder_exponent(DerivField(32));
    EXPECT_TRUE(flat.flat);
    EXPECT_EQ(flat.beta_hat, 1.0);

    const auto lac = sample(1024, [](const TorusPoint& p) {
        double v = 0;
        for (int k = 0; k <= 8; ++k) v += std::pow(2.0, -k / 2.0) * std::cos(2 * kPi * std::ldexp(1.0, k) * p.x1());
        return Eigen::RowVector2d(v, 0);
    });
    const auto r = holder_exponent(lac);
    EXPECT_NEAR(r.beta_hat, 0.5, 0.1);
    EXPECT_EQ(r.scales.size(), 7u);
    EXPECT_DOUBLE_EQ(r.scales.front(), 0.125);

    HolderOptions few;
    few.exponents = {3, 4, 5};
    EXPECT_THROW(holder_exponent(lip, few), std::invalid_argument);
}

TEST(Holder, DeterministicForSeed) {
    const auto f = sample(64, [](const TorusPoint& p) { return Eigen::RowVector2d(std::sin(2 * kPi * p.x2()), 0); });
    EXPECT_EQ(holder_exponent(f).sup_diffs, holder_exponent(f).sup_diffs);
}

TEST(Leaf, StraightHorizontal) {
    const Section s(16, Direction(0.0));
    const auto path = integrate_leaf(s, TorusPoint(0, 0), 1.0, 1.0 / 16);
    EXPECT_EQ(path.size(), 17u);
    EXPECT_LT((path.back() - Eigen::Vector2d(1, 0)).norm(), 1e-12);
    EXPECT_LT(torus_dist(TorusPoint(path.back()), TorusPoint(0, 0)), 1e-12);
    EXPECT_THROW(integrate_leaf(s, TorusPoint(0, 0), 1.0, 0.1), std::invalid_argument);
}

TEST(Leaf, CatLeafIsStableLine) {
    const auto [es, eu] = eigen_directions(cat());
    const Section s(64, Direction::of(es));
    const auto path = integrate_leaf(s, TorusPoint(0.3, 0.3), 0.8, 1.0 / 128);
    const double slope = -(1 + std::sqrt(5.0)) / 2;
    for (const auto& p : path) EXPECT_NEAR(p.y() - 0.3, slope * (p.x() - 0.3), 1e-12);
}

TEST(Leaf, TangentToField) {
    const Section s = trig_sigma(64);
    const double step = 1.0 / 128;
    const auto path = integrate_leaf(s, TorusPoint(0.1, 0.6), 0.5, step);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const Direction seg = Direction::of(Eigen::Vector2d(path[k + 1] - path[k]));
        EXPECT_LT(proj_dist(seg, s(TorusPoint(path[k]))), 2 * step);
    }
}

TEST(Leaf, AmbiguousOrientationThrows) {
    const DirectionFieldFn wild = [](const TorusPoint& p) { return Direction(2 * kPi * 50 * p.x1()); };
    try {
        integrate_leaf(wild, TorusPoint(0.0, 0.5), 0.5, 0.01, Eigen::Vector2d(1, 0));
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "step too large");
    }
}

TEST(Holonomy, ProductFoliationIsIdentity) {
    const Section s(32, Direction(0.0));
    const Transversal tau{TorusPoint(0.2, 0.5), Direction(kPi / 2), 0.1, 21};
    const Transversal tau_p{TorusPoint(0.6, 0.5), Direction(kPi / 2), 0.1, 21};
    const auto h = holonomy(s, tau, tau_p);
    ASSERT_TRUE(h.all_crossed());
    for (std::size_t k = 0; k < h.source_params.size(); ++k) {
        EXPECT_NEAR(h.image_params[k], h.source_params[k], 1e-10);
        EXPECT_NEAR(h.derivative_estimates[k], 1.0, 1e-8);
    }
    EXPECT_NEAR(h.max_stretch, 1.0, 1e-8);
}

TEST(Holonomy, StraightFoliationClosedForm) {
    // leaves along d; tau along e, tau' along e': ds/dt = cross(d, e) / cross(d, e')
    const double th = 0.4, psi = 1.2;
    const Eigen::Vector2d d(std::cos(th), std::sin(th)), e(0, 1), ep(std::cos(psi), std::sin(psi));
    const Section s(32, Direction(th));
    const TorusPoint b(0.2, 0.5);
    const Transversal tau{b, Direction(kPi / 2), 0.05, 11};
    const Transversal tau_p{translate(b, Eigen::Vector2d(0.4 * d)), Direction(psi), 0.2, 11};
    const auto h = holonomy(s, tau, tau_p);
    ASSERT_TRUE(h.all_crossed());
    const double rate = (d.x() * e.y() - d.y() * e.x()) / (d.x() * ep.y() - d.y() * ep.x());
    for (std::size_t k = 0; k < h.source_params.size(); ++k) {
        EXPECT_NEAR(h.image_params[k], rate * h.source_params[k], 1e-9);
        EXPECT_NEAR(h.derivative_estimates[k], rate, 1e-7);
    }
}

TEST(Holonomy, NoCrossingIsMarked) {
    const Section s(32, Direction(0.0));
    const Transversal tau{TorusPoint(0.2, 0.5), Direction(kPi / 2), 0.1, 5};
    // parallel to the leaves: never crossed
    const Transversal tau_p{TorusPoint(0.6, 0.2), Direction(0.0), 0.1, 5};
    HolonomyOptions o;
    o.max_arclen = 0.5;
    const auto h = holonomy(s, tau, tau_p, o);
    EXPECT_FALSE(h.crossed[0]);
    EXPECT_TRUE(std::isnan(h.image_params[0]));
}

TEST(Holonomy, Composition) {
    const Section s = trig_sigma(128);
    const auto [es, eu] = eigen_directions(cat());
    const Direction across = Direction::of(eu);
    const TorusPoint b(0.3, 0.3);
    const Transversal t0{b, across, 0.03, 7};
    const Transversal t1{translate(b, Eigen::Vector2d(0.1 * es)), across, 0.1, 7};
    const Transversal t2{translate(b, Eigen::Vector2d(0.2 * es)), across, 0.1, 7};
    HolonomyOptions o;
    o.step = 1.0 / 512;
    const auto direct = holonomy(s, t0, t2, o);
    const auto first = holonomy(s, t0, t1, o);
    ASSERT_TRUE(direct.all_crossed());
    ASSERT_TRUE(first.all_crossed());
    for (std::size_t k = 0; k < first.image_params.size(); ++k) {
        Transversal mid = t1;
        mid.base = t1.at(first.image_params[k]);
        mid.half_length = 1e-3;
        mid.samples = 3;
        const auto second = holonomy(s, mid, t2, o);
        ASSERT_TRUE(second.crossed[1]);
        EXPECT_NEAR(second.image_params[1], direct.image_params[k], 1e-6);
    }
}

TEST(RegularityCsv, Schemas) {
    std::ostringstream a, b;
    write_holder_csv(a, HolderReport{0.5, 1.0, false, {0.125}, {0.25}});
    EXPECT_EQ(a.str(), "# schema=holder version=1\nscale,sup_diff\n0.125,0.25\n");
    HolonomyResult h;
    h.source_params = {0.0};
    h.image_params = {0.5};
    h.derivative_estimates = {1.0};
    h.crossed = {true};
    write_holonomy_csv(b, h);
    EXPECT_EQ(b.str(), "# schema=holonomy version=1\nparam,image_param,deriv\n0,0.5,1\n");
}
