#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "nsalab/trace_map.hpp"

using namespace nsalab;

TEST(Chebyshev, InitialValuesAndRecurrence) {
    EXPECT_EQ(chebyshev_u(-1, 0.3), 0.0);
    EXPECT_EQ(chebyshev_u(0, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(chebyshev_u(2, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(chebyshev_u(3, 1.0), 4.0);
    for (int k = 0; k < 12; ++k) EXPECT_DOUBLE_EQ(chebyshev_u(k, 1.0), k + 1.0);
    // U_3(y) = 8y^3 - 4y
    for (double y : {-0.7, 0.2, 1.3}) EXPECT_NEAR(chebyshev_u(3, y), 8 * y * y * y - 4 * y, 1e-14);
    // U_k(cos t) = sin((k+1)t) / sin t
    const double t = 0.37;
    for (int k = 1; k < 10; ++k) EXPECT_NEAR(chebyshev_u(k, std::cos(t)), std::sin((k + 1) * t) / std::sin(t), 1e-12);
    EXPECT_THROW(chebyshev_u(-2, 0.0), std::invalid_argument);
}

TEST(TraceMap, FirstMapAndFixedPoint) {
    EXPECT_EQ(trace_map(1, TracePoint(1, 1, 1)), TracePoint(1, 1, 1));
    const TracePoint p(0.3, -1.2, 2.5);
    EXPECT_TRUE(trace_map(1, p).isApprox(TracePoint(2 * 0.3 * -1.2 - 2.5, 0.3, -1.2)));
    EXPECT_THROW(trace_map(0, p), std::invalid_argument);
}

TEST(TraceMap, FrickeVogtValues) {
    EXPECT_EQ(fricke_vogt(TracePoint(1, 1, 1)), 0.0);
    EXPECT_DOUBLE_EQ(fricke_vogt(TracePoint(2, 0, 0)), 3.0);
    EXPECT_DOUBLE_EQ(fricke_vogt(spectrum_line(1, 0)), 0.25);
    EXPECT_TRUE(spectrum_line(0, 2).isApprox(TracePoint(1, 1, 1)));
    EXPECT_TRUE(spectrum_line(1, 0).isApprox(TracePoint(-0.5, 0, 1)));
    EXPECT_TRUE(spectrum_line(4, 4).isApprox(TracePoint(0, 2, 1)));
    for (double lam : {0.0, 0.5, 3.0})
        for (double e : {-2.0, 0.3, 4.0}) EXPECT_NEAR(fricke_vogt(spectrum_line(lam, e)), lam * lam / 4, 1e-12);
}

TEST(TraceMap, FrickeVogtInvariance) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int n = 0; n < 200; ++n) {
        const TracePoint p(u(rng), u(rng), u(rng));
        const double i0 = fricke_vogt(p);
        const WideTracePoint w = p.cast<WideReal>();
        for (int k = 1; k <= 10; ++k) {
            const double drift = static_cast<double>(abs(fricke_vogt(trace_map(k, w)) - WideReal(i0)));
            EXPECT_LE(drift, 1e-10 * (1 + std::abs(i0))) << "k = " << k;
        }
    }
}

TEST(TraceMap, DoublePathLosesDigitsAtLargeK) {
    // y = 3: U_10 ~ 3e7, so the double-precision invariant is only good to ~eps * U_10^2
    const TracePoint p(2.5, 3.0, -1.5);
    const double i0 = fricke_vogt(p);
    const double wide = static_cast<double>(fricke_vogt(trace_map(10, WideTracePoint(p.cast<WideReal>()))));
    EXPECT_NEAR(wide, i0, 1e-10 * (1 + std::abs(i0)));
    EXPECT_TRUE(trace_map(10, p).isApprox(trace_map(10, WideTracePoint(p.cast<WideReal>())).cast<double>(), 1e-14));
}

TEST(Orbit, Verdicts) {
    EXPECT_FALSE(orbit_bounded(0, {1}, 1.0).escaped);
    EXPECT_FALSE(orbit_bounded(0, {1, 2, 3}, 1.0).escaped);
    const auto v = orbit_bounded(0, {1}, 3.0);
    EXPECT_TRUE(v.escaped);
    EXPECT_LE(v.step, 20u);
    EXPECT_FALSE(orbit_bounded(0, {2}, 2.0).escaped);
    EXPECT_THROW(orbit_bounded(0, {}, 1.0), std::invalid_argument);
    EXPECT_THROW(orbit_bounded(0, {0}, 1.0), std::invalid_argument);
}

TEST(Orbit, MoreIterationsNeverEnlargeTheBoundedSet) {
    for (double e = -2.5; e <= 2.5; e += 0.0173) {
        const bool long_run = !orbit_bounded(2.0, {1}, e, {10, 400}).escaped;
        const bool short_run = !orbit_bounded(2.0, {1}, e, {10, 40}).escaped;
        EXPECT_TRUE(!long_run || short_run);
    }
}

TEST(SpectrumScan, FreeSpectrum) {
    ScanOptions so;
    so.initial_grid = 128;
    so.refine_depth = 10;
    so.orbit.max_iters = 2000;
    const auto a = spectrum_scan(0, {1}, -3, 3, so);
    ASSERT_FALSE(a.intervals.empty());
    EXPECT_NEAR(a.intervals.front().lo, -2, 2 * a.resolution);
    EXPECT_NEAR(a.intervals.back().hi, 2, 2 * a.resolution);
    EXPECT_NEAR(a.total_length(), 4, 4 * a.resolution);
    // symmetric under E -> -E within a cell
    EXPECT_NEAR(a.intervals.front().lo, -a.intervals.back().hi, a.resolution);
}

TEST(SpectrumScan, EmptyWindow) {
    EXPECT_TRUE(spectrum_scan(0, {1}, 1, 1).intervals.empty());
    EXPECT_TRUE(spectrum_scan(0, {1}, 2, 1).intervals.empty());
}

TEST(SpectrumScan, LengthShrinksWithRefinementForCantorSpectrum) {
    std::vector<int> golden(12, 1);
    double prev = 1e300;
    for (int depth : {0, 3, 6, 9}) {
        ScanOptions so;
        so.initial_grid = 512;
        so.refine_depth = depth;
        so.orbit.max_iters = 2000;
        const double len = spectrum_scan(2.0, golden, -2, 4, so).total_length();
        EXPECT_LE(len, prev);
        prev = len;
    }
    EXPECT_LT(prev, 0.5);
}

namespace {

std::vector<Interval> cantor(int depth) {
    std::vector<Interval> s{{0.0, 1.0}};
    for (int d = 0; d < depth; ++d) {
        std::vector<Interval> next;
        for (const auto& iv : s) {
            const double w = (iv.hi - iv.lo) / 3;
            next.push_back({iv.lo, iv.lo + w});
            next.push_back({iv.hi - w, iv.hi});
        }
        s = next;
    }
    return s;
}

}  // namespace

TEST(BoxDimension, Calibration) {
    std::vector<double> scales;
    for (int m = 1; m <= 8; ++m) scales.push_back(std::pow(3.0, -m));
    const auto c = box_dimension(cantor(9), 0.0, std::pow(3.0, -9), scales);
    EXPECT_NEAR(c.dim_hat, std::log(2.0) / std::log(3.0), 0.02);
    EXPECT_EQ(c.box_counts[0], 2u);
    EXPECT_EQ(c.box_counts[7], 256u);

    std::vector<double> dy;
    for (int m = 1; m <= 8; ++m) dy.push_back(std::ldexp(1.0, -m));
    const auto line = box_dimension({{-2.0, 2.0}}, -2.0, 1e-6, dy);
    EXPECT_NEAR(line.dim_hat, 1.0, 0.05);

    const auto empty = box_dimension({}, 0.0, 1e-6, dy);
    EXPECT_TRUE(empty.empty);
    EXPECT_EQ(empty.dim_hat, 0.0);
}

TEST(BoxDimension, RejectsScalesBelowResolution) {
    try {
        box_dimension({{0, 1}}, 0, 0.01, {0.5, 0.25, 0.1, 0.001});
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("finest admissible scale is 0.01"), std::string::npos);
    }
    EXPECT_THROW(box_dimension({{0, 1}}, 0, 0.01, {0.5, 0.25, 0.1}), std::invalid_argument);
}

TEST(ContinuedFraction, Expansions) {
    const auto g = continued_fraction((std::sqrt(5.0) - 1) / 2, 20);
    EXPECT_EQ(g, std::vector<int>(20, 1));
    const auto r = continued_fraction(std::sqrt(2.0) / 2, 15);
    EXPECT_EQ(r[0], 1);
    for (std::size_t k = 1; k < r.size(); ++k) EXPECT_EQ(r[k], 2);
    EXPECT_THROW(continued_fraction(0.25, 3), std::domain_error);
    EXPECT_EQ(continued_fraction(0.25, 1), std::vector<int>{4});
    EXPECT_THROW(continued_fraction(1.5, 3), std::invalid_argument);
}
