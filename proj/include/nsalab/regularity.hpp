#pragma once

// Regularity of computed direction fields: derivative estimates, Hoelder
// fits, leaf integration and holonomy between transversals.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "nsalab/section.hpp"

namespace nsalab {

/// Any pointwise direction field on the torus.
using DirectionFieldFn = std::function<Direction(const TorusPoint&)>;
using CovectorFieldFn = std::function<Eigen::RowVector2d(const TorusPoint&)>;

/// Centered differences with wrap-around, step = grid spacing. Angle
/// differences are taken in the lift nearest zero.
DerivField finite_diff_deriv(const Section& sigma);

struct HolderReport {
    double beta_hat = 1.0;
    double r_squared = 1.0;
    bool flat = false;
    std::vector<double> scales;
    std::vector<double> sup_diffs;
};

struct HolderOptions {
    std::vector<int> exponents{3, 4, 5, 6, 7, 8, 9};  // scales 2^-e
    int pairs = 200;
    std::uint64_t seed = 0x5eed;
};

/// For each scale s, sup over random pairs at distance s of ||H(x) - H(y)||;
/// beta_hat is the least-squares slope of log sup against log s, clamped to
/// [0, 1]. Needs at least 4 scales.
HolderReport holder_exponent(const CovectorFieldFn& field, const HolderOptions& opts = {});
HolderReport holder_exponent(const DerivField& field, const HolderOptions& opts = {});

/// Fixed-step RK4 along the unit field with nearest-angle orientation.
/// Returns the lifted polyline (first point = lift of x0). `heading` picks
/// the initial orientation; zero means the field's own representative.
/// Throws "step too large" when consecutive directions are ambiguous.
std::vector<Eigen::Vector2d> integrate_leaf(const DirectionFieldFn& field, const TorusPoint& x0, double arclen,
                                            double step, Eigen::Vector2d heading = Eigen::Vector2d::Zero());
/// Section version; requires step <= grid spacing.
std::vector<Eigen::Vector2d> integrate_leaf(const Section& sigma, const TorusPoint& x0, double arclen, double step,
                                            Eigen::Vector2d heading = Eigen::Vector2d::Zero());

struct Transversal {
    TorusPoint base;
    Direction dir;
    double half_length = 0.05;
    int samples = 65;

    void check() const;
    /// Sample parameters in [-half_length, half_length], equally spaced.
    std::vector<double> params() const;
    TorusPoint at(double t) const;
};

struct HolonomyResult {
    std::vector<double> source_params;
    std::vector<double> image_params;          // NaN where the leaf never crossed
    std::vector<double> derivative_estimates;  // forward differences; last one backward
    std::vector<bool> crossed;
    double max_stretch = 0.0;

    bool all_crossed() const;
};

struct HolonomyOptions {
    double max_arclen = 1.0;
    double step = 1e-3;
};

/// Slides every sample of tau along its leaf to the first crossing of the
/// line through tau_p (sign change + bisection to 1e-10). A crossing outside
/// tau_p's half-length, or none within max_arclen, is a "no crossing".
HolonomyResult holonomy(const DirectionFieldFn& field, const Transversal& tau, const Transversal& tau_p,
                        const HolonomyOptions& opts = {});
HolonomyResult holonomy(const Section& sigma, const Transversal& tau, const Transversal& tau_p,
                        const HolonomyOptions& opts = {});

void write_holder_csv(std::ostream& os, const HolderReport& r);
void write_holonomy_csv(std::ostream& os, const HolonomyResult& r);

}  // namespace nsalab
