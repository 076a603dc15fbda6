#pragma once

// Numerical verification of a common cone condition. In the frame
// (H_x, V_x) a vector is v = v1 h + v2 v; the stable cone is |v1| <= mu |v2|
// (around V_x), the unstable cone |v2| <= mu |v1| (around H_x).

#include <cstddef>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include "nsalab/map_family.hpp"
#include "nsalab/section.hpp"

namespace nsalab {

/// A continuous line field that is either constant or grid sampled.
class DirectionField {
public:
    DirectionField(Direction constant) : field_(constant) {}  // NOLINT: implicit by design of presets
    explicit DirectionField(std::shared_ptr<const Section> sampled) : field_(std::move(sampled)) {}

    Direction operator()(const TorusPoint& p) const;
    bool is_constant() const { return std::holds_alternative<Direction>(field_); }

private:
    std::variant<Direction, std::shared_ptr<const Section>> field_;
};

struct ConeField {
    DirectionField h_dir;
    DirectionField v_dir;
    double mu = 0.0;

    /// Throws std::invalid_argument unless 0 < mu < 1 and the centers are
    /// transversal on a sample grid.
    void check(int grid = 32) const;
};

/// Cones centered on the eigendirections of a hyperbolic matrix: H = unstable,
/// V = stable.
ConeField eigen_cones(const Eigen::Matrix2d& a, double mu);

/// Unit eigenvectors (stable, unstable) of a real hyperbolic 2x2 matrix.
std::pair<Eigen::Vector2d, Eigen::Vector2d> eigen_directions(const Eigen::Matrix2d& a);

struct ConeReport {
    bool invariant_s = false;
    bool invariant_u = false;
    /// Smallest angle between an image boundary ray and the target cone
    /// boundary; 0 when some image leaves the cone.
    double angle_margin = 0.0;
    double eta_u = 0.0;
    double eta_s = 0.0;
    std::vector<TorusPoint> worst_points;

    static constexpr double kMarginThreshold = 1e-6;
    bool passed() const {
        return invariant_s && invariant_u && angle_margin > kMarginThreshold && std::min(eta_u, eta_s) > 1.0;
    }
};

/// Invariance part only; eta fields are left at 0.
ConeReport check_invariance(const DiffeoSpec& f, const ConeField& cones, int grid = 64);

/// (eta_u, eta_s): minimal stretch of Df on K^u and of Df^{-1} on K^s over the
/// grid, sampling `directions` rays per cone (both boundaries and the center).
std::pair<double, double> expansion_constants(const DiffeoSpec& f, const ConeField& cones, int grid = 64,
                                              int directions = 17);

/// Both checks for a single map.
ConeReport check_cones(const DiffeoSpec& f, const ConeField& cones, int grid = 64);

/// Worst case of check_cones over f_1..f_{n_max}.
ConeReport common_condition(const MapFamily& fam, const ConeField& cones, std::size_t n_max, int grid = 64);

}  // namespace nsalab
