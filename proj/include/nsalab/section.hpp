#pragma once

// Grid-sampled fields over the torus: direction fields (sections of the
// projectivized tangent bundle) and covector fields (candidate derivatives).
// Sample (i, j) sits at the lattice point (i/N, j/N).

#include <Eigen/Core>
#include <iosfwd>
#include <optional>

#include "nsalab/torus.hpp"

namespace nsalab {

class Section {
public:
    Section() = default;
    Section(int resolution, Direction fill);

    template <typename F>
    static Section from_function(int resolution, F&& fn) {
        Section s(resolution, Direction());
        for (int i = 0; i < resolution; ++i)
            for (int j = 0; j < resolution; ++j) s.set(i, j, fn(s.point(i, j)));
        return s;
    }

    int resolution() const { return int(theta_.rows()); }
    double spacing() const { return 1.0 / resolution(); }
    TorusPoint point(int i, int j) const { return TorusPoint(i * spacing(), j * spacing()); }

    Direction at(int i, int j) const { return Direction(theta_(i, j)); }
    void set(int i, int j, Direction d) { theta_(i, j) = d.theta(); }

    /// Bilinear interpolation of the angle, with the four corner samples
    /// unwrapped against the first one. Requires adjacent samples to be less
    /// than pi/2 apart.
    Direction operator()(const TorusPoint& p) const;

    /// Raw angles in [0, pi), indexed (i, j).
    const Eigen::ArrayXXd& angles() const { return theta_; }

    /// Largest proj_dist between grid neighbours.
    double max_neighbour_jump() const;

private:
    Eigen::ArrayXXd theta_;
};

/// sup over grid samples of proj_dist; both sections must share a resolution.
double sup_proj_dist(const Section& a, const Section& b);

/// A covector field H(x) in L(R^2, R), stored as components (h1, h2).
class DerivField {
public:
    DerivField() = default;
    explicit DerivField(int resolution);

    int resolution() const { return int(h1_.rows()); }
    double spacing() const { return 1.0 / resolution(); }

    Eigen::RowVector2d at(int i, int j) const { return {h1_(i, j), h2_(i, j)}; }
    void set(int i, int j, const Eigen::RowVector2d& h) {
        h1_(i, j) = h.x();
        h2_(i, j) = h.y();
    }
    Eigen::RowVector2d operator()(const TorusPoint& p) const;

    const Eigen::ArrayXXd& h1() const { return h1_; }
    const Eigen::ArrayXXd& h2() const { return h2_; }
    bool all_finite() const { return h1_.allFinite() && h2_.allFinite(); }

private:
    Eigen::ArrayXXd h1_;
    Eigen::ArrayXXd h2_;
};

double sup_norm(const DerivField& h);
double sup_norm_diff(const DerivField& a, const DerivField& b);

/// Tube of half-width `radius` (radians) around the graph of `center`.
struct Band {
    Section center;
    double radius = 0.0;

    /// Throws std::invalid_argument unless 0 < radius < pi/4.
    void check() const;
    bool contains(const TorusPoint& p, Direction z, double tol = 1e-12) const;
    bool contains(const Section& s, double tol = 1e-12) const;
};

/// CSV: "# schema=section version=1", header, then rows i,j,x1,x2,theta[,h1,h2]
/// in row-major (i outer) order with 17 significant digits.
void write_section_csv(std::ostream& os, const Section& s, const DerivField* h = nullptr);
/// Reads what write_section_csv wrote; fills `h` when the h1,h2 columns exist.
Section read_section_csv(std::istream& is, std::optional<DerivField>* h = nullptr);

}  // namespace nsalab
