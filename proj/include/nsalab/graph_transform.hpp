#pragma once

// Skew-product machinery over T^2 x RP^1. For a map f the fiber map is
//   h(y, z) = D_y f^{-1} acting on the line z,
// the base map is g = f^{-1}, and the graph transform on sections reads
//   (Gamma sigma)(x) = h(f x, sigma(f x)).
// The derivative transform Psi^sigma acts on covector fields H by
//   (Psi H)(x) = [d_y h + d_z h * H(y)] * D_x f,   y = f x,
// evaluated at (y, sigma(y)).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsalab/cone_verify.hpp"
#include "nsalab/map_family.hpp"
#include "nsalab/section.hpp"

namespace nsalab {

/// h(x, z): image of the line z under D_x f^{-1}.
Direction fiber_map(const DiffeoSpec& f, const TorusPoint& x, Direction z);

/// Value and first derivatives of h at (f(pre), z), computed from the known
/// preimage `pre` so no inverse solve is needed.
struct FiberJet {
    Direction value;
    double dz = 0.0;           // d_z h, signed
    Eigen::RowVector2d dy;     // d_y h
};
FiberJet fiber_jet(const DiffeoSpec& f, const TorusPoint& pre, Direction z);

/// One application of Gamma. With a band, throws FiberInvarianceError(index)
/// if the image leaves it.
Section graph_transform(const DiffeoSpec& f, const Section& sigma, const Band* band = nullptr,
                        std::size_t index = 0);

/// Gamma_1 o ... o Gamma_depth (sigma0): Gamma_depth is applied first.
Section compose_prefix(const MapFamily& fam, std::size_t depth, const Section& sigma0, const Band* band = nullptr);

/// Stable direction at x from the nested cone pull-back: push x forward depth
/// steps, then pull `seed` back through D f_depth^{-1}, ..., D f_1^{-1}.
Direction cone_pullback(const MapFamily& fam, std::size_t depth, const TorusPoint& x, Direction seed);
Direction cone_pullback(std::span<const DiffeoSpec> prefix, const TorusPoint& x, Direction seed);
/// f_1..f_depth materialized once for repeated pull-backs.
std::vector<DiffeoSpec> family_prefix(const MapFamily& fam, std::size_t depth);

DerivField derivative_transform(const DiffeoSpec& f, const Section& sigma, const DerivField& h);

/// sup_x |d_z h(f x, sigma(f x))| * ||D_x f||: the Lipschitz constant of
/// derivative_transform in H for this sigma.
double derivative_lipschitz_bound(const DiffeoSpec& f, const Section& sigma);

struct ContractionDiagnostics {
    double lambda_hat = 0.0;   // sup |d_z h| along the iterated graphs
    double kappa_hat = 0.0;    // sup ||D f|| = sup ||D g^{-1}||
    double delta_hat = 0.0;    // sup lambda * kappa along the iterated graphs
    std::optional<double> beta;
    std::optional<double> delta_beta_hat;  // sup lambda * kappa^(1 + beta)
    double lambda_band = 0.0;  // sup |d_z h| over the whole band (sampled)
    double delta_band = 0.0;   // sup lambda * kappa over the whole band (sampled)
    double b_hat = 0.0;        // max(sup ||D h||, kappa), sampled
    double m_hat = 0.0;        // sup ||D^2 h||, sampled by differences of D h
    double slope_bound = 0.0;  // B^2 / (1 - Delta) when Delta < 1
    std::size_t iterations = 0;  // depth of the returned composition
    double residual = 0.0;       // sup proj_dist between the last two depths
    double deriv_residual = 0.0; // sup norm between the last two derivative fields
    std::vector<std::string> warnings;
};

struct SectionSolution {
    Section sigma;
    DerivField deriv;
    ContractionDiagnostics diagnostics;
};

struct SolveOptions {
    double tol = 1e-10;
    std::size_t max_depth = 200;
    std::optional<double> beta;
};

/// Iterates the paired transform (Gamma, Psi) from (band center, 0) at
/// increasing depth until both the section and the derivative field move by
/// less than tol. Constant and periodic families reuse the previous depth;
/// other families are recomputed from scratch on a geometric depth schedule.
/// Throws ConvergenceError when max_depth is reached.
SectionSolution solve_section(const MapFamily& fam, const Band& band, const SolveOptions& opts = {});

/// Band around the stable cone centers: radius = cone half-aperture + pad.
Band default_band(const ConeField& cones, int grid = 128, double pad = 0.05);

}  // namespace nsalab
