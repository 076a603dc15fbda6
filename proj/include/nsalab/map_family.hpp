#pragma once

// Declarative torus diffeomorphisms and sequences of them.

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nsalab/torus.hpp"

namespace nsalab {

/// x -> M x mod 1. M must be an integer hyperbolic matrix of determinant +-1 to
/// act on the torus; non-toral matrices are accepted for tangent-level work
/// (cone and fiber computations) and rejected by validate().
struct LinearSpec {
    Eigen::Matrix2d matrix;
};

/// One term e_c * sin(2 pi (k1 x1 + k2 x2)) of a trigonometric perturbation.
struct TrigMode {
    int k1 = 0;
    int k2 = 0;
    int component = 0;
};

/// x -> A x + epsilon * sum_modes e_c sin(2 pi k.x) mod 1.
struct TrigSpec {
    Eigen::Matrix2d base;
    double epsilon = 0.0;
    std::vector<TrigMode> modes;
};

/// x -> phi(A x) where phi stretches along e_u inside a small box around
/// `center`, written in the (e_s, e_u) frame relative to the center as
///   phi(s, u) = (s, u (1 + stretch * rho(s / half_width) * rho(u / half_height)))
/// with rho the C^2 plateau bump of plateau_bump().
struct BumpSpec {
    Eigen::Matrix2d base;
    Eigen::Vector2d center;  // representative in [0,1)^2
    Eigen::Vector2d e_s;
    Eigen::Vector2d e_u;
    double half_width = 0.0;
    double half_height = 0.0;
    double stretch = 0.0;
};

using DiffeoSpec = std::variant<LinearSpec, TrigSpec, BumpSpec>;

/// Value and first two derivatives of the C^2 plateau bump: 1 on [-1/2, 1/2],
/// supported in [-1, 1], quintic smoothstep on the shoulders.
struct BumpValue {
    double value;
    double d1;
    double d2;
};
BumpValue plateau_bump(double t);

/// Throws std::invalid_argument if the spec cannot act as a torus diffeomorphism.
void validate(const DiffeoSpec& f);
/// True for integer matrices with |det| = 1 and |trace| > 2.
bool is_hyperbolic_toral(const Eigen::Matrix2d& m);
/// The linear part (homotopy class) of the spec.
const Eigen::Matrix2d& base_matrix(const DiffeoSpec& f);

TorusPoint apply(const DiffeoSpec& f, const TorusPoint& p);
/// Throws InverseDivergedError when the numerical inverse fails.
TorusPoint inverse_apply(const DiffeoSpec& f, const TorusPoint& p);

Eigen::Matrix2d tangent(const DiffeoSpec& f, const TorusPoint& p);
/// D_p f^{-1}; solves for the preimage of p first.
Eigen::Matrix2d inverse_tangent(const DiffeoSpec& f, const TorusPoint& p);
/// D_{f(x)} f^{-1} = (D_x f)^{-1} when the preimage x is already known.
Eigen::Matrix2d inverse_tangent_at_preimage(const DiffeoSpec& f, const TorusPoint& preimage);

/// Second derivatives: result[j](i, k) = d^2 f_i / dx_j dx_k.
std::array<Eigen::Matrix2d, 2> second_derivative(const DiffeoSpec& f, const TorusPoint& p);

/// Extra sample points concentrated where the spec departs from its linear
/// part; empty unless the perturbation has small compact support.
std::vector<TorusPoint> local_samples(const DiffeoSpec& f, int per_axis = 17);

double op_norm(const Eigen::Matrix2d& m);
/// Frobenius norm of a 2x2x2 derivative tensor.
double tensor_norm(const std::array<Eigen::Matrix2d, 2>& t);

enum class SequenceMode { constant, periodic, random_choice, explicit_list, generated };

/// A deterministic sequence (f_n), n >= 1, of torus diffeomorphisms.
class MapFamily {
public:
    using Generator = std::function<DiffeoSpec(std::size_t)>;

    static MapFamily constant(DiffeoSpec f, int smoothness = 3);
    static MapFamily periodic(std::vector<DiffeoSpec> members, int smoothness = 3);
    /// f_n drawn from `members` by a hash of (seed, n); random access in n.
    static MapFamily random_choice(std::vector<DiffeoSpec> members, std::uint64_t seed, int smoothness = 3);
    /// f_1..f_k from the list; the last member repeats for n > k.
    static MapFamily explicit_list(std::vector<DiffeoSpec> members, int smoothness = 3);
    static MapFamily generated(Generator gen, int smoothness = 2);

    /// f_n for n <= depth, `tail` afterwards.
    MapFamily truncated(std::size_t depth, DiffeoSpec tail) const;

    /// Precondition n >= 1.
    DiffeoSpec operator[](std::size_t n) const;

    SequenceMode mode() const { return mode_; }
    /// Period of the sequence when known (1 for constant families).
    std::optional<std::size_t> period() const;
    /// Declared smoothness class C^k.
    int smoothness() const { return smoothness_; }

private:
    MapFamily() = default;

    SequenceMode mode_ = SequenceMode::constant;
    std::shared_ptr<const std::vector<DiffeoSpec>> members_;
    Generator gen_;
    std::uint64_t seed_ = 0;
    int smoothness_ = 3;
};

struct NormRow {
    std::size_t n;
    double df;
    double df_inv;
    double d2f;
    double d2f_inv;
};

/// Sampled sup norms of Df, Df^{-1}, D^2 f, D^2 f^{-1} for n = 1..n_max over
/// the uniform grid (plus local_samples of each member). Requires grid >= 16.
std::vector<NormRow> norm_report(const MapFamily& fam, std::size_t n_max, int grid);

}  // namespace nsalab
