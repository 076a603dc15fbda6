#pragma once

// Geometry of the flat 2-torus and of the projective circle of tangent lines.
// The tangent bundle of T^2 is trivial, so one global angle chart serves as
// the projective coordinate over every base point.

#include <Eigen/Core>
#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "nsalab/errors.hpp"

namespace nsalab {

template <typename Scalar>
inline Scalar wrap_unit(Scalar t) {
    Scalar r = t - std::floor(t);
    // floor can leave r == 1 for tiny negative t
    return r >= Scalar(1) ? Scalar(0) : r;
}

/// Representative of t mod 1 in [-1/2, 1/2).
template <typename Scalar>
inline Scalar wrap_centered(Scalar t) {
    return t - std::floor(t + Scalar(0.5));
}

/// Representative of t mod pi in [0, pi).
template <typename Scalar>
inline Scalar wrap_angle(Scalar t) {
    constexpr Scalar pi = std::numbers::pi_v<Scalar>;
    Scalar r = t - pi * std::floor(t / pi);
    return r >= pi ? Scalar(0) : r;
}

/// Representative of t mod pi in [-pi/2, pi/2).
template <typename Scalar>
inline Scalar wrap_angle_centered(Scalar t) {
    constexpr Scalar pi = std::numbers::pi_v<Scalar>;
    return t - pi * std::floor(t / pi + Scalar(0.5));
}

template <typename Scalar>
class BasicTorusPoint {
public:
    using Vector = Eigen::Matrix<Scalar, 2, 1>;

    BasicTorusPoint() : x_(Vector::Zero()) {}
    BasicTorusPoint(Scalar x1, Scalar x2) : x_(wrap_unit(x1), wrap_unit(x2)) {}
    explicit BasicTorusPoint(const Vector& lift) : BasicTorusPoint(lift.x(), lift.y()) {}

    Scalar x1() const { return x_.x(); }
    Scalar x2() const { return x_.y(); }
    /// Representative in [0,1)^2.
    const Vector& coords() const { return x_; }

    friend bool operator==(const BasicTorusPoint&, const BasicTorusPoint&) = default;

private:
    Vector x_;
};

/// A line through the origin of R^2, stored as an angle mod pi.
template <typename Scalar>
class BasicDirection {
public:
    using Vector = Eigen::Matrix<Scalar, 2, 1>;

    BasicDirection() = default;
    explicit BasicDirection(Scalar theta) : theta_(wrap_angle(theta)) {}

    static BasicDirection of(const Vector& v) { return BasicDirection(std::atan2(v.y(), v.x())); }

    Scalar theta() const { return theta_; }
    Vector unit() const { return Vector(std::cos(theta_), std::sin(theta_)); }

private:
    Scalar theta_ = 0;
};

using TorusPoint = BasicTorusPoint<double>;
using Direction = BasicDirection<double>;
using TangentVector = Eigen::Vector2d;

/// Displacement q - p taken through the shortest wraparound.
template <typename Scalar>
inline Eigen::Matrix<Scalar, 2, 1> torus_delta(const BasicTorusPoint<Scalar>& p, const BasicTorusPoint<Scalar>& q) {
    return {wrap_centered(q.x1() - p.x1()), wrap_centered(q.x2() - p.x2())};
}

template <typename Scalar>
inline Scalar torus_dist(const BasicTorusPoint<Scalar>& p, const BasicTorusPoint<Scalar>& q) {
    return torus_delta(p, q).norm();
}

template <typename Scalar>
inline BasicTorusPoint<Scalar> translate(const BasicTorusPoint<Scalar>& p, const Eigen::Matrix<Scalar, 2, 1>& v) {
    return BasicTorusPoint<Scalar>(p.x1() + v.x(), p.x2() + v.y());
}

/// Distance on RP^1, at most pi/2.
template <typename Scalar>
inline Scalar proj_dist(const BasicDirection<Scalar>& a, const BasicDirection<Scalar>& b) {
    return std::abs(wrap_angle_centered(a.theta() - b.theta()));
}

/// Signed angle b - a reduced to [-pi/2, pi/2).
template <typename Scalar>
inline Scalar proj_diff(const BasicDirection<Scalar>& a, const BasicDirection<Scalar>& b) {
    return wrap_angle_centered(b.theta() - a.theta());
}

/// Induced action of an invertible linear map on lines.
template <typename Derived>
inline BasicDirection<typename Derived::Scalar> projective_action(const Eigen::MatrixBase<Derived>& m,
                                                                 const BasicDirection<typename Derived::Scalar>& d) {
    using Scalar = typename Derived::Scalar;
    const Scalar det = m.determinant();
    if (!(std::abs(det) > Scalar(0)) || !std::isfinite(det)) throw SingularMatrixError();
    const Eigen::Matrix<Scalar, 2, 1> w = m * d.unit();
    return BasicDirection<Scalar>::of(w);
}

}  // namespace nsalab
