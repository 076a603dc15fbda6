#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nsalab {

/// Base class for failures of a numerical procedure (as opposed to bad input).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
public:
    SingularMatrixError() : NumericalError("non-invertible differential") {}
};

class InverseDivergedError : public NumericalError {
public:
    InverseDivergedError() : NumericalError("inverse solve diverged") {}
};

/// A graph transform pushed a section out of its band.
class FiberInvarianceError : public NumericalError {
public:
    explicit FiberInvarianceError(std::size_t index = 0)
        : NumericalError(index == 0 ? std::string("fiber invariance violated")
                                    : "fiber invariance violated at map index " + std::to_string(index)),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double best_residual)
        : NumericalError(what), best_residual_(best_residual) {}

    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

}  // namespace nsalab
