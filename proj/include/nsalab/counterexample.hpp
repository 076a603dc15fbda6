#pragma once

// A family f_n = phi_n o A whose members all satisfy one cone condition but
// whose C^2 norms blow up, and the holonomy experiment showing the resulting
// stable foliation is not C^1.
//
// phi_n stretches along e_u inside a box around p_n = A^n p (on the stable
// line through 0); the box shrinks like eta^{-n} so that it misses the
// rectangle R'_n around p'_n = A^n p'.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "nsalab/cone_verify.hpp"
#include "nsalab/map_family.hpp"

namespace nsalab {

struct CounterexampleParams {
    Eigen::Matrix2d A = (Eigen::Matrix2d() << 2, 1, 1, 1).finished();
    // on the stable line through 0; defaults are the stable parameters +-0.1
    std::optional<TorusPoint> p;
    std::optional<TorusPoint> p_prime;
    double b = 0.1;            // expansion margin on R_n
    double theta = 0.19739555984988078;  // atan(0.2): cone aperture angle
    double eps = 0.6;          // C^1 budget: ||phi_n - id||_C1 < eps / 2
    double base_ratio = 0.01;  // base of R_n, R'_n relative to |p_n - p'_n|
    double height_pad = 0.1;   // R'_n height is eta^{-n} (|p - p'| + height_pad)
    double support_width = 0.9;   // bump half-width along e_s, relative to |p_n - p'_n|
    double support_height = 1.0;  // bump half-height along e_u, relative to |p_n - p'_n|

    void check() const;
    double mu() const;
};

/// Everything derived from the parameters.
struct CounterexampleGeometry {
    Eigen::Vector2d e_s, e_u;
    double lambda_s = 0.0;  // signed stable eigenvalue
    double eta = 0.0;       // |unstable eigenvalue|
    double s_p = 0.0, s_pp = 0.0;  // stable parameters of p, p'
    double stretch = 0.0;          // bump amplitude giving (1+b) on the whole unstable cone

    TorusPoint p_n(std::size_t n) const;
    TorusPoint p_prime_n(std::size_t n) const;
    double separation(std::size_t n) const;  // |p_n - p'_n|
};

CounterexampleGeometry geometry(const CounterexampleParams& params);

/// The spec of f_n alone.
BumpSpec member(const CounterexampleParams& params, std::size_t n);

/// Throws "rectangle geometry violated" if the bump support reaches R'_n.
MapFamily build_family(const CounterexampleParams& params);

struct PropertyReport {
    std::size_t n = 0;
    double stable_line_displacement = 0.0;
    double c1_distance = 0.0;
    double min_expansion = 0.0;       // min ||D phi v|| / ||v|| over K^u on the plateau
    double rprime_deviation = 0.0;    // max |phi - id| + ||D phi - I|| on R'_n samples
    ConeReport cones;

    bool stable_line_ok = false;
    bool c1_ok = false;
    bool expansion_ok = false;
    bool expansion_degenerate = false;  // b = 0: the bullet only says >= 1
    bool rprime_ok = false;
    bool cones_ok = false;

    bool passed() const { return stable_line_ok && c1_ok && expansion_ok && rprime_ok && cones_ok; }
};

PropertyReport verify_properties(const CounterexampleParams& params, std::size_t n, int grid = 64);

struct BlowupRow {
    std::size_t N = 0;
    double seg_len = 0.0;
    double img_len = 0.0;
    double ratio = 0.0;
    bool valid = false;
};

struct BlowupTable {
    std::vector<BlowupRow> rows;
};

struct BlowupOptions {
    double transversal_half_length = 0.05;
    double step = 5e-4;
    std::size_t extra_depth = 0;  // pull-back depth beyond N (the tail is linear)
};

/// For N = 0..N_max: picks I = [p - l, p + l] e_u on tau with F_N(I) reaching
/// the plateau of the N-th bump, slides I along the stable foliation of
/// (f_1, ..., f_N, A, A, ...) to tau' and records |H(I)| / |I|.
BlowupTable blowup_experiment(const CounterexampleParams& params, std::size_t n_max, const BlowupOptions& opts = {});

/// Least-squares slope of log ratio against N over valid rows with N >= n_min.
double fitted_log_slope(const BlowupTable& table, std::size_t n_min = 1);

void write_blowup_csv(std::ostream& os, const BlowupTable& table);

}  // namespace nsalab
