#pragma once

// Trace maps of Sturmian Hamiltonians and the spectral scan built on them.
//
//   T_k(x, y, z) = (x U_k(y) - z U_{k-1}(y), x U_{k-1}(y) - z U_{k-2}(y), y)
//
// preserves I = x^2 + y^2 + z^2 - 2xyz - 1; E is in the spectrum of the
// coupling-lambda operator with frequency [a_1, a_2, ...] iff the orbit of
// ((E - lambda)/2, E/2, 1) under T_{a_1}, T_{a_2}, ... stays bounded.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace nsalab {

using TracePoint = Eigen::Vector3d;

/// U_k(y) with U_{-1} = 0, U_0 = 1, U_{k+1} = 2y U_k - U_{k-1}. k >= -1.
double chebyshev_u(int k, double y);

/// k >= 1.
TracePoint trace_map(int k, const TracePoint& p);

/// I(p); p lies on the surface S_lambda iff I(p) = lambda^2 / 4.
double fricke_vogt(const TracePoint& p);

TracePoint spectrum_line(double lambda, double energy);

/// Quad precision. After k steps the coordinates are of size |U_k(y)| and I
/// cancels their squares, so checking invariance in double loses ~2 log10|U_k|
/// digits; the wide path keeps the check meaningful up to k ~ 10 on [-3, 3]^3.
using WideReal = boost::multiprecision::cpp_bin_float_quad;
using WideTracePoint = Eigen::Matrix<WideReal, 3, 1>;

WideTracePoint trace_map(int k, const WideTracePoint& p);
WideReal fricke_vogt(const WideTracePoint& p);

struct OrbitVerdict {
    bool escaped = false;
    std::size_t step = 0;  // escape step (1-based), or iterations run
};

struct OrbitOptions {
    double escape_radius = 10.0;
    std::size_t max_iters = 10000;
};

/// Iterates T_{a_1}, T_{a_2}, ... (digits recycled periodically past the
/// prefix) from spectrum_line(lambda, E). One-sided: "not escaped" only means
/// bounded so far.
OrbitVerdict orbit_bounded(double lambda, const std::vector<int>& cf_prefix, double energy,
                           const OrbitOptions& opts = {});

struct Interval {
    double lo;
    double hi;
};

struct SpectrumApprox {
    double lambda = 0.0;
    std::vector<int> cf_prefix;
    double window_lo = 0.0, window_hi = 0.0;
    std::vector<Interval> intervals;  // sorted, disjoint
    double resolution = 0.0;          // final cell size
    double escape_radius = 10.0;
    std::size_t max_iters = 10000;

    double total_length() const;
};

struct ScanOptions {
    std::size_t initial_grid = 256;  // cells
    int refine_depth = 12;
    OrbitOptions orbit;
};

/// Outer approximation of the spectrum in [e_min, e_max]: a grid of cells,
/// boundary cells (mixed endpoint verdicts) split refine_depth times, every
/// cell with a bounded endpoint kept, adjacent kept cells merged. Gaps
/// narrower than the initial cell between two bounded samples are not seen.
SpectrumApprox spectrum_scan(double lambda, const std::vector<int>& cf_prefix, double e_min, double e_max,
                             const ScanOptions& opts = {});

struct DimensionReport {
    double dim_hat = 0.0;
    double r_squared = 0.0;
    bool empty = false;
    std::vector<double> scales;
    std::vector<std::size_t> box_counts;
};

/// Number of boxes [origin + k s, origin + (k+1) s) meeting the set, with
/// intervals read as half-open [lo, hi) (a degenerate interval is one point).
std::size_t box_count(const std::vector<Interval>& set, double origin, double scale);

/// Least-squares slope of log N(s) against log(1/s). Needs >= 4 scales, all
/// at least `resolution` (otherwise the error names the finest admissible scale).
DimensionReport box_dimension(const std::vector<Interval>& set, double origin, double resolution,
                              const std::vector<double>& scales);
DimensionReport box_dimension(const SpectrumApprox& approx, const std::vector<double>& scales);

/// N digits of the Gauss-map expansion of alpha in (0, 1). Throws when the
/// expansion collapses (alpha numerically rational) before N digits.
std::vector<int> continued_fraction(double alpha, std::size_t n);

void write_spectrum_csv(std::ostream& os, const SpectrumApprox& approx);
void write_dimension_csv(std::ostream& os, const DimensionReport& report);

}  // namespace nsalab
