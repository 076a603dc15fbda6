#include "nsalab/trace_map.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nsalab/csv.hpp"
#include "nsalab/parallel.hpp"

namespace nsalab {

namespace {

constexpr double kOverflowGuard = 1e150;

// (U_{k-2}, U_{k-1}, U_k) at y, k >= 1.
template <class T>
std::array<T, 3> chebyshev_triple(int k, const T& y) {
    T um2 = 0.0, um1 = 1.0, u = 2.0 * y;  // U_{-1}, U_0, U_1
    for (int j = 1; j < k; ++j) {
        um2 = um1;
        um1 = u;
        u = 2.0 * y * um1 - um2;
    }
    return {um2, um1, u};
}

}  // namespace

double chebyshev_u(int k, double y) {
    if (k < -1) throw std::invalid_argument("chebyshev_u needs k >= -1");
    if (k == -1) return 0.0;
    if (k == 0) return 1.0;
    return chebyshev_triple(k, y)[2];
}

namespace {

template <class P>
P trace_map_impl(int k, const P& p) {
    if (k < 1) throw std::invalid_argument("trace_map needs k >= 1");
    const auto [um2, um1, u] = chebyshev_triple(k, typename P::Scalar(p.y()));
    return {p.x() * u - p.z() * um1, p.x() * um1 - p.z() * um2, p.y()};
}

template <class P>
typename P::Scalar fricke_vogt_impl(const P& p) {
    return p.x() * p.x() + p.y() * p.y() + p.z() * p.z() - 2.0 * p.x() * p.y() * p.z() - 1.0;
}

}  // namespace

TracePoint trace_map(int k, const TracePoint& p) { return trace_map_impl(k, p); }

WideTracePoint trace_map(int k, const WideTracePoint& p) { return trace_map_impl(k, p); }

double fricke_vogt(const TracePoint& p) { return fricke_vogt_impl(p); }

WideReal fricke_vogt(const WideTracePoint& p) { return fricke_vogt_impl(p); }

TracePoint spectrum_line(double lambda, double energy) {
    return {(energy - lambda) / 2.0, energy / 2.0, 1.0};
}

OrbitVerdict orbit_bounded(double lambda, const std::vector<int>& cf_prefix, double energy, const OrbitOptions& opts) {
    if (cf_prefix.empty()) throw std::invalid_argument("continued fraction prefix is empty");
    for (int a : cf_prefix)
        if (a < 1) throw std::invalid_argument("continued fraction digits must be >= 1");
    TracePoint p = spectrum_line(lambda, energy);
    for (std::size_t n = 0; n < opts.max_iters; ++n) {
        p = trace_map(cf_prefix[n % cf_prefix.size()], p);
        const double m = p.cwiseAbs().maxCoeff();
        if (!(m <= opts.escape_radius) || m > kOverflowGuard) return {true, n + 1};
    }
    return {false, opts.max_iters};
}

double SpectrumApprox::total_length() const {
    double t = 0.0;
    for (const auto& iv : intervals) t += iv.hi - iv.lo;
    return t;
}

SpectrumApprox spectrum_scan(double lambda, const std::vector<int>& cf_prefix, double e_min, double e_max,
                             const ScanOptions& opts) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (opts.initial_grid < 1) throw std::invalid_argument("initial_grid must be positive");
    if (opts.refine_depth < 0) throw std::invalid_argument("refine_depth must be >= 0");
    SpectrumApprox out;
    out.lambda = lambda;
    out.cf_prefix = cf_prefix;
    out.window_lo = e_min;
    out.window_hi = e_max;
    out.escape_radius = opts.orbit.escape_radius;
    out.max_iters = opts.orbit.max_iters;
    const double width = e_max - e_min;
    out.resolution = width > 0.0 ? std::ldexp(width / double(opts.initial_grid), -opts.refine_depth) : 0.0;
    if (!(width > 0.0)) return out;  // empty window
    if (cf_prefix.empty()) throw std::invalid_argument("continued fraction prefix is empty");

    auto verdicts = [&](const std::vector<double>& es) {
        std::vector<char> bounded(es.size());
        parallel_for(es.size(), [&](std::size_t k) {
            bounded[k] = !orbit_bounded(lambda, cf_prefix, es[k], opts.orbit).escaped;
        });
        return bounded;
    };

    // cells as (lo, hi) with endpoint verdicts
    struct Cell {
        double lo, hi;
        bool blo, bhi;
    };
    const std::size_t n0 = opts.initial_grid;
    std::vector<double> grid(n0 + 1);
    for (std::size_t k = 0; k <= n0; ++k) grid[k] = e_min + width * double(k) / double(n0);
    grid[n0] = e_max;
    const auto b0 = verdicts(grid);
    std::vector<Cell> cells;
    for (std::size_t k = 0; k < n0; ++k) cells.push_back({grid[k], grid[k + 1], bool(b0[k]), bool(b0[k + 1])});

    // only boundary cells (one endpoint bounded, one escaped) are refined;
    // cells with both endpoints bounded are kept whole, both escaped dropped
    for (int depth = 0; depth < opts.refine_depth; ++depth) {
        std::vector<double> mids;
        for (const auto& c : cells)
            if (c.blo != c.bhi) mids.push_back(0.5 * (c.lo + c.hi));
        if (mids.empty()) break;
        const auto bm = verdicts(mids);
        std::vector<Cell> next;
        std::size_t m = 0;
        for (const auto& c : cells) {
            if (!(c.blo || c.bhi)) continue;
            if (c.blo && c.bhi) {
                next.push_back(c);
                continue;
            }
            const double mid = mids[m];
            const bool bmid = bm[m++];
            next.push_back({c.lo, mid, c.blo, bmid});
            next.push_back({mid, c.hi, bmid, c.bhi});
        }
        cells = std::move(next);
    }

    for (const auto& c : cells) {
        if (!(c.blo || c.bhi)) continue;
        if (!out.intervals.empty() && out.intervals.back().hi >= c.lo)
            out.intervals.back().hi = std::max(out.intervals.back().hi, c.hi);
        else
            out.intervals.push_back({c.lo, c.hi});
    }
    return out;
}

std::size_t box_count(const std::vector<Interval>& set, double origin, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("box scale must be positive");
    // box coordinates, snapped to box edges when within rounding of one
    auto coord = [&](double e) {
        const double q = (e - origin) / scale;
        const double r = std::round(q);
        return std::abs(q - r) < 1e-9 * std::max(1.0, std::abs(q)) ? r : q;
    };
    // intervals are sorted; boxes are [k s, (k+1) s) and intervals half-open too,
    // so adjacent cells sharing an edge are not double counted
    std::size_t count = 0;
    long long last = std::numeric_limits<long long>::min();
    for (const auto& iv : set) {
        const double qlo = coord(iv.lo), qhi = coord(iv.hi);
        long long a = (long long)std::floor(qlo);
        const long long b = qhi > qlo ? (long long)std::ceil(qhi) - 1 : a;
        if (a <= last) a = last + 1;
        if (b >= a) {
            count += std::size_t(b - a + 1);
            last = b;
        }
    }
    return count;
}

DimensionReport box_dimension(const std::vector<Interval>& set, double origin, double resolution,
                              const std::vector<double>& scales) {
    if (scales.size() < 4) throw std::invalid_argument("box_dimension needs at least 4 scales");
    for (double s : scales)
        if (s < resolution) {
            std::ostringstream msg;
            msg << "box scale " << s << " is finer than the approximation resolution; finest admissible scale is "
                << resolution;
            throw std::invalid_argument(msg.str());
        }
    DimensionReport r;
    r.scales = scales;
    if (set.empty()) {
        r.empty = true;
        r.box_counts.assign(scales.size(), 0);
        return r;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = double(scales.size());
    for (double s : scales) {
        const std::size_t c = box_count(set, origin, s);
        r.box_counts.push_back(c);
        const double x = std::log(1.0 / s), y = std::log(double(c));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
    r.dim_hat = cxy / cxx;
    r.r_squared = cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
    return r;
}

DimensionReport box_dimension(const SpectrumApprox& approx, const std::vector<double>& scales) {
    return box_dimension(approx.intervals, approx.window_lo, approx.resolution, scales);
}

std::vector<int> continued_fraction(double alpha, std::size_t n) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
    std::vector<int> digits;
    double x = alpha;
    // running bound on the absolute error of x; the Gauss map amplifies it by 1/x^2
    double err = std::numeric_limits<double>::epsilon() * alpha;
    for (std::size_t k = 0; k < n; ++k) {
        if (x <= err || x < 1e-15) {
            std::ostringstream msg;
            msg << "continued fraction collapsed at digit " << k + 1 << " (alpha numerically rational)";
            throw std::domain_error(msg.str());
        }
        const double inv = 1.0 / x;
        const double a = std::floor(inv);
        digits.push_back(int(a));
        err = err / (x * x) + std::numeric_limits<double>::epsilon() * inv;
        x = inv - a;
        if (err > 0.5) {
            if (k + 1 < n) {
                std::ostringstream msg;
                msg << "continued fraction precision exhausted at digit " << k + 2;
                throw std::domain_error(msg.str());
            }
        }
    }
    return digits;
}

void write_spectrum_csv(std::ostream& os, const SpectrumApprox& approx) {
    os << "# schema=spectrum version=1\n";
    os << "# lambda=" << fmt_real(approx.lambda) << " resolution=" << fmt_real(approx.resolution)
       << " escape_radius=" << fmt_real(approx.escape_radius) << " max_iters=" << approx.max_iters
       << " digits_recycled=periodic cf=";
    for (std::size_t k = 0; k < approx.cf_prefix.size(); ++k) os << (k ? " " : "") << approx.cf_prefix[k];
    os << "\n";
    os << "E_lo,E_hi\n";
    for (const auto& iv : approx.intervals) os << fmt_real(iv.lo) << ',' << fmt_real(iv.hi) << '\n';
}

void write_dimension_csv(std::ostream& os, const DimensionReport& report) {
    os << "# schema=dimension version=1\n";
    os << "scale,box_count\n";
    for (std::size_t k = 0; k < report.scales.size(); ++k)
        os << fmt_real(report.scales[k]) << ',' << report.box_counts[k] << '\n';
}

}  // namespace nsalab
