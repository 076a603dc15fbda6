#include "nsalab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "nsalab/csv.hpp"
#include "nsalab/parallel.hpp"

namespace nsalab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Unit representative of d closest to `prev`.
Eigen::Vector2d oriented(Direction d, const Eigen::Vector2d& prev) {
    Eigen::Vector2d u = d.unit();
    const double c = u.dot(prev);
    // |c| small means the field turned by about pi/2 within one stage
    if (std::abs(c) < 0.5) throw std::runtime_error("step too large");
    return c < 0.0 ? Eigen::Vector2d(-u) : u;
}

Eigen::Vector2d rk4_step(const DirectionFieldFn& field, const Eigen::Vector2d& x, const Eigen::Vector2d& prev,
                         double h) {
    auto eval = [&](const Eigen::Vector2d& p) { return oriented(field(TorusPoint(p)), prev); };
    const Eigen::Vector2d k1 = eval(x);
    const Eigen::Vector2d k2 = eval(x + 0.5 * h * k1);
    const Eigen::Vector2d k3 = eval(x + 0.5 * h * k2);
    const Eigen::Vector2d k4 = eval(x + h * k3);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::Vector2d initial_heading(const DirectionFieldFn& field, const TorusPoint& x0, const Eigen::Vector2d& heading) {
    const Eigen::Vector2d u = field(x0).unit();
    if (heading.squaredNorm() == 0.0) return u;
    return u.dot(heading) < 0.0 ? Eigen::Vector2d(-u) : u;
}

HolderReport fit(std::vector<double> scales, std::vector<double> sups, bool flat) {
    HolderReport r;
    r.scales = std::move(scales);
    r.sup_diffs = std::move(sups);
    const bool degenerate = std::all_of(r.sup_diffs.begin(), r.sup_diffs.end(), [](double v) { return !(v > 0.0); });
    if (flat || degenerate) {
        r.flat = true;
        r.beta_hat = 1.0;
        r.r_squared = 1.0;
        return r;
    }
    // least squares on points with positive sup
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < r.scales.size(); ++k)
        if (r.sup_diffs[k] > 0.0) {
            lx.push_back(std::log(r.scales[k]));
            ly.push_back(std::log(r.sup_diffs[k]));
        }
    if (lx.size() < 2) {
        r.flat = true;
        return r;
    }
    const double n = double(lx.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
        syy += (ly[k] - my) * (ly[k] - my);
    }
    const double slope = sxy / sxx;
    r.beta_hat = std::clamp(slope, 0.0, 1.0);
    r.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return r;
}

}  // namespace

DerivField finite_diff_deriv(const Section& sigma) {
    const int n = sigma.resolution();
    const double inv2h = 0.5 * n;
    DerivField out(n);
    const auto& th = sigma.angles();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d1 = wrap_angle_centered(th((i + 1) % n, j) - th((i + n - 1) % n, j));
            const double d2 = wrap_angle_centered(th(i, (j + 1) % n) - th(i, (j + n - 1) % n));
            out.set(i, j, Eigen::RowVector2d(d1 * inv2h, d2 * inv2h));
        }
    return out;
}

HolderReport holder_exponent(const CovectorFieldFn& field, const HolderOptions& opts) {
    if (opts.exponents.size() < 4) throw std::invalid_argument("holder_exponent needs at least 4 scales");
    if (opts.pairs < 1) throw std::invalid_argument("holder_exponent needs at least one pair per scale");
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> scales, sups;
    for (int e : opts.exponents) {
        const double s = std::ldexp(1.0, -e);
        double sup = 0.0;
        for (int k = 0; k < opts.pairs; ++k) {
            const TorusPoint x(unit(rng), unit(rng));
            const double a = 2.0 * std::numbers::pi * unit(rng);
            const TorusPoint y = translate(x, Eigen::Vector2d(s * std::cos(a), s * std::sin(a)));
            sup = std::max(sup, (field(x) - field(y)).norm());
        }
        scales.push_back(s);
        sups.push_back(sup);
    }
    const bool flat = std::all_of(sups.begin(), sups.end(), [](double v) { return v < 1e-9; });
    return fit(std::move(scales), std::move(sups), flat);
}

HolderReport holder_exponent(const DerivField& field, const HolderOptions& opts) {
    const double var = std::max(field.h1().maxCoeff() - field.h1().minCoeff(),
                                field.h2().maxCoeff() - field.h2().minCoeff());
    HolderReport r = holder_exponent([&](const TorusPoint& p) { return field(p); }, opts);
    if (var < 1e-9) {
        r.flat = true;
        r.beta_hat = 1.0;
    }
    return r;
}

std::vector<Eigen::Vector2d> integrate_leaf(const DirectionFieldFn& field, const TorusPoint& x0, double arclen,
                                            double step, Eigen::Vector2d heading) {
    if (!(step > 0.0) || !(arclen >= 0.0)) throw std::invalid_argument("integrate_leaf needs step > 0, arclen >= 0");
    const long steps = long(std::ceil(arclen / step - 1e-12));
    std::vector<Eigen::Vector2d> path;
    path.reserve(std::size_t(steps) + 1);
    Eigen::Vector2d x = x0.coords();
    Eigen::Vector2d prev = initial_heading(field, x0, heading);
    path.push_back(x);
    double done = 0.0;
    for (long k = 0; k < steps; ++k) {
        const double h = std::min(step, arclen - done);
        const Eigen::Vector2d nx = rk4_step(field, x, prev, h);
        prev = (nx - x).normalized();
        x = nx;
        done += h;
        path.push_back(x);
    }
    return path;
}

std::vector<Eigen::Vector2d> integrate_leaf(const Section& sigma, const TorusPoint& x0, double arclen, double step,
                                            Eigen::Vector2d heading) {
    if (step > sigma.spacing() * (1.0 + 1e-12)) throw std::invalid_argument("step exceeds grid spacing");
    return integrate_leaf([&](const TorusPoint& p) { return sigma(p); }, x0, arclen, step, heading);
}

void Transversal::check() const {
    if (!(half_length > 0.0 && half_length < 0.5)) throw std::invalid_argument("transversal half_length must be in (0, 1/2)");
    if (samples < 2) throw std::invalid_argument("transversal needs at least 2 samples");
}

std::vector<double> Transversal::params() const {
    std::vector<double> t(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) t[std::size_t(k)] = -half_length + 2.0 * half_length * k / (samples - 1);
    return t;
}

TorusPoint Transversal::at(double t) const { return translate(base, Eigen::Vector2d(t * dir.unit())); }

bool HolonomyResult::all_crossed() const { return std::all_of(crossed.begin(), crossed.end(), [](bool c) { return c; }); }

HolonomyResult holonomy(const DirectionFieldFn& field, const Transversal& tau, const Transversal& tau_p,
                        const HolonomyOptions& opts) {
    tau.check();
    tau_p.check();
    if (!(opts.step > 0.0) || !(opts.max_arclen > 0.0)) throw std::invalid_argument("holonomy needs step, max_arclen > 0");
    HolonomyResult r;
    r.source_params = tau.params();
    const std::size_t m = r.source_params.size();
    r.image_params.assign(m, kNaN);
    std::vector<char> crossed(m, 0);
    const Eigen::Vector2d line_dir = tau_p.dir.unit();

    parallel_for(m, [&](std::size_t k) {
        const TorusPoint start = tau.at(r.source_params[k]);
        Eigen::Vector2d x = start.coords();
        // lift of tau_p's base nearest to the start
        const Eigen::Vector2d base = x + torus_delta(start, tau_p.base);
        auto signed_dist = [&](const Eigen::Vector2d& p) { return cross(line_dir, p - base); };
        double sd = signed_dist(x);
        const Eigen::Vector2d toward = sd > 0 ? Eigen::Vector2d(line_dir.y(), -line_dir.x())
                                              : Eigen::Vector2d(-line_dir.y(), line_dir.x());
        Eigen::Vector2d prev = initial_heading(field, start, toward);
        double travelled = 0.0;
        while (travelled < opts.max_arclen) {
            const Eigen::Vector2d nx = rk4_step(field, x, prev, opts.step);
            const double nsd = signed_dist(nx);
            if (sd == 0.0 || (sd > 0) != (nsd > 0)) {
                double lo = 0.0, hi = 1.0;
                double sd_lo = sd, sd_hi = nsd;
                Eigen::Vector2d p_lo = x, p_hi = nx;
                while (hi - lo > 1e-10) {
                    const double mid = 0.5 * (lo + hi);
                    const Eigen::Vector2d pm = rk4_step(field, x, prev, mid * opts.step);
                    const double sm = signed_dist(pm);
                    if ((sm > 0) == (sd > 0)) {
                        lo = mid; sd_lo = sm; p_lo = pm;
                    } else {
                        hi = mid; sd_hi = sm; p_hi = pm;
                    }
                }
                // the bracket is a straight segment to rounding; finish by secant
                const double w = sd_lo == sd_hi ? 0.5 : sd_lo / (sd_lo - sd_hi);
                const Eigen::Vector2d hit = p_lo + w * (p_hi - p_lo);
                const double t = line_dir.dot(hit - base);
                if (std::abs(signed_dist(hit)) < 1e-8 && std::abs(t) <= tau_p.half_length * (1.0 + 1e-9)) {
                    r.image_params[k] = t;
                    crossed[k] = 1;
                }
                return;
            }
            prev = (nx - x).normalized();
            x = nx;
            sd = nsd;
            travelled += opts.step;
        }
    });

    r.crossed.assign(crossed.begin(), crossed.end());
    r.derivative_estimates.assign(m, kNaN);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t a = k + 1 < m ? k : k - 1;
        const double d = (r.image_params[a + 1] - r.image_params[a]) / (r.source_params[a + 1] - r.source_params[a]);
        r.derivative_estimates[k] = d;
        if (std::isfinite(d)) r.max_stretch = std::max(r.max_stretch, std::abs(d));
    }
    return r;
}

HolonomyResult holonomy(const Section& sigma, const Transversal& tau, const Transversal& tau_p,
                        const HolonomyOptions& opts) {
    return holonomy([&](const TorusPoint& p) { return sigma(p); }, tau, tau_p, opts);
}

void write_holder_csv(std::ostream& os, const HolderReport& r) {
    os << "# schema=holder version=1\n";
    os << "scale,sup_diff\n";
    for (std::size_t k = 0; k < r.scales.size(); ++k) os << fmt_real(r.scales[k]) << ',' << fmt_real(r.sup_diffs[k]) << '\n';
}

void write_holonomy_csv(std::ostream& os, const HolonomyResult& r) {
    os << "# schema=holonomy version=1\n";
    os << "param,image_param,deriv\n";
    for (std::size_t k = 0; k < r.source_params.size(); ++k)
        os << fmt_real(r.source_params[k]) << ',' << fmt_real(r.image_params[k]) << ','
           << fmt_real(r.derivative_estimates[k]) << '\n';
}

}  // namespace nsalab
