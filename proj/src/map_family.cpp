#include "nsalab/map_family.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nsalab/parallel.hpp"

namespace nsalab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::Vector2d wrap_lift(const Eigen::Vector2d& v) { return TorusPoint(v).coords(); }

// Perturbation P(x) of a trig spec and its derivatives.
Eigen::Vector2d trig_offset(const TrigSpec& f, const Eigen::Vector2d& x) {
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (const auto& m : f.modes) out[m.component] += std::sin(kTwoPi * (m.k1 * x.x() + m.k2 * x.y()));
    return f.epsilon * out;
}

Eigen::Matrix2d trig_tangent(const TrigSpec& f, const Eigen::Vector2d& x) {
    Eigen::Matrix2d d = f.base;
    for (const auto& m : f.modes) {
        const double c = f.epsilon * kTwoPi * std::cos(kTwoPi * (m.k1 * x.x() + m.k2 * x.y()));
        d(m.component, 0) += c * m.k1;
        d(m.component, 1) += c * m.k2;
    }
    return d;
}

// Bump geometry in the (e_s, e_u) frame.
struct BumpFrame {
    Eigen::Matrix2d frame;      // columns e_s, e_u
    Eigen::Matrix2d frame_inv;  // x-coordinates -> (s, u)
};

BumpFrame bump_frame(const BumpSpec& f) {
    BumpFrame bf;
    bf.frame.col(0) = f.e_s;
    bf.frame.col(1) = f.e_u;
    bf.frame_inv = bf.frame.inverse();
    return bf;
}

// Q(s, u) = u * stretch * rho(s/w) * rho(u/h), gradient and Hessian in (s, u).
struct BumpField {
    double q;
    Eigen::Vector2d grad;
    Eigen::Matrix2d hess;
};

BumpField bump_field(const BumpSpec& f, double s, double u) {
    const double w = f.half_width;
    const double h = f.half_height;
    const BumpValue rs = plateau_bump(s / w);
    const BumpValue ru = plateau_bump(u / h);
    const double b = f.stretch;
    BumpField out;
    out.q = b * u * rs.value * ru.value;
    // d/du [u rho(u/h)] = rho + (u/h) rho'
    const double gu = ru.value + (u / h) * ru.d1;
    out.grad = Eigen::Vector2d(b * u * ru.value * rs.d1 / w, b * rs.value * gu);
    const double q_ss = b * u * ru.value * rs.d2 / (w * w);
    const double q_su = b * rs.d1 / w * gu;
    // d^2/du^2 [u rho(u/h)] = 2 rho'/h + (u/h^2) rho''
    const double q_uu = b * rs.value * (2.0 * ru.d1 / h + u / (h * h) * ru.d2);
    out.hess << q_ss, q_su, q_su, q_uu;
    return out;
}

bool in_bump_support(const BumpSpec& f, double s, double u) {
    return std::abs(s) < f.half_width && std::abs(u) < f.half_height;
}

Eigen::Vector2d bump_local(const BumpSpec& f, const BumpFrame& bf, const Eigen::Vector2d& y) {
    const Eigen::Vector2d d = torus_delta(TorusPoint(f.center), TorusPoint(y));
    return bf.frame_inv * d;
}

Eigen::Vector2d apply_phi(const BumpSpec& f, const Eigen::Vector2d& y) {
    const BumpFrame bf = bump_frame(f);
    const Eigen::Vector2d su = bump_local(f, bf, y);
    if (!in_bump_support(f, su.x(), su.y())) return y;
    return y + f.e_u * bump_field(f, su.x(), su.y()).q;
}

Eigen::Matrix2d phi_tangent(const BumpSpec& f, const Eigen::Vector2d& y) {
    const BumpFrame bf = bump_frame(f);
    const Eigen::Vector2d su = bump_local(f, bf, y);
    if (!in_bump_support(f, su.x(), su.y())) return Eigen::Matrix2d::Identity();
    const BumpField q = bump_field(f, su.x(), su.y());
    const Eigen::Vector2d grad_x = bf.frame_inv.transpose() * q.grad;
    return Eigen::Matrix2d::Identity() + f.e_u * grad_x.transpose();
}

std::array<Eigen::Matrix2d, 2> phi_second(const BumpSpec& f, const Eigen::Vector2d& y) {
    std::array<Eigen::Matrix2d, 2> out{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
    const BumpFrame bf = bump_frame(f);
    const Eigen::Vector2d su = bump_local(f, bf, y);
    if (!in_bump_support(f, su.x(), su.y())) return out;
    const BumpField q = bump_field(f, su.x(), su.y());
    const Eigen::Matrix2d hess_x = bf.frame_inv.transpose() * q.hess * bf.frame_inv;
    // d^2 phi_i / dx_j dx_k = (e_u)_i hess_x(j, k)
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) out[j](i, k) = f.e_u[i] * hess_x(j, k);
    return out;
}

// Solves u (1 + b rho_s rho(u/h)) = target on [-h, h]; the left side is
// increasing there whenever validate() accepted the spec.
double solve_bump_u(const BumpSpec& f, double rho_s, double target) {
    const double h = f.half_height;
    const double b = f.stretch * rho_s;
    double lo = -h, hi = h;
    double u = target / (1.0 + b);
    for (int it = 0; it < 200; ++it) {
        const BumpValue r = plateau_bump(u / h);
        const double g = u * (1.0 + b * r.value) - target;
        if (std::abs(g) <= 1e-15 * h) return u;
        if (g > 0)
            hi = u;
        else
            lo = u;
        const double dg = 1.0 + b * (r.value + (u / h) * r.d1);
        double next = u - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-17 * h || std::abs(next - u) <= 1e-16 * h) return next;
        u = next;
    }
    throw InverseDivergedError();
}

Eigen::Vector2d inverse_phi(const BumpSpec& f, const Eigen::Vector2d& y) {
    const BumpFrame bf = bump_frame(f);
    const Eigen::Vector2d su = bump_local(f, bf, y);
    if (!in_bump_support(f, su.x(), su.y())) return y;
    const double rho_s = plateau_bump(su.x() / f.half_width).value;
    const double u = solve_bump_u(f, rho_s, su.y());
    return y - f.e_u * (su.y() - u);
}

TorusPoint trig_inverse(const TrigSpec& f, const TorusPoint& p) {
    const Eigen::Matrix2d a_inv = f.base.inverse();
    Eigen::Vector2d y = a_inv * p.coords();
    auto residual = [&](const Eigen::Vector2d& z) {
        const Eigen::Vector2d img = f.base * z + trig_offset(f, z) - p.coords();
        return Eigen::Vector2d(wrap_centered(img.x()), wrap_centered(img.y()));
    };
    Eigen::Vector2d r = residual(y);
    for (int it = 0; it < 50; ++it) {
        if (r.norm() < 1e-12) {
            // one extra full step polishes the last digits
            const Eigen::Vector2d step = trig_tangent(f, y).partialPivLu().solve(r);
            const Eigen::Vector2d y2 = y - step;
            const Eigen::Vector2d r2 = residual(y2);
            if (r2.norm() <= r.norm()) y = y2;
            return TorusPoint(y);
        }
        const Eigen::Matrix2d d = trig_tangent(f, y);
        if (std::abs(d.determinant()) < 1e-14) throw InverseDivergedError();
        const Eigen::Vector2d step = d.partialPivLu().solve(r);
        double damping = 1.0;
        Eigen::Vector2d y_next = y - step;
        Eigen::Vector2d r_next = residual(y_next);
        while (r_next.norm() >= r.norm() && damping > 1e-4) {
            damping *= 0.5;
            y_next = y - damping * step;
            r_next = residual(y_next);
        }
        y = y_next;
        r = r_next;
    }
    if (r.norm() < 1e-12) return TorusPoint(y);
    throw InverseDivergedError();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

BumpValue plateau_bump(double t) {
    const double a = std::abs(t);
    if (a <= 0.5) return {1.0, 0.0, 0.0};
    if (a >= 1.0) return {0.0, 0.0, 0.0};
    const double x = 2.0 * (1.0 - a);  // 0 at the outer edge, 1 at the plateau
    const double s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    const double ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    const double dds = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    const double sign = t > 0 ? 1.0 : -1.0;
    return {s, -2.0 * sign * ds, 4.0 * dds};
}

bool is_hyperbolic_toral(const Eigen::Matrix2d& m) {
    for (int i = 0; i < 4; ++i)
        if (m.data()[i] != std::round(m.data()[i])) return false;
    return std::abs(std::abs(m.determinant()) - 1.0) < 1e-12 && std::abs(m.trace()) > 2.0;
}

const Eigen::Matrix2d& base_matrix(const DiffeoSpec& f) {
    return std::visit(Overloaded{[](const LinearSpec& s) -> const Eigen::Matrix2d& { return s.matrix; },
                                 [](const TrigSpec& s) -> const Eigen::Matrix2d& { return s.base; },
                                 [](const BumpSpec& s) -> const Eigen::Matrix2d& { return s.base; }},
                      f);
}

void validate(const DiffeoSpec& f) {
    if (!is_hyperbolic_toral(base_matrix(f)))
        throw std::invalid_argument("linear part must be an integer matrix with |det| = 1 and |trace| > 2");
    if (const auto* t = std::get_if<TrigSpec>(&f)) {
        if (!(t->epsilon >= 0.0) || !std::isfinite(t->epsilon)) throw std::invalid_argument("epsilon must be >= 0");
        double budget = 0.0;
        for (const auto& m : t->modes) {
            if (m.component != 0 && m.component != 1) throw std::invalid_argument("mode component must be 0 or 1");
            budget = std::max(budget, std::hypot(double(m.k1), double(m.k2)));
        }
        if (t->epsilon * kTwoPi * budget >= 1.0 - 1.0 / op_norm(t->base.inverse()))
            throw std::invalid_argument("epsilon too large for invertibility");
        // Df must keep the sign of det A everywhere (then f is a degree-one
        // covering, hence a diffeomorphism); checked on a fine grid.
        const double sign = t->base.determinant() > 0 ? 1.0 : -1.0;
        constexpr int kGrid = 128;
        for (int i = 0; i < kGrid; ++i)
            for (int j = 0; j < kGrid; ++j) {
                const Eigen::Vector2d x(double(i) / kGrid, double(j) / kGrid);
                if (sign * trig_tangent(*t, x).determinant() <= 0.05)
                    throw std::invalid_argument("epsilon too large for invertibility");
            }
    }
    if (const auto* b = std::get_if<BumpSpec>(&f)) {
        if (!(b->half_width > 0 && b->half_height > 0 && b->half_width < 0.25 && b->half_height < 0.25))
            throw std::invalid_argument("bump support must be a small box");
        if (!(b->stretch >= 0.0)) throw std::invalid_argument("bump stretch must be >= 0");
        // min over t of rho(t) + t rho'(t) is about -1.73; keep u -> u(1 + b rho) monotone
        if (b->stretch * 1.8 >= 1.0) throw std::invalid_argument("bump stretch too large for invertibility");
    }
}

TorusPoint apply(const DiffeoSpec& f, const TorusPoint& p) {
    return std::visit(Overloaded{[&](const LinearSpec& s) { return TorusPoint(s.matrix * p.coords()); },
                                 [&](const TrigSpec& s) {
                                     return TorusPoint(s.base * p.coords() + trig_offset(s, p.coords()));
                                 },
                                 [&](const BumpSpec& s) {
                                     const Eigen::Vector2d y = wrap_lift(s.base * p.coords());
                                     return TorusPoint(apply_phi(s, y));
                                 }},
                      f);
}

TorusPoint inverse_apply(const DiffeoSpec& f, const TorusPoint& p) {
    return std::visit(Overloaded{[&](const LinearSpec& s) { return TorusPoint(s.matrix.inverse() * p.coords()); },
                                 [&](const TrigSpec& s) {
                                     if (s.epsilon == 0.0) return TorusPoint(s.base.inverse() * p.coords());
                                     return trig_inverse(s, p);
                                 },
                                 [&](const BumpSpec& s) {
                                     const Eigen::Vector2d y0 = inverse_phi(s, p.coords());
                                     return TorusPoint(s.base.inverse() * y0);
                                 }},
                      f);
}

Eigen::Matrix2d tangent(const DiffeoSpec& f, const TorusPoint& p) {
    return std::visit(Overloaded{[&](const LinearSpec& s) -> Eigen::Matrix2d { return s.matrix; },
                                 [&](const TrigSpec& s) -> Eigen::Matrix2d { return trig_tangent(s, p.coords()); },
                                 [&](const BumpSpec& s) -> Eigen::Matrix2d {
                                     const Eigen::Vector2d y = wrap_lift(s.base * p.coords());
                                     return phi_tangent(s, y) * s.base;
                                 }},
                      f);
}

Eigen::Matrix2d inverse_tangent_at_preimage(const DiffeoSpec& f, const TorusPoint& preimage) {
    const Eigen::Matrix2d d = tangent(f, preimage);
    if (d.determinant() == 0.0) throw SingularMatrixError();
    return d.inverse();
}

Eigen::Matrix2d inverse_tangent(const DiffeoSpec& f, const TorusPoint& p) {
    if (const auto* l = std::get_if<LinearSpec>(&f)) {
        if (l->matrix.determinant() == 0.0) throw SingularMatrixError();
        return l->matrix.inverse();
    }
    return inverse_tangent_at_preimage(f, inverse_apply(f, p));
}

std::array<Eigen::Matrix2d, 2> second_derivative(const DiffeoSpec& f, const TorusPoint& p) {
    std::array<Eigen::Matrix2d, 2> out{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
    if (const auto* t = std::get_if<TrigSpec>(&f)) {
        for (const auto& m : t->modes) {
            const double c = -t->epsilon * kTwoPi * kTwoPi *
                             std::sin(kTwoPi * (m.k1 * p.x1() + m.k2 * p.x2()));
            const double k[2] = {double(m.k1), double(m.k2)};
            for (int j = 0; j < 2; ++j)
                for (int kk = 0; kk < 2; ++kk) out[j](m.component, kk) += c * k[j] * k[kk];
        }
    } else if (const auto* b = std::get_if<BumpSpec>(&f)) {
        // f = phi o A: D^2 f[v, w] = D^2 phi(Ax)[A v, A w]
        const Eigen::Vector2d y = wrap_lift(b->base * p.coords());
        const auto phi2 = phi_second(*b, y);
        const Eigen::Matrix2d& a = b->base;
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i)
                for (int k = 0; k < 2; ++k) {
                    double acc = 0.0;
                    for (int l = 0; l < 2; ++l)
                        for (int m = 0; m < 2; ++m) acc += phi2[l](i, m) * a(l, j) * a(m, k);
                    out[j](i, k) = acc;
                }
    }
    return out;
}

std::vector<TorusPoint> local_samples(const DiffeoSpec& f, int per_axis) {
    std::vector<TorusPoint> out;
    const auto* b = std::get_if<BumpSpec>(&f);
    if (b == nullptr || per_axis < 2) return out;
    const Eigen::Matrix2d a_inv = b->base.inverse();
    out.reserve(std::size_t(per_axis) * per_axis);
    for (int i = 0; i < per_axis; ++i) {
        const double s = b->half_width * (-1.0 + 2.0 * i / (per_axis - 1));
        for (int j = 0; j < per_axis; ++j) {
            const double u = b->half_height * (-1.0 + 2.0 * j / (per_axis - 1));
            const Eigen::Vector2d y = b->center + s * b->e_s + u * b->e_u;
            out.emplace_back(a_inv * y);
        }
    }
    return out;
}

double op_norm(const Eigen::Matrix2d& m) {
    const double fro2 = m.squaredNorm();
    const double det = m.determinant();
    const double disc = std::max(0.0, fro2 * fro2 - 4.0 * det * det);
    return std::sqrt(0.5 * (fro2 + std::sqrt(disc)));
}

double tensor_norm(const std::array<Eigen::Matrix2d, 2>& t) {
    return std::sqrt(t[0].squaredNorm() + t[1].squaredNorm());
}

MapFamily MapFamily::constant(DiffeoSpec f, int smoothness) {
    MapFamily fam;
    fam.mode_ = SequenceMode::constant;
    fam.members_ = std::make_shared<const std::vector<DiffeoSpec>>(std::vector<DiffeoSpec>{std::move(f)});
    fam.smoothness_ = smoothness;
    return fam;
}

MapFamily MapFamily::periodic(std::vector<DiffeoSpec> members, int smoothness) {
    if (members.empty()) throw std::invalid_argument("periodic family needs at least one member");
    MapFamily fam;
    fam.mode_ = members.size() == 1 ? SequenceMode::constant : SequenceMode::periodic;
    fam.members_ = std::make_shared<const std::vector<DiffeoSpec>>(std::move(members));
    fam.smoothness_ = smoothness;
    return fam;
}

MapFamily MapFamily::random_choice(std::vector<DiffeoSpec> members, std::uint64_t seed, int smoothness) {
    if (members.empty()) throw std::invalid_argument("random family needs at least one member");
    MapFamily fam;
    fam.mode_ = SequenceMode::random_choice;
    fam.members_ = std::make_shared<const std::vector<DiffeoSpec>>(std::move(members));
    fam.seed_ = seed;
    fam.smoothness_ = smoothness;
    return fam;
}

MapFamily MapFamily::explicit_list(std::vector<DiffeoSpec> members, int smoothness) {
    if (members.empty()) throw std::invalid_argument("explicit family needs at least one member");
    MapFamily fam;
    fam.mode_ = SequenceMode::explicit_list;
    fam.members_ = std::make_shared<const std::vector<DiffeoSpec>>(std::move(members));
    fam.smoothness_ = smoothness;
    return fam;
}

MapFamily MapFamily::generated(Generator gen, int smoothness) {
    MapFamily fam;
    fam.mode_ = SequenceMode::generated;
    fam.gen_ = std::move(gen);
    fam.smoothness_ = smoothness;
    return fam;
}

MapFamily MapFamily::truncated(std::size_t depth, DiffeoSpec tail) const {
    MapFamily head = *this;
    return generated(
        [head, depth, tail = std::move(tail)](std::size_t n) { return n <= depth ? head[n] : tail; },
        smoothness_);
}

DiffeoSpec MapFamily::operator[](std::size_t n) const {
    if (n == 0) throw std::out_of_range("map families are indexed from 1");
    switch (mode_) {
        case SequenceMode::constant:
            return members_->front();
        case SequenceMode::periodic:
            return (*members_)[(n - 1) % members_->size()];
        case SequenceMode::random_choice:
            return (*members_)[splitmix64(seed_ ^ splitmix64(n)) % members_->size()];
        case SequenceMode::explicit_list:
            return (*members_)[std::min(n, members_->size()) - 1];
        case SequenceMode::generated:
            return gen_(n);
    }
    throw std::logic_error("unknown sequence mode");
}

std::optional<std::size_t> MapFamily::period() const {
    if (mode_ == SequenceMode::constant) return 1;
    if (mode_ == SequenceMode::periodic) return members_->size();
    return std::nullopt;
}

std::vector<NormRow> norm_report(const MapFamily& fam, std::size_t n_max, int grid) {
    if (grid < 16) throw std::invalid_argument("norm_report needs grid >= 16");
    std::vector<NormRow> rows(n_max);
    parallel_for(n_max, [&](std::size_t idx) {
        const std::size_t n = idx + 1;
        const DiffeoSpec f = fam[n];
        std::vector<TorusPoint> pts;
        pts.reserve(std::size_t(grid) * grid);
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) pts.emplace_back(double(i) / grid, double(j) / grid);
        for (const auto& q : local_samples(f)) pts.push_back(q);
        NormRow row{n, 0.0, 0.0, 0.0, 0.0};
        for (const auto& x : pts) {
            const Eigen::Matrix2d d = tangent(f, x);
            const Eigen::Matrix2d m = d.inverse();
            const auto d2 = second_derivative(f, x);
            // D^2 f^{-1} at f(x): d_a Dg = -M (sum_j M_ja d_j Df) M
            std::array<Eigen::Matrix2d, 2> g2;
            for (int a = 0; a < 2; ++a) g2[a] = -m * (m(0, a) * d2[0] + m(1, a) * d2[1]) * m;
            row.df = std::max(row.df, op_norm(d));
            row.df_inv = std::max(row.df_inv, op_norm(m));
            row.d2f = std::max(row.d2f, tensor_norm(d2));
            row.d2f_inv = std::max(row.d2f_inv, tensor_norm(g2));
        }
        rows[idx] = row;
    });
    return rows;
}

}  // namespace nsalab
