#include "nsalab/section.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsalab/csv.hpp"

namespace nsalab {

namespace {

struct Stencil {
    int i0, i1, j0, j1;
    double fx, fy;
};

Stencil stencil(int n, const TorusPoint& p) {
    const double gx = p.x1() * n;
    const double gy = p.x2() * n;
    const double fx0 = std::floor(gx);
    const double fy0 = std::floor(gy);
    Stencil s;
    s.i0 = int(fx0) % n;
    s.j0 = int(fy0) % n;
    s.i1 = (s.i0 + 1) % n;
    s.j1 = (s.j0 + 1) % n;
    s.fx = gx - fx0;
    s.fy = gy - fy0;
    return s;
}

}  // namespace

Section::Section(int resolution, Direction fill) {
    if (resolution < 2) throw std::invalid_argument("section resolution must be >= 2");
    theta_ = Eigen::ArrayXXd::Constant(resolution, resolution, fill.theta());
}

Direction Section::operator()(const TorusPoint& p) const {
    const Stencil s = stencil(resolution(), p);
    const double t00 = theta_(s.i0, s.j0);
    const double t10 = t00 + wrap_angle_centered(theta_(s.i1, s.j0) - t00);
    const double t01 = t00 + wrap_angle_centered(theta_(s.i0, s.j1) - t00);
    const double t11 = t00 + wrap_angle_centered(theta_(s.i1, s.j1) - t00);
    const double v = (1 - s.fx) * (1 - s.fy) * t00 + s.fx * (1 - s.fy) * t10 + (1 - s.fx) * s.fy * t01 +
                     s.fx * s.fy * t11;
    return Direction(v);
}

double Section::max_neighbour_jump() const {
    const int n = resolution();
    double jump = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            jump = std::max(jump, proj_dist(at(i, j), at((i + 1) % n, j)));
            jump = std::max(jump, proj_dist(at(i, j), at(i, (j + 1) % n)));
        }
    return jump;
}

double sup_proj_dist(const Section& a, const Section& b) {
    if (a.resolution() != b.resolution()) throw std::invalid_argument("section resolutions differ");
    double d = 0.0;
    for (int i = 0; i < a.resolution(); ++i)
        for (int j = 0; j < a.resolution(); ++j) d = std::max(d, proj_dist(a.at(i, j), b.at(i, j)));
    return d;
}

DerivField::DerivField(int resolution) {
    if (resolution < 2) throw std::invalid_argument("field resolution must be >= 2");
    h1_ = Eigen::ArrayXXd::Zero(resolution, resolution);
    h2_ = Eigen::ArrayXXd::Zero(resolution, resolution);
}

Eigen::RowVector2d DerivField::operator()(const TorusPoint& p) const {
    const Stencil s = stencil(resolution(), p);
    const double w00 = (1 - s.fx) * (1 - s.fy), w10 = s.fx * (1 - s.fy), w01 = (1 - s.fx) * s.fy,
                 w11 = s.fx * s.fy;
    return w00 * at(s.i0, s.j0) + w10 * at(s.i1, s.j0) + w01 * at(s.i0, s.j1) + w11 * at(s.i1, s.j1);
}

double sup_norm(const DerivField& h) { return (h.h1().square() + h.h2().square()).sqrt().maxCoeff(); }

double sup_norm_diff(const DerivField& a, const DerivField& b) {
    if (a.resolution() != b.resolution()) throw std::invalid_argument("field resolutions differ");
    return ((a.h1() - b.h1()).square() + (a.h2() - b.h2()).square()).sqrt().maxCoeff();
}

void Band::check() const {
    if (!(radius > 0.0 && radius < std::numbers::pi / 4))
        throw std::invalid_argument("band radius must lie in (0, pi/4)");
}

bool Band::contains(const TorusPoint& p, Direction z, double tol) const {
    return proj_dist(center(p), z) <= radius + tol;
}

bool Band::contains(const Section& s, double tol) const {
    if (s.resolution() != center.resolution()) throw std::invalid_argument("section resolutions differ");
    for (int i = 0; i < s.resolution(); ++i)
        for (int j = 0; j < s.resolution(); ++j)
            if (proj_dist(center.at(i, j), s.at(i, j)) > radius + tol) return false;
    return true;
}

void write_section_csv(std::ostream& os, const Section& s, const DerivField* h) {
    if (h != nullptr && h->resolution() != s.resolution())
        throw std::invalid_argument("section and derivative field resolutions differ");
    os << "# schema=section version=1\n";
    os << (h ? "i,j,x1,x2,theta,h1,h2\n" : "i,j,x1,x2,theta\n");
    const int n = s.resolution();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const TorusPoint p = s.point(i, j);
            os << i << ',' << j << ',' << fmt_real(p.x1()) << ',' << fmt_real(p.x2()) << ','
               << fmt_real(s.at(i, j).theta());
            if (h) os << ',' << fmt_real(h->h1()(i, j)) << ',' << fmt_real(h->h2()(i, j));
            os << '\n';
        }
}

Section read_section_csv(std::istream& is, std::optional<DerivField>* h) {
    std::string line;
    std::vector<std::vector<double>> rows;
    bool have_deriv = false;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            have_deriv = line.find("h1") != std::string::npos;
            continue;
        }
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != (have_deriv ? 7u : 5u)) throw std::runtime_error("malformed section row: " + line);
        rows.push_back(std::move(vals));
    }
    const int n = int(std::lround(std::sqrt(double(rows.size()))));
    if (n < 2 || std::size_t(n) * n != rows.size()) throw std::runtime_error("section CSV is not a square grid");
    Section s(n, Direction());
    DerivField d(n);
    for (const auto& r : rows) {
        const int i = int(r[0]), j = int(r[1]);
        if (i < 0 || j < 0 || i >= n || j >= n) throw std::runtime_error("section index out of range");
        s.set(i, j, Direction(r[4]));
        if (have_deriv) d.set(i, j, Eigen::RowVector2d(r[5], r[6]));
    }
    if (h != nullptr) {
        if (have_deriv)
            *h = std::move(d);
        else
            h->reset();
    }
    return s;
}

}  // namespace nsalab
