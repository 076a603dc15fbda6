#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "nsalab/cli.hpp"
#include "nsalab/cone_verify.hpp"
#include "nsalab/counterexample.hpp"
#include "nsalab/csv.hpp"
#include "nsalab/errors.hpp"
#include "nsalab/graph_transform.hpp"
#include "nsalab/map_family.hpp"
#include "nsalab/parallel.hpp"
#include "nsalab/regularity.hpp"
#include "nsalab/trace_map.hpp"

namespace nsalab::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSubcommands{"check-cones", "compute-section", "estimate-regularity",
                                            "counterexample", "sturmian", "dimension"};

struct Context {
    Config cfg;
    fs::path out;
    std::uint64_t seed = 0;
    std::ostringstream report;

    std::ofstream open(const std::string& name) const {
        std::ofstream os(out / name, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + (out / name).string());
        return os;
    }
};

std::string yes_no(bool b) { return b ? "PASS" : "FAIL"; }

// ---- family ----------------------------------------------------------------

Eigen::Matrix2d family_matrix(const Config& c) {
    const auto m = c.get_reals("family", "matrix", {2, 1, 1, 1});
    if (m.size() != 4) throw ConfigError("[family] matrix needs 4 entries (row-major)");
    Eigen::Matrix2d a;
    a << m[0], m[1], m[2], m[3];
    return a;
}

std::vector<TrigMode> family_modes(const Config& c) {
    const auto v = c.get_ints("family", "modes", {0, 1, 0, 1, 0, 1});
    if (v.empty() || v.size() % 3 != 0) throw ConfigError("[family] modes needs triples 'k1 k2 component'");
    std::vector<TrigMode> modes;
    for (std::size_t k = 0; k < v.size(); k += 3) {
        if (v[k + 2] != 0 && v[k + 2] != 1) throw ConfigError("[family] modes component must be 0 or 1");
        modes.push_back({v[k], v[k + 1], v[k + 2]});
    }
    return modes;
}

CounterexampleParams counterexample_params(const Config& c) {
    CounterexampleParams p;
    if (c.has("family", "matrix")) p.A = family_matrix(c);
    p.b = c.get_real("counterexample", "b", p.b);
    p.theta = c.get_real("counterexample", "theta", p.theta);
    p.eps = c.get_real("counterexample", "eps", p.eps);
    p.base_ratio = c.get_real("counterexample", "base-ratio", p.base_ratio);
    p.height_pad = c.get_real("counterexample", "height-pad", p.height_pad);
    p.support_width = c.get_real("counterexample", "support-width", p.support_width);
    p.support_height = c.get_real("counterexample", "support-height", p.support_height);
    p.check();
    return p;
}

MapFamily build_family_from(const Context& ctx) {
    const Config& c = ctx.cfg;
    const std::string kind = c.get_string("family", "kind", "linear");
    const int smooth = int(c.get_int("family", "smoothness", 3));
    if (kind == "counterexample") return build_family(counterexample_params(c));

    const Eigen::Matrix2d a = family_matrix(c);
    std::function<DiffeoSpec(double)> make;
    if (kind == "linear") {
        make = [a](double) -> DiffeoSpec { return LinearSpec{a}; };
    } else if (kind == "trig-perturbed") {
        const auto modes = family_modes(c);
        make = [a, modes](double eps) -> DiffeoSpec { return TrigSpec{a, eps, modes}; };
    } else {
        throw ConfigError("[family] kind must be linear, trig-perturbed or counterexample");
    }

    const std::string mode = c.get_string("family", "sequence-mode", "constant");
    auto members = [&]() {
        const auto eps = c.get_reals("family", "explicit-list", {});
        if (eps.empty()) throw ConfigError("[family] sequence-mode " + mode + " needs explicit-list");
        std::vector<DiffeoSpec> out;
        for (double e : eps) {
            out.push_back(make(e));
            validate(out.back());
        }
        return out;
    };
    if (mode == "constant") {
        DiffeoSpec f = make(c.get_real("family", "epsilon", 0.0));
        validate(f);
        return MapFamily::constant(f, smooth);
    }
    if (mode == "periodic") return MapFamily::periodic(members(), smooth);
    if (mode == "explicit-list") return MapFamily::explicit_list(members(), smooth);
    if (mode == "random-choice") {
        const auto seed = std::uint64_t(c.get_int("family", "seed", std::int64_t(ctx.seed)));
        return MapFamily::random_choice(members(), seed, smooth);
    }
    throw ConfigError("[family] sequence-mode must be constant, periodic, random-choice or explicit-list");
}

ConeField cones_from(const Context& ctx) {
    const double mu = ctx.cfg.get_real("cones", "mu", 0.2);
    Eigen::Matrix2d a = family_matrix(ctx.cfg);
    if (ctx.cfg.get_string("family", "kind", "linear") == "counterexample") a = counterexample_params(ctx.cfg).A;
    return eigen_cones(a, mu);
}

std::size_t members_to_check(const MapFamily& fam, std::size_t n_max) {
    if (auto p = fam.period()) return std::min(n_max, *p);
    return n_max;
}

// ---- report helpers ----------------------------------------------------------

void report_diagnostics(std::ostream& r, const ContractionDiagnostics* d) {
    if (!d) {
        r << "λ̂ (lambda_hat) = n/a\nκ̂ (kappa_hat) = n/a\nΔ̂ (delta_hat) = n/a\n";
        return;
    }
    r << "λ̂ (lambda_hat, along iterated graphs) = " << fmt_real(d->lambda_hat) << '\n'
      << "κ̂ (kappa_hat) = " << fmt_real(d->kappa_hat) << '\n'
      << "Δ̂ (delta_hat) = " << fmt_real(d->delta_hat) << '\n';
    if (d->delta_beta_hat)
        r << "Δ̂_β (delta_beta_hat, beta = " << fmt_real(*d->beta) << ") = " << fmt_real(*d->delta_beta_hat) << '\n';
    else
        r << "Δ̂_β (delta_beta_hat) = n/a (no beta given)\n";
    r << "λ̂ over the whole band (sampled) = " << fmt_real(d->lambda_band) << '\n'
      << "Δ̂ over the whole band (sampled) = " << fmt_real(d->delta_band) << '\n'
      << "B̂ = " << fmt_real(d->b_hat) << '\n'
      << "M̂ = " << fmt_real(d->m_hat) << '\n'
      << "slope bound B̂^2/(1-Δ̂) = " << fmt_real(d->slope_bound) << '\n'
      << "depth = " << d->iterations << '\n'
      << "residual (section) = " << fmt_real(d->residual) << '\n'
      << "residual (derivative) = " << fmt_real(d->deriv_residual) << '\n'
      << "contraction Δ̂ < 1: " << yes_no(d->delta_hat < 1.0) << '\n';
    for (const auto& w : d->warnings) r << "warning: " << w << '\n';
}

// ---- subcommands -------------------------------------------------------------

void cmd_check_cones(Context& ctx) {
    const MapFamily fam = build_family_from(ctx);
    const ConeField cones = cones_from(ctx);
    const int grid = int(ctx.cfg.get_int("cones", "grid", 64));
    const auto n_max = std::size_t(ctx.cfg.get_int("cones", "n-max", 8));
    if (grid < 4 || n_max < 1) throw ConfigError("[cones] grid >= 4 and n-max >= 1 required");
    const std::size_t count = members_to_check(fam, n_max);

    auto os = ctx.open("cones.csv");
    os << "# schema=cones version=1\n";
    os << "n,invariant_s,invariant_u,angle_margin,eta_u,eta_s\n";
    bool all = true;
    double margin = std::numeric_limits<double>::infinity(), eta_u = margin, eta_s = margin;
    for (std::size_t n = 1; n <= count; ++n) {
        const ConeReport r = check_cones(fam[n], cones, grid);
        os << n << ',' << int(r.invariant_s) << ',' << int(r.invariant_u) << ',' << fmt_real(r.angle_margin) << ','
           << fmt_real(r.eta_u) << ',' << fmt_real(r.eta_s) << '\n';
        all = all && r.passed();
        margin = std::min(margin, r.angle_margin);
        eta_u = std::min(eta_u, r.eta_u);
        eta_s = std::min(eta_s, r.eta_s);
    }
    auto ns = ctx.open("norms.csv");
    ns << "# schema=norms version=1\n";
    ns << "n,df,df_inv,d2f,d2f_inv\n";
    for (const auto& row : norm_report(fam, count, std::max(grid, 16)))
        ns << row.n << ',' << fmt_real(row.df) << ',' << fmt_real(row.df_inv) << ',' << fmt_real(row.d2f) << ','
           << fmt_real(row.d2f_inv) << '\n';

    auto& r = ctx.report;
    r << "members checked = " << count << '\n'
      << "mu = " << fmt_real(cones.mu) << '\n'
      << "angle margin = " << fmt_real(margin) << '\n'
      << "eta_u = " << fmt_real(eta_u) << '\n'
      << "eta_s = " << fmt_real(eta_s) << '\n'
      << "common cone condition: " << yes_no(all) << '\n';
    report_diagnostics(r, nullptr);
}

Band band_from(const Context& ctx, const ConeField& cones, int grid) {
    Band band = default_band(cones, grid, ctx.cfg.get_real("section", "band-pad", 0.05));
    if (ctx.cfg.has("section", "band-radius")) band.radius = ctx.cfg.get_real("section", "band-radius", 0.0);
    band.check();
    return band;
}

SectionSolution solve_from(Context& ctx, const MapFamily& fam) {
    const ConeField cones = cones_from(ctx);
    const int grid = int(ctx.cfg.get_int("section", "grid", 128));
    if (grid < 8) throw ConfigError("[section] grid must be >= 8");
    SolveOptions opts;
    opts.tol = ctx.cfg.get_real("section", "tol", 1e-10);
    opts.max_depth = std::size_t(ctx.cfg.get_int("section", "max-depth", 200));
    if (ctx.cfg.has("section", "beta")) opts.beta = ctx.cfg.get_real("section", "beta", 0.0);
    const Band band = band_from(ctx, cones, grid);

    const ConeReport cc = common_condition(fam, cones, members_to_check(fam, 8), 32);
    ctx.report << "common cone condition (first members, grid 32): " << yes_no(cc.passed()) << '\n'
               << "band radius = " << fmt_real(band.radius) << '\n';
    try {
        return solve_section(fam, band, opts);
    } catch (const ConvergenceError& e) {
        ctx.report << "best residual = " << fmt_real(e.best_residual()) << '\n';
        throw;
    }
}

void write_section(Context& ctx, const SectionSolution& sol) {
    auto os = ctx.open("section.csv");
    write_section_csv(os, sol.sigma, &sol.deriv);
}

void cmd_compute_section(Context& ctx) {
    const MapFamily fam = build_family_from(ctx);
    const SectionSolution sol = solve_from(ctx, fam);
    write_section(ctx, sol);
    report_diagnostics(ctx.report, &sol.diagnostics);
}

void cmd_estimate_regularity(Context& ctx) {
    const MapFamily fam = build_family_from(ctx);
    const SectionSolution sol = solve_from(ctx, fam);
    write_section(ctx, sol);
    report_diagnostics(ctx.report, &sol.diagnostics);
    const auto& d = sol.diagnostics;

    const DerivField fd = finite_diff_deriv(sol.sigma);
    const double gap = sup_norm_diff(fd, sol.deriv);
    HolderOptions hopt;
    hopt.seed = ctx.seed;
    hopt.pairs = int(ctx.cfg.get_int("regularity", "holder-pairs", 200));
    hopt.exponents = ctx.cfg.get_ints("regularity", "holder-scales", hopt.exponents);
    const HolderReport hr = holder_exponent(sol.deriv, hopt);
    {
        auto os = ctx.open("holder.csv");
        write_holder_csv(os, hr);
    }

    Eigen::Matrix2d a = family_matrix(ctx.cfg);
    if (ctx.cfg.get_string("family", "kind", "linear") == "counterexample") a = counterexample_params(ctx.cfg).A;
    const auto [e_s, e_u] = eigen_directions(a);
    const auto base = ctx.cfg.get_reals("regularity", "tau-base", {0.3, 0.3});
    if (base.size() != 2) throw ConfigError("[regularity] tau-base needs 2 coordinates");
    const double offset = ctx.cfg.get_real("regularity", "tau-offset", 0.2);
    Transversal tau{TorusPoint(base[0], base[1]), Direction::of(e_u),
                    ctx.cfg.get_real("regularity", "tau-half-length", 0.05),
                    int(ctx.cfg.get_int("regularity", "tau-samples", 33))};
    Transversal tau_p = tau;
    tau_p.base = translate(tau.base, Eigen::Vector2d(offset * e_s));
    HolonomyOptions ho;
    ho.step = ctx.cfg.get_real("regularity", "step", 0.5 * sol.sigma.spacing());
    ho.max_arclen = ctx.cfg.get_real("regularity", "max-arclen", 1.0);
    const HolonomyResult h = holonomy(sol.sigma, tau, tau_p, ho);
    {
        auto os = ctx.open("holonomy.csv");
        write_holonomy_csv(os, h);
    }

    auto& r = ctx.report;
    r << "sup |H* - finite differences of sigma*| = " << fmt_real(gap) << " (grid spacing " << fmt_real(sol.sigma.spacing())
      << ")\n"
      << "beta_hat (Holder fit of H*) = " << fmt_real(hr.beta_hat) << (hr.flat ? " [flat]" : "") << '\n'
      << "fit R^2 = " << fmt_real(hr.r_squared) << '\n';
    if (d.delta_hat < 1.0 && d.kappa_hat > 1.0)
        r << "beta from contraction (largest beta with Δ̂_β < 1, -log Δ̂ / log κ̂) = "
          << fmt_real(-std::log(d.delta_hat) / std::log(d.kappa_hat)) << '\n';
    r << "holonomy crossings = " << std::count(h.crossed.begin(), h.crossed.end(), true) << '/' << h.crossed.size()
      << '\n'
      << "holonomy max stretch = " << fmt_real(h.max_stretch) << '\n';
}

void cmd_counterexample(Context& ctx) {
    const CounterexampleParams p = counterexample_params(ctx.cfg);
    const auto n_max = std::size_t(ctx.cfg.get_int("counterexample", "n-max", 12));
    BlowupOptions bo;
    bo.step = ctx.cfg.get_real("counterexample", "step", bo.step);
    const int norm_grid = int(ctx.cfg.get_int("counterexample", "norm-grid", 64));
    const MapFamily fam = build_family(p);

    auto& r = ctx.report;
    r << "b = " << fmt_real(p.b) << ", theta = " << fmt_real(p.theta) << ", eps = " << fmt_real(p.eps) << '\n';
    bool all = true;
    for (std::size_t n = 1; n <= std::min<std::size_t>(n_max, 6); ++n) {
        const PropertyReport pr = verify_properties(p, n, 48);
        r << "n = " << n << ": stable line " << yes_no(pr.stable_line_ok) << ", C1 distance "
          << fmt_real(pr.c1_distance) << ' ' << yes_no(pr.c1_ok) << ", expansion " << fmt_real(pr.min_expansion)
          << ' ' << (pr.expansion_degenerate ? "DEGENERATE (b = 0)" : yes_no(pr.expansion_ok)) << ", R'_n "
          << yes_no(pr.rprime_ok) << ", cones " << yes_no(pr.cones_ok) << '\n';
        all = all && pr.passed();
    }
    r << "properties: " << yes_no(all) << '\n';

    {
        auto ns = ctx.open("norms.csv");
        ns << "# schema=norms version=1\n";
        ns << "n,df,df_inv,d2f,d2f_inv\n";
        for (const auto& row : norm_report(fam, n_max, norm_grid))
            ns << row.n << ',' << fmt_real(row.df) << ',' << fmt_real(row.df_inv) << ',' << fmt_real(row.d2f) << ','
               << fmt_real(row.d2f_inv) << '\n';
    }
    const BlowupTable table = blowup_experiment(p, n_max, bo);
    {
        auto os = ctx.open("blowup.csv");
        write_blowup_csv(os, table);
    }
    const std::size_t valid = std::count_if(table.rows.begin(), table.rows.end(), [](const auto& w) { return w.valid; });
    r << "valid rows = " << valid << '/' << table.rows.size() << '\n';
    if (valid >= 3) {
        const double slope = fitted_log_slope(table, 1);
        r << "fitted log-ratio slope = " << fmt_real(slope) << " (log(1 + b/2) = " << fmt_real(std::log1p(p.b / 2))
          << ")\n"
          << "growth: " << yes_no(slope >= std::log1p(p.b / 2)) << '\n';
    }
    report_diagnostics(r, nullptr);
}

SpectrumApprox scan_from(Context& ctx) {
    const Config& c = ctx.cfg;
    const double lambda = c.get_real("sturmian", "lambda", 0.0);
    std::vector<int> cf;
    if (c.has("sturmian", "cf")) {
        cf = c.get_ints("sturmian", "cf", {});
    } else {
        const double alpha = c.get_real("sturmian", "alpha", (std::sqrt(5.0) - 1.0) / 2.0);
        cf = continued_fraction(alpha, std::size_t(c.get_int("sturmian", "cf-length", 12)));
    }
    const auto window = c.get_reals("sturmian", "window", {-3.0, 3.0});
    if (window.size() != 2) throw ConfigError("[sturmian] window needs 2 values");
    ScanOptions so;
    so.initial_grid = std::size_t(c.get_int("sturmian", "initial-grid", 256));
    so.refine_depth = int(c.get_int("sturmian", "refine-depth", 12));
    so.orbit.escape_radius = c.get_real("sturmian", "escape-radius", 10.0);
    so.orbit.max_iters = std::size_t(c.get_int("sturmian", "max-iters", 10000));
    const SpectrumApprox approx = spectrum_scan(lambda, cf, window[0], window[1], so);
    {
        auto os = ctx.open("spectrum.csv");
        write_spectrum_csv(os, approx);
    }
    auto& r = ctx.report;
    r << "lambda = " << fmt_real(lambda) << "\ncf prefix =";
    for (int a : cf) r << ' ' << a;
    r << " (recycled periodically)\n"
      << "intervals = " << approx.intervals.size() << '\n'
      << "total length = " << fmt_real(approx.total_length()) << '\n'
      << "final cell = " << fmt_real(approx.resolution) << '\n';
    if (!approx.intervals.empty())
        r << "hull = [" << fmt_real(approx.intervals.front().lo) << ", " << fmt_real(approx.intervals.back().hi)
          << "]\n";
    r << "verdicts are one-sided: kept energies did not escape within max-iters\n";
    return approx;
}

void cmd_sturmian(Context& ctx) {
    scan_from(ctx);
    report_diagnostics(ctx.report, nullptr);
}

void cmd_dimension(Context& ctx) {
    const SpectrumApprox approx = scan_from(ctx);
    std::vector<double> scales = ctx.cfg.get_reals("dimension", "scales", {});
    if (scales.empty()) {
        const double base = ctx.cfg.get_real("dimension", "scale-base", 2.0);
        if (!(base > 1.0)) throw ConfigError("[dimension] scale-base must exceed 1");
        std::vector<int> ex = ctx.cfg.get_ints("dimension", "scale-exponents", {});
        if (ex.empty())
            for (int e = 1; std::pow(base, -e) >= 4.0 * approx.resolution && e <= 60; ++e) ex.push_back(e);
        for (int e : ex) scales.push_back(std::pow(base, -e));
    }
    const DimensionReport dr = box_dimension(approx, scales);
    {
        auto os = ctx.open("dimension.csv");
        write_dimension_csv(os, dr);
    }
    ctx.report << "box dimension estimate = " << fmt_real(dr.dim_hat) << (dr.empty ? " [empty set]" : "") << '\n'
               << "fit R^2 = " << fmt_real(dr.r_squared) << '\n'
               << "exploratory: box-counting proxy, no reference value\n";
}

void dispatch(const std::string& sub, Context& ctx) {
    if (sub == "check-cones") return cmd_check_cones(ctx);
    if (sub == "compute-section") return cmd_compute_section(ctx);
    if (sub == "estimate-regularity") return cmd_estimate_regularity(ctx);
    if (sub == "counterexample") return cmd_counterexample(ctx);
    if (sub == "sturmian") return cmd_sturmian(ctx);
    if (sub == "dimension") return cmd_dimension(ctx);
    throw ConfigError("unknown subcommand " + sub);
}

void write_report(const Context& ctx, const std::string& sub, const std::string& status) {
    std::ofstream os(ctx.out / "report.txt", std::ios::binary);
    os << "subcommand: " << sub << '\n' << "seed: " << ctx.seed << '\n' << ctx.report.str() << "status: " << status << '\n';
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for sequential Anosov maps of the 2-torus and Sturmian trace maps"};
    std::string sub;
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    unsigned threads = 1;
    app.add_option("subcommand", sub, "check-cones | compute-section | estimate-regularity | counterexample | sturmian | dimension")
        ->required()
        ->check(CLI::IsMember(kSubcommands));
    app.add_option("--config", config_path, "configuration file (sectioned key = value)");
    app.add_option("--out", out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    Context ctx;
    try {
        ctx.cfg = config_path.empty() ? Config() : Config::load(config_path);
        const auto cfg_sub = ctx.cfg.raw("run", "subcommand");
        if (cfg_sub && *cfg_sub != sub)
            throw ConfigError("config declares subcommand " + *cfg_sub + " but " + sub + " was requested");
        ctx.seed = seed_opt->count() ? seed : std::uint64_t(ctx.cfg.get_int("run", "seed", std::int64_t(seed)));
        ctx.out = out_dir;
        fs::create_directories(ctx.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    set_thread_count(threads);

    try {
        dispatch(sub, ctx);
    } catch (const NumericalError& e) {
        ctx.report << "failure: " << e.what() << '\n';
        write_report(ctx, sub, "numerical failure");
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        ctx.report << "failure: " << e.what() << '\n';
        write_report(ctx, sub, "numerical failure");
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        ctx.report << "invalid input: " << e.what() << '\n';
        write_report(ctx, sub, "validation error");
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        ctx.report << "failure: " << e.what() << '\n';
        write_report(ctx, sub, "numerical failure");
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    write_report(ctx, sub, "ok");
    return kExitOk;
}

}  // namespace nsalab::cli
