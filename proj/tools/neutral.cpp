// Command-line front end: parses the shared JSON problem description,
// dispatches to the library and emits machine-readable reports.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 numerical
// non-convergence.

#include "neutral/assemblage.hpp"
#include "neutral/config.hpp"
#include "neutral/depolarization.hpp"
#include "neutral/effective.hpp"
#include "neutral/field.hpp"
#include "neutral/verifier.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using neutral::Array3;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;

void apply_thread_cap() {
    const char* env = std::getenv("NEUTRAL_INCLUSIONS_THREADS");
    if (!env) return;
    const int threads = std::atoi(env);
    if (threads <= 0) return;
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    Eigen::setNbThreads(threads);
}

void emit(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::invalid_argument("cannot open output file " + out_path);
        out << report.dump(2) << "\n";
    }
}

json axis_report(const neutral::EllipsoidSpec<double>& spec,
                 const neutral::MaterialPair<double>& mat, int axis) {
    const auto sol = neutral::make_analytic_solution(spec, mat, axis);
    return json{{"axis", axis + 1},
                {"K", sol.k},
                {"x0", sol.x0},
                {"A1", sol.a1},
                {"B2", sol.b2},
                {"sigma_star", sol.sigma_star},
                {"residual", sol.matching_residual}};
}

int cmd_depol(const neutral::ProblemConfig& cfg, const std::string& out_path) {
    const auto d_core = neutral::depolarization(neutral::semi_axes(cfg.spec, cfg.spec.rho_c));
    const auto d_ext = neutral::depolarization(neutral::semi_axes(cfg.spec, cfg.spec.rho_e));
    json report{{"d_core", {d_core[0], d_core[1], d_core[2]}},
                {"d_exterior", {d_ext[0], d_ext[1], d_ext[2]}},
                {"sum_core", d_core.sum()},
                {"sum_exterior", d_ext.sum()},
                {"theta1", neutral::volume_fraction(cfg.spec)}};
    report["K"] = {neutral::k_factor(cfg.spec, 0), neutral::k_factor(cfg.spec, 1),
                   neutral::k_factor(cfg.spec, 2)};
    emit(report, out_path);
    return 0;
}

int cmd_effective(const neutral::ProblemConfig& cfg, const std::string& out_path) {
    json report{{"theta1", neutral::volume_fraction(cfg.spec)}, {"axes", json::array()}};
    if (cfg.run.axis >= 0) {
        report["axes"].push_back(axis_report(cfg.spec, cfg.mat, cfg.run.axis));
    } else {
        for (int axis = 0; axis < 3; ++axis)
            report["axes"].push_back(axis_report(cfg.spec, cfg.mat, axis));
    }
    emit(report, out_path);
    return 0;
}

int cmd_verify(const neutral::ProblemConfig& cfg, bool control, const std::string& out_path,
               const std::string& csv_path) {
    const int axis = cfg.run.axis >= 0 ? cfg.run.axis : 0;
    const auto analytic = neutral::make_analytic_solution(cfg.spec, cfg.mat, axis);
    const auto residuals = neutral::interface_residuals(analytic, cfg.run.interface_samples,
                                                        cfg.run.seed);

    const double matrix_sigma = control ? cfg.mat.sigma2 : analytic.sigma_star;
    const auto grid = neutral::Grid::make(
        cfg.run.grid_n, 2.0 * neutral::semi_axes(cfg.spec, cfg.spec.rho_e).maxCoeff());
    const auto field =
        neutral::rasterize(cfg.spec, cfg.mat, matrix_sigma, grid, cfg.run.subsamples);
    const auto cell = neutral::solve_cell(field, cfg.mat.E, axis, cfg.run.solve);
    const auto metrics = neutral::exterior_uniformity(cell, cfg.spec, grid, cfg.mat.E, axis);
    const double sigma_eff = neutral::effective_from_cell(cell, field, grid, axis, cfg.mat.E);

    json report{{"axis", axis + 1},
                {"mode", control ? "control(non-neutral)" : "neutral"},
                {"theta1", analytic.theta1},
                {"sigma_star", analytic.sigma_star},
                {"matrix_sigma", matrix_sigma},
                {"analytic",
                 {{"max_potential_jump_core", residuals.max_potential_jump_core},
                  {"max_potential_jump_exterior", residuals.max_potential_jump_exterior},
                  {"max_flux_jump_core", residuals.max_flux_jump_core},
                  {"max_flux_jump_exterior", residuals.max_flux_jump_exterior},
                  {"potential_scale", residuals.potential_scale},
                  {"flux_scale", residuals.flux_scale},
                  {"samples", residuals.samples}}},
                {"fd",
                 {{"grid_n", grid.n},
                  {"uniformity_max_u", metrics.max_u_dev},
                  {"uniformity_max_grad", metrics.max_grad_dev},
                  {"sigma_eff", sigma_eff},
                  {"iterations", cell.cg_iterations},
                  {"converged", cell.converged},
                  {"picard_log", cell.picard_log}}}};
    emit(report, out_path);

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw std::invalid_argument("cannot open CSV file " + csv_path);
        neutral::write_field_csv(csv, cell, grid);
    }
    return cell.converged ? 0 : kExitNonConvergence;
}

int cmd_pack(const neutral::ProblemConfig& cfg, int verify_grid_n,
             const std::string& out_path) {
    auto opts = cfg.run.pack;
    opts.seed = cfg.run.seed;
    const auto assemblage = neutral::pack(cfg.spec, cfg.mat, opts);
    json report = neutral::assemblage_to_json(assemblage);
    report["target_fill"] = opts.target_fill;
    report["target_reached"] = assemblage.fill >= opts.target_fill;

    bool converged = true;
    if (verify_grid_n > 0) {
        const auto grid = neutral::Grid::make(verify_grid_n, assemblage.cell_half_width);
        const auto star = neutral::effective_conductivity(cfg.spec, cfg.mat, 0);
        const auto raster =
            neutral::assemblage_to_field(assemblage, star, grid, cfg.run.subsamples);
        const auto cell = neutral::solve_cell(raster.field, cfg.mat.E, 0, cfg.run.solve);
        const auto metrics =
            neutral::exterior_uniformity(cell, assemblage, grid, cfg.mat.E, 0);
        report["fd"] = {{"grid_n", grid.n},
                        {"sigma_star", star},
                        {"dropped_inclusions", raster.dropped_inclusions},
                        {"dropped_volume", raster.dropped_volume},
                        {"uniformity_max_u", metrics.max_u_dev},
                        {"uniformity_max_grad", metrics.max_grad_dev},
                        {"sigma_eff", neutral::effective_from_cell(cell, raster.field, grid, 0,
                                                                   cfg.mat.E)},
                        {"iterations", cell.cg_iterations},
                        {"converged", cell.converged}};
        converged = cell.converged;
    }
    emit(report, out_path);
    return converged ? 0 : kExitNonConvergence;
}

// Prototype with the same coordinate constants and rho_e but the given
// core volume fraction; used by the sweep subcommand.
neutral::EllipsoidSpec<double> with_theta1(const neutral::EllipsoidSpec<double>& spec,
                                           double theta1) {
    if (!(theta1 > 0) || !(theta1 < 1))
        throw std::invalid_argument("sweep: theta1 must lie in (0, 1)");
    const double target = theta1 * neutral::g(spec, spec.rho_e);
    if (neutral::g(spec, 0.0) >= target)
        throw std::invalid_argument("sweep: theta1 unreachable for this confocal family");
    double lo = 0.0, hi = spec.rho_e;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (neutral::g(spec, mid) < target ? lo : hi) = mid;
    }
    return neutral::EllipsoidSpec<double>::make(spec.c, 0.5 * (lo + hi), spec.rho_e);
}

int cmd_sweep(const neutral::ProblemConfig& cfg, const std::string& param,
              const std::vector<double>& values, const std::string& out_path) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::invalid_argument("cannot open output file " + out_path);
        os = &file;
    }
    os->precision(17);
    *os << "param,value,axis,theta1,K,x0,A1,B2,sigma_star,residual\n";
    for (const double v : values) {
        auto spec = cfg.spec;
        auto mat = cfg.mat;
        if (param == "theta1")
            spec = with_theta1(spec, v);
        else if (param == "p")
            mat = neutral::MaterialPair<double>::make(mat.sigma1, mat.sigma2, v, mat.E);
        else if (param == "E")
            mat = neutral::MaterialPair<double>::make(mat.sigma1, mat.sigma2, mat.p, v);
        else if (param == "sigma1")
            mat = neutral::MaterialPair<double>::make(v, mat.sigma2, mat.p, mat.E);
        else if (param == "sigma2")
            mat = neutral::MaterialPair<double>::make(mat.sigma1, v, mat.p, mat.E);
        else
            throw std::invalid_argument("sweep: unknown parameter '" + param + "'");
        const int first = cfg.run.axis >= 0 ? cfg.run.axis : 0;
        const int last = cfg.run.axis >= 0 ? cfg.run.axis : 2;
        for (int axis = first; axis <= last; ++axis) {
            const auto sol = neutral::make_analytic_solution(spec, mat, axis);
            *os << param << ',' << v << ',' << axis + 1 << ',' << sol.theta1 << ',' << sol.k
                << ',' << sol.x0 << ',' << sol.a1 << ',' << sol.b2 << ',' << sol.sigma_star
                << ',' << sol.matching_residual << '\n';
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"Coated-ellipsoid neutral inclusion toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string csv_path;
    int axis_flag = 0;  // 1..3; 0 = take from config (or all axes)
    int grid_n_flag = 0;
    long long seed_flag = -1;
    bool control = false;
    int verify_grid_n = 0;
    std::string sweep_param;
    std::vector<double> sweep_values;
    double sweep_from = 0, sweep_to = 0;
    int sweep_count = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "problem description (JSON)")->required();
        sub->add_option("--axis", axis_flag, "field axis (1, 2 or 3)")
            ->check(CLI::Range(1, 3));
        sub->add_option("--grid-n", grid_n_flag, "cells per axis for FD runs");
        sub->add_option("--seed", seed_flag, "random seed override");
        sub->add_option("--out", out_path, "write the report here instead of stdout");
    };

    auto* depol = app.add_subcommand("depol", "depolarization factors and K per axis");
    add_common(depol);
    auto* effective = app.add_subcommand("effective", "matching root and sigma* per axis");
    add_common(effective);
    auto* verify =
        app.add_subcommand("verify", "analytic residuals plus FD neutrality check");
    add_common(verify);
    verify->add_flag("--control", control, "embed in sigma2 instead of sigma* (non-neutral)");
    verify->add_option("--csv", csv_path, "write the FD potential field as CSV");
    auto* pack = app.add_subcommand("pack", "pack a desk-scale assemblage");
    add_common(pack);
    pack->add_option("--verify-grid", verify_grid_n,
                     "also FD-solve the packed cell at this resolution");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep, CSV output");
    add_common(sweep);
    sweep->add_option("--param", sweep_param, "theta1 | p | E | sigma1 | sigma2")->required();
    sweep->add_option("--values", sweep_values, "explicit list of parameter values");
    sweep->add_option("--from", sweep_from, "sweep start");
    sweep->add_option("--to", sweep_to, "sweep end");
    sweep->add_option("--count", sweep_count, "number of sweep points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        auto cfg = neutral::load_config_file(config_path);
        if (axis_flag > 0) cfg.run.axis = axis_flag - 1;
        if (grid_n_flag > 0) cfg.run.grid_n = grid_n_flag;
        if (seed_flag >= 0) {
            cfg.run.seed = static_cast<std::uint64_t>(seed_flag);
            cfg.run.pack.seed = cfg.run.seed;
        }

        if (depol->parsed()) return cmd_depol(cfg, out_path);
        if (effective->parsed()) return cmd_effective(cfg, out_path);
        if (verify->parsed()) return cmd_verify(cfg, control, out_path, csv_path);
        if (pack->parsed()) return cmd_pack(cfg, verify_grid_n, out_path);
        if (sweep->parsed()) {
            std::vector<double> values = sweep_values;
            if (values.empty()) {
                if (sweep_count < 2)
                    throw std::invalid_argument("sweep: need --values or --from/--to/--count");
                for (int i = 0; i < sweep_count; ++i)
                    values.push_back(sweep_from +
                                     (sweep_to - sweep_from) * i / (sweep_count - 1));
            }
            return cmd_sweep(cfg, sweep_param, values, out_path);
        }
        return kExitConfig;
    } catch (const neutral::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::range_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
