#pragma once

#include "neutral/assemblage.hpp"
#include "neutral/effective.hpp"
#include "neutral/geometry.hpp"
#include "neutral/verifier.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <string>

namespace neutral {

/// Runtime knobs shared by the CLI subcommands.
struct RunParams {
    int axis = -1;  // 0..2, or -1 for "all axes"
    int grid_n = 64;
    std::uint64_t seed = 1;
    int subsamples = 3;
    int interface_samples = 500;
    SolveOptions solve;
    PackOptions pack;
};

/// Parsed problem description: geometry + materials + run block.
struct ProblemConfig {
    EllipsoidSpec<double> spec;
    MaterialPair<double> mat;
    RunParams run;
};

namespace detail {

inline Array3<double> array3_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("config: '" + key + "' must be an array of 3 numbers");
    return Array3<double>(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

// Confocal prototype through the given core/exterior semi-axes.  The
// family constant is underdetermined (any rho_c > 0 works); rho_c is
// pinned at half the smallest core semi-axis squared.
inline EllipsoidSpec<double> spec_from_semi_axes(const Array3<double>& l_c,
                                                 const Array3<double>& l_e) {
    if (!(l_c > 0.0).all() || !(l_e > l_c).all())
        throw std::invalid_argument("config: semi-axes must satisfy 0 < core < exterior");
    const Array3<double> delta = l_e * l_e - l_c * l_c;
    const double mean_delta = delta.mean();
    if (((delta - mean_delta).abs() > 1e-9 * mean_delta).any())
        throw std::invalid_argument(
            "config: semi-axes are not confocal (l_e^2 - l_c^2 must be equal across axes)");
    const double rho_c = 0.5 * (l_c * l_c).minCoeff();
    const Array3<double> c = (l_c * l_c - rho_c).sqrt();
    return EllipsoidSpec<double>::make(c, rho_c, rho_c + mean_delta);
}

// Confocal prototype with the given exterior semi-axes and core volume
// fraction.  Solves prod(l_e^2 - delta) = theta1^2 prod(l_e^2) for the
// confocal gap delta by bisection (the left side is strictly decreasing).
inline EllipsoidSpec<double> spec_from_theta1(double theta1, const Array3<double>& l_e) {
    if (!(theta1 > 0.0) || !(theta1 < 1.0))
        throw std::invalid_argument("config: theta1 must lie in (0, 1)");
    if (!(l_e > 0.0).all())
        throw std::invalid_argument("config: exterior semi-axes must be positive");
    const Array3<double> le2 = l_e * l_e;
    const double target = theta1 * theta1 * le2.prod();
    double lo = 0.0, hi = le2.minCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((le2 - mid).prod() > target ? lo : hi) = mid;
    }
    const double delta = 0.5 * (lo + hi);
    const double rho_e = 0.5 * (delta + le2.minCoeff());
    const Array3<double> c = (le2 - rho_e).sqrt();
    return EllipsoidSpec<double>::make(c, rho_e - delta, rho_e);
}

}  // namespace detail

/// Builds the prototype from the geometry block.  Exactly one of the
/// four parameterizations must be present:
///   {"c": [c1,c2,c3], "rho_c": .., "rho_e": ..}
///   {"sphere": {"r_core": .., "r_exterior": ..}}
///   {"semi_axes_core": [..], "semi_axes_exterior": [..]}
///   {"theta1": .., "semi_axes_exterior": [..]}
inline EllipsoidSpec<double> spec_from_json(const nlohmann::json& geom) {
    const bool has_c = geom.contains("c");
    const bool has_sphere = geom.contains("sphere");
    const bool has_axes = geom.contains("semi_axes_core");
    const bool has_theta = geom.contains("theta1");
    if (has_c + has_sphere + has_axes + has_theta != 1)
        throw std::invalid_argument(
            "config: exactly one geometry parameterization must be present");

    if (has_c) {
        if (!geom.contains("rho_c") || !geom.contains("rho_e"))
            throw std::invalid_argument("config: 'c' geometry needs rho_c and rho_e");
        return EllipsoidSpec<double>::make(detail::array3_from_json(geom["c"], "c"),
                                           geom["rho_c"].get<double>(),
                                           geom["rho_e"].get<double>());
    }
    if (has_sphere) {
        const auto& s = geom["sphere"];
        if (!s.contains("r_core") || !s.contains("r_exterior"))
            throw std::invalid_argument("config: sphere geometry needs r_core and r_exterior");
        return EllipsoidSpec<double>::make_sphere(s["r_core"].get<double>(),
                                                  s["r_exterior"].get<double>());
    }
    if (has_axes) {
        if (!geom.contains("semi_axes_exterior"))
            throw std::invalid_argument("config: semi-axes geometry needs both families");
        return detail::spec_from_semi_axes(
            detail::array3_from_json(geom["semi_axes_core"], "semi_axes_core"),
            detail::array3_from_json(geom["semi_axes_exterior"], "semi_axes_exterior"));
    }
    if (!geom.contains("semi_axes_exterior"))
        throw std::invalid_argument("config: theta1 geometry needs semi_axes_exterior");
    return detail::spec_from_theta1(
        geom["theta1"].get<double>(),
        detail::array3_from_json(geom["semi_axes_exterior"], "semi_axes_exterior"));
}

inline ProblemConfig load_config(const nlohmann::json& j) {
    if (!j.contains("geometry") || !j.contains("materials"))
        throw std::invalid_argument("config: need 'geometry' and 'materials' blocks");

    ProblemConfig cfg{spec_from_json(j["geometry"]),
                      MaterialPair<double>{1, 1, 2, 1},
                      RunParams{}};

    const auto& m = j["materials"];
    for (const char* key : {"sigma1", "sigma2", "p", "E"})
        if (!m.contains(key))
            throw std::invalid_argument(std::string("config: materials block missing ") + key);
    cfg.mat = MaterialPair<double>::make(m["sigma1"].get<double>(), m["sigma2"].get<double>(),
                                         m["p"].get<double>(), m["E"].get<double>());

    if (j.contains("run")) {
        const auto& r = j["run"];
        if (r.contains("axis")) {
            const int axis = r["axis"].get<int>();
            if (axis < 1 || axis > 3)
                throw std::invalid_argument("config: run.axis must be 1, 2 or 3");
            cfg.run.axis = axis - 1;
        }
        if (r.contains("grid_n")) cfg.run.grid_n = r["grid_n"].get<int>();
        if (r.contains("seed")) cfg.run.seed = r["seed"].get<std::uint64_t>();
        if (r.contains("subsamples")) cfg.run.subsamples = r["subsamples"].get<int>();
        if (r.contains("interface_samples"))
            cfg.run.interface_samples = r["interface_samples"].get<int>();
        if (r.contains("tol_linear")) cfg.run.solve.tol_linear = r["tol_linear"].get<double>();
        if (r.contains("tol_picard")) cfg.run.solve.tol_picard = r["tol_picard"].get<double>();
        if (r.contains("max_iter")) cfg.run.solve.max_picard = r["max_iter"].get<int>();
        if (r.contains("omega")) cfg.run.solve.omega = r["omega"].get<double>();
        if (r.contains("target_fill")) cfg.run.pack.target_fill = r["target_fill"].get<double>();
        if (r.contains("max_inclusions"))
            cfg.run.pack.max_inclusions = r["max_inclusions"].get<int>();
        if (r.contains("ladder_levels"))
            cfg.run.pack.ladder_levels = r["ladder_levels"].get<int>();
        if (r.contains("ladder_ratio"))
            cfg.run.pack.ladder_ratio = r["ladder_ratio"].get<double>();
        cfg.run.pack.seed = cfg.run.seed;
    }
    return cfg;
}

inline ProblemConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    try {
        return load_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

/// Assemblage serialization: prototype parameters plus {center, scale}
/// records.  nlohmann emits doubles with shortest round-trip precision,
/// so re-parsing reproduces the values exactly.
inline nlohmann::json assemblage_to_json(const Assemblage& assemblage) {
    nlohmann::json j;
    j["prototype"] = {{"c", {assemblage.prototype.c[0], assemblage.prototype.c[1],
                             assemblage.prototype.c[2]}},
                      {"rho_c", assemblage.prototype.rho_c},
                      {"rho_e", assemblage.prototype.rho_e}};
    j["materials"] = {{"sigma1", assemblage.materials.sigma1},
                      {"sigma2", assemblage.materials.sigma2},
                      {"p", assemblage.materials.p},
                      {"E", assemblage.materials.E}};
    j["cell_half_width"] = assemblage.cell_half_width;
    j["theta1"] = assemblage.theta1;
    j["K"] = {assemblage.k_factors[0], assemblage.k_factors[1], assemblage.k_factors[2]};
    j["fill"] = assemblage.fill;
    j["inclusions"] = nlohmann::json::array();
    for (const auto& inc : assemblage.inclusions)
        j["inclusions"].push_back(
            {{"center", {inc.center[0], inc.center[1], inc.center[2]}}, {"scale", inc.scale}});
    return j;
}

inline Assemblage assemblage_from_json(const nlohmann::json& j) {
    const auto& p = j.at("prototype");
    const auto& m = j.at("materials");
    Assemblage assemblage{
        EllipsoidSpec<double>::make(detail::array3_from_json(p.at("c"), "c"),
                                    p.at("rho_c").get<double>(), p.at("rho_e").get<double>()),
        MaterialPair<double>::make(m.at("sigma1").get<double>(), m.at("sigma2").get<double>(),
                                   m.at("p").get<double>(), m.at("E").get<double>()),
        j.at("cell_half_width").get<double>(),
        {},
        j.at("fill").get<double>(),
        j.at("theta1").get<double>(),
        Array3<double>::Zero()};
    const auto& karr = j.at("K");
    for (int axis = 0; axis < 3; ++axis) assemblage.k_factors[axis] = karr[axis].get<double>();
    for (const auto& inc : j.at("inclusions")) {
        const auto& c = inc.at("center");
        assemblage.inclusions.push_back(
            {Vector3<double>(c[0].get<double>(), c[1].get<double>(), c[2].get<double>()),
             inc.at("scale").get<double>()});
    }
    return assemblage;
}

}  // namespace neutral
