#pragma once

/**
 * @file cli.hpp
 * @brief Command-line front end: run configuration, schema check and the five subcommands.
 *
 * Exit codes: 0 success, 1 validation failure, 2 configuration error, 3 numeric error.
 */

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecfim/errors.hpp"
#include "ecfim/fim.hpp"
#include "ecfim/generators.hpp"
#include "ecfim/models.hpp"
#include "ecfim/sampling.hpp"

namespace ecfim::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kValidationFailed = 1, kConfigError = 2, kNumericError = 3 };

/// Copy of schemas/run_config.schema.json; a unit test keeps the two identical.
inline constexpr std::string_view kRunConfigSchema = R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "ecfim run configuration",
  "type": "object",
  "additionalProperties": false,
  "required": ["model", "generator", "kind"],
  "properties": {
    "model": {
      "type": "object",
      "additionalProperties": false,
      "required": ["name", "theta", "T"],
      "properties": {
        "name": {"type": "string", "enum": ["ula-doa", "ar1-scatter", "scalar-mean"]},
        "theta": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "M": {"type": "integer", "minimum": 1},
        "T": {"type": "integer", "minimum": 1}
      }
    },
    "generator": {
      "type": "object",
      "additionalProperties": false,
      "required": ["family"],
      "properties": {
        "family": {"type": "string", "enum": ["gaussian", "student", "tabulated"]},
        "dof": {"type": "number", "exclusiveMinimum": 0},
        "table_path": {"type": "string", "minLength": 1}
      }
    },
    "kind": {"type": "string", "enum": ["EMS", "EVS"]},
    "quadrature": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "abs_tol": {"type": "number", "exclusiveMinimum": 0},
        "max_subdivisions": {"type": "integer", "minimum": 10},
        "tail_cutoff_mass": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "seed": {"type": "integer", "minimum": 0},
    "trials": {"type": "integer", "minimum": 1000},
    "output": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "format": {"type": "string", "enum": ["csv", "json"]},
        "path": {"type": "string", "minLength": 1}
      }
    }
  }
}
)json";

// ---------------------------------------------------------------------------------------------
// Schema check. Supports the keywords used above; anything else in a schema is rejected.

namespace detail {

inline std::string show(const std::string& pointer) { return pointer.empty() ? "(root)" : pointer; }

inline std::string escape_pointer_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

inline bool has_type(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    throw ContractError("schema: unknown type '" + type + "'");
}

}  // namespace detail

inline void check_schema(const json& instance, const json& schema, const std::string& pointer = "") {
    static const std::vector<std::string> known = {"$schema", "$id", "title", "description", "type",
                                                   "enum", "minimum", "exclusiveMinimum", "minLength",
                                                   "minItems", "items", "required", "properties",
                                                   "additionalProperties"};
    for (const auto& [key, _] : schema.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ContractError("schema keyword not supported: " + key);

    const std::string where = detail::show(pointer);
    if (schema.contains("type")) {
        const auto type = schema["type"].get<std::string>();
        if (!detail::has_type(instance, type)) throw ConfigError(where, "expected " + type + ", got " + instance.dump());
    }
    if (schema.contains("enum")) {
        const auto& options = schema["enum"];
        if (std::find(options.begin(), options.end(), instance) == options.end())
            throw ConfigError(where, instance.dump() + " is not one of " + options.dump());
    }
    if (instance.is_number()) {
        const double x = instance.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>())
            throw ConfigError(where, "must be >= " + schema["minimum"].dump());
        if (schema.contains("exclusiveMinimum") && !(x > schema["exclusiveMinimum"].get<double>()))
            throw ConfigError(where, "must be > " + schema["exclusiveMinimum"].dump());
    }
    if (instance.is_string() && schema.contains("minLength") &&
        instance.get<std::string>().size() < schema["minLength"].get<std::size_t>())
        throw ConfigError(where, "string is too short");
    if (instance.is_array()) {
        if (schema.contains("minItems") && instance.size() < schema["minItems"].get<std::size_t>())
            throw ConfigError(where, "needs at least " + schema["minItems"].dump() + " items");
        if (schema.contains("items"))
            for (std::size_t i = 0; i < instance.size(); ++i)
                check_schema(instance[i], schema["items"], pointer + "/" + std::to_string(i));
    }
    if (instance.is_object()) {
        const json props = schema.value("properties", json::object());
        if (schema.contains("additionalProperties") && schema["additionalProperties"] == false)
            for (const auto& [key, _] : instance.items())
                if (!props.contains(key))
                    throw ConfigError(pointer + "/" + detail::escape_pointer_token(key), "unknown key");
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!instance.contains(key.get<std::string>()))
                    throw ConfigError(pointer + "/" + detail::escape_pointer_token(key.get<std::string>()),
                                      "required key is missing");
        for (const auto& [key, sub] : props.items())
            if (instance.contains(key)) check_schema(instance[key], sub, pointer + "/" + detail::escape_pointer_token(key));
    }
}

inline const json& run_config_schema() {
    static const json schema = json::parse(kRunConfigSchema);
    return schema;
}

// ---------------------------------------------------------------------------------------------
// Run configuration

struct RunConfig {
    std::string model_name;
    std::vector<double> theta;
    int M = 1;
    int T = 1;
    std::string family;
    std::optional<double> dof;
    std::optional<std::filesystem::path> table_path;  // resolved against the config directory
    DatasetKind kind = DatasetKind::EMS;
    QuadratureConfig quadrature{};
    std::uint64_t seed = 0;
    long trials = 100000;
    std::string format = "json";
    std::optional<std::filesystem::path> out_path;
};

/// Builds a RunConfig from parsed JSON. Relative paths resolve against `base_dir`.
inline RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir = {}) {
    check_schema(j, run_config_schema());
    RunConfig c;
    const auto& m = j["model"];
    c.model_name = m["name"].get<std::string>();
    c.theta = m["theta"].get<std::vector<double>>();
    c.M = m.value("M", 1);
    c.T = m["T"].get<int>();

    const auto& g = j["generator"];
    c.family = g["family"].get<std::string>();
    if (g.contains("dof")) c.dof = g["dof"].get<double>();
    if (g.contains("table_path")) c.table_path = base_dir / g["table_path"].get<std::string>();
    if (c.family == "student" && !c.dof) throw ConfigError("/generator/dof", "required for family \"student\"");
    if (c.family != "student" && c.dof) throw ConfigError("/generator/dof", "only allowed for family \"student\"");
    if (c.family == "tabulated" && !c.table_path)
        throw ConfigError("/generator/table_path", "required for family \"tabulated\"");
    if (c.family != "tabulated" && c.table_path)
        throw ConfigError("/generator/table_path", "only allowed for family \"tabulated\"");

    c.kind = j["kind"] == "EMS" ? DatasetKind::EMS : DatasetKind::EVS;
    if (j.contains("quadrature")) {
        const auto& q = j["quadrature"];
        c.quadrature.rel_tol = q.value("rel_tol", c.quadrature.rel_tol);
        c.quadrature.abs_tol = q.value("abs_tol", c.quadrature.abs_tol);
        c.quadrature.max_subdivisions = q.value("max_subdivisions", c.quadrature.max_subdivisions);
        c.quadrature.tail_cutoff_mass = q.value("tail_cutoff_mass", c.quadrature.tail_cutoff_mass);
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("trials")) c.trials = j["trials"].get<long>();
    if (j.contains("output")) {
        c.format = j["output"].value("format", c.format);
        if (j["output"].contains("path")) c.out_path = base_dir / j["output"]["path"].get<std::string>();
    }
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("(root)", std::string("invalid JSON: ") + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

/// Reads a two-column CSV table (t, log g). Blank lines, '#' comments and a non-numeric header
/// line are skipped.
inline DensityGenerator load_tabulated_generator(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/generator/table_path", "cannot open " + path.string());
    std::vector<double> grid, log_g;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b)) {
            throw ConfigError("/generator/table_path", path.string() + ":" + std::to_string(line_no) +
                                                           ": expected two comma-separated columns");
        }
        try {
            std::size_t ia = 0, ib = 0;
            const double t = std::stod(a, &ia), v = std::stod(b, &ib);
            grid.push_back(t);
            log_g.push_back(v);
        } catch (const std::exception&) {
            if (grid.empty() && line_no == 1) continue;  // header row
            throw ConfigError("/generator/table_path",
                              path.string() + ":" + std::to_string(line_no) + ": non-numeric entry");
        }
    }
    try {
        return DensityGenerator::tabulated(std::move(grid), std::move(log_g), "tabulated");
    } catch (const Error& e) {
        throw ConfigError("/generator/table_path", e.what());
    }
}

inline DensityGenerator build_generator(const RunConfig& c) {
    if (c.family == "gaussian") return DensityGenerator::gaussian();
    if (c.family == "student") {
        try {
            return DensityGenerator::student(*c.dof);
        } catch (const Error& e) {
            throw ConfigError("/generator/dof", e.what());
        }
    }
    return load_tabulated_generator(*c.table_path);
}

inline ParametricModel build_model(const RunConfig& c) {
    std::optional<ParametricModel> model;
    try {
        model.emplace(make_builtin_model(c.model_name, c.M, c.T));
    } catch (const ContractError& e) {
        throw ConfigError("/model/M", e.what());
    }
    if (static_cast<int>(c.theta.size()) != model->p()) {
        std::string names;
        for (const auto& n : model->param_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("/model/theta", "expected " + std::to_string(model->p()) + " values (" + names + "), got " +
                                              std::to_string(c.theta.size()));
    }
    return *model;
}

// ---------------------------------------------------------------------------------------------
// Output

/// Shortest form of the value printed with 17 significant digits (round-trips a double).
inline std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void write_json(std::ostream& os, const ordered_json& v, int indent) {
    const std::string pad(indent + 2, ' '), close(indent, ' ');
    switch (v.type()) {
        case ordered_json::value_t::object: {
            if (v.empty()) { os << "{}"; return; }
            os << "{\n";
            bool first = true;
            for (const auto& [key, val] : v.items()) {
                os << (first ? "" : ",\n") << pad << ordered_json(key).dump() << ": ";
                write_json(os, val, indent + 2);
                first = false;
            }
            os << "\n" << close << "}";
            return;
        }
        case ordered_json::value_t::array: {
            const bool flat = std::none_of(v.begin(), v.end(), [](const auto& e) { return e.is_structured(); });
            os << "[";
            for (std::size_t i = 0; i < v.size(); ++i) {
                os << (i ? (flat ? ", " : ",\n" + pad) : (flat ? "" : "\n" + pad));
                write_json(os, v[i], indent + 2);
            }
            os << (flat || v.empty() ? "]" : "\n" + close + "]");
            return;
        }
        case ordered_json::value_t::number_float: {
            const double x = v.get<double>();
            os << (std::isfinite(x) ? fmt17(x) : "null");
            return;
        }
        default: os << v.dump();
    }
}

inline ordered_json matrix_json(const RMatrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

inline ordered_json vector_json(const RVector& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline std::string join(const std::vector<std::string>& xs, const char* sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
    return out;
}

}  // namespace detail

inline std::string to_json_text(const ordered_json& v) {
    std::ostringstream os;
    detail::write_json(os, v, 0);
    os << "\n";
    return os.str();
}

/// Row-major CSV: optional "# key=value" lines, a header row of parameter names, then the rows.
inline std::string matrix_csv(const std::vector<std::string>& names, const RMatrix& m,
                              const std::vector<std::pair<std::string, std::string>>& comments = {}) {
    std::ostringstream os;
    for (const auto& [k, v] : comments) os << "# " << k << "=" << v << "\n";
    os << detail::join(names) << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) os << (k ? "," : "") << fmt17(m(i, k));
        os << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------------------------
// Subcommands. Each returns the artifact text.

inline int moments_dim(const RunConfig& c) { return c.kind == DatasetKind::EMS ? c.M : c.M * c.T; }

inline std::string cmd_moments(const RunConfig& c) {
    const auto gen = build_generator(c);
    const int dim = moments_dim(c);
    const auto m = default_moments(gen, dim, c.quadrature);
    if (c.format == "csv") {
        std::ostringstream os;
        os << "# generator=" << gen.tag() << "\n# method=" << to_string(m.method) << "\n";
        os << "dim,e_q_phi2,e_q2_phi2,est_abs_error\n";
        os << dim << "," << fmt17(m.e_q_phi2) << "," << fmt17(m.e_q2_phi2) << "," << fmt17(m.est_abs_error) << "\n";
        return os.str();
    }
    ordered_json j;
    j["generator"] = gen.tag();
    j["kind"] = to_string(c.kind);
    j["dim"] = dim;
    j["e_q_phi2"] = m.e_q_phi2;
    j["e_q2_phi2"] = m.e_q2_phi2;
    j["method"] = to_string(m.method);
    j["est_abs_error"] = m.est_abs_error;
    return to_json_text(j);
}

/// Gaussian data use the Slepian-Bangs form regardless of kind; otherwise the kind picks EMS or EVS.
inline FimMatrix compute_fim(const ModelEval& ev, const DensityGenerator& gen, DatasetKind kind, int T,
                             const QuadratureConfig& cfg) {
    if (gen.family() == GeneratorFamily::Gaussian) return fim_gaussian_sb(ev, T);
    const int dim = kind == DatasetKind::EMS ? ev.M() : ev.M() * T;
    const auto moments = default_moments(gen, dim, cfg);
    return kind == DatasetKind::EMS ? fim_ems(ev, moments, T) : fim_evs(ev, moments, T);
}

inline std::string cmd_fim(const RunConfig& c) {
    const auto model = build_model(c);
    const auto gen = build_generator(c);
    const auto ev = evaluate_model(model, model.params(c.theta));
    const auto f = compute_fim(ev, gen, c.kind, c.T, c.quadrature);
    if (c.format == "csv")
        return matrix_csv(model.param_names(), f.entries, {{"family", to_string(f.family_tag)}, {"generator", gen.tag()}});
    ordered_json j;
    j["family"] = to_string(f.family_tag);
    j["generator"] = gen.tag();
    j["parameters"] = model.param_names();
    j["fim"] = detail::matrix_json(f.entries);
    return to_json_text(j);
}

inline std::string cmd_crb(const RunConfig& c) {
    const auto model = build_model(c);
    const auto gen = build_generator(c);
    const auto ev = evaluate_model(model, model.params(c.theta));
    const auto f = compute_fim(ev, gen, c.kind, c.T, c.quadrature);
    const auto crb = crb_from_fim(f);
    const RVector diag = crb.diagonal();
    if (c.format == "csv") {
        std::vector<std::string> d;
        for (Eigen::Index i = 0; i < diag.size(); ++i) d.push_back(fmt17(diag[i]));
        return matrix_csv(model.param_names(), crb.entries,
                          {{"family", to_string(f.family_tag)},
                           {"generator", gen.tag()},
                           {"condition_estimate", fmt17(crb.condition_estimate)},
                           {"diagonal", detail::join(d)}});
    }
    ordered_json j;
    j["family"] = to_string(f.family_tag);
    j["generator"] = gen.tag();
    j["parameters"] = model.param_names();
    j["crb"] = detail::matrix_json(crb.entries);
    j["diagonal"] = detail::vector_json(diag);
    j["condition_estimate"] = crb.condition_estimate;
    return to_json_text(j);
}

inline std::string cmd_validate(const RunConfig& c, unsigned threads, bool& passed, std::ostream& err) {
    const auto model = build_model(c);
    const auto gen = build_generator(c);
    if (c.trials < tol::kMinTrials)
        throw ConfigError("/trials", "must be at least " + std::to_string(tol::kMinTrials));
    McOptions opt;
    opt.threads = threads;
    opt.quadrature = c.quadrature;
    const auto rep = empirical_fim(model, model.params(c.theta), gen, c.T, c.kind, c.trials, c.seed, opt);
    passed = rep.passed();
    if (rep.inconclusive) err << "warning: Monte Carlo stderr exceeds 20% of a FIM entry; increase --trials\n";

    const auto& names = model.param_names();
    if (c.format == "csv") {
        std::ostringstream os;
        const std::vector<std::pair<std::string, std::string>> summary = {
            {"kind", to_string(c.kind)},
            {"generator", gen.tag()},
            {"seed", std::to_string(c.seed)},
            {"n_trials", std::to_string(rep.n_trials)},
            {"max_rel_err", fmt17(rep.max_rel_err)},
            {"max_fim_z", fmt17(rep.max_fim_z)},
            {"max_score_z", fmt17(rep.max_score_z)},
            {"fim_consistent", rep.fim_consistent ? "true" : "false"},
            {"score_zero_mean", rep.score_zero_mean ? "true" : "false"},
            {"inconclusive", rep.inconclusive ? "true" : "false"},
            {"passed", rep.passed() ? "true" : "false"}};
        for (const auto& [k, v] : summary) os << "# " << k << "=" << v << "\n";
        os << "row,col,empirical,analytic,stderr\n";
        for (int a = 0; a < model.p(); ++a)
            for (int b = a; b < model.p(); ++b)
                os << names[a] << "," << names[b] << "," << fmt17(rep.empirical.entries(a, b)) << ","
                   << fmt17(rep.analytic.entries(a, b)) << "," << fmt17(rep.per_entry_stderr(a, b)) << "\n";
        return os.str();
    }
    ordered_json j;
    j["kind"] = to_string(c.kind);
    j["generator"] = gen.tag();
    j["seed"] = c.seed;
    j["n_trials"] = rep.n_trials;
    j["parameters"] = names;
    j["family"] = to_string(rep.analytic.family_tag);
    j["analytic"] = detail::matrix_json(rep.analytic.entries);
    j["empirical"] = detail::matrix_json(rep.empirical.entries);
    j["per_entry_stderr"] = detail::matrix_json(rep.per_entry_stderr);
    j["score_mean"] = detail::vector_json(rep.score_mean);
    j["score_mean_stderr"] = detail::vector_json(rep.score_mean_stderr);
    j["max_rel_err"] = rep.max_rel_err;
    j["max_fim_z"] = rep.max_fim_z;
    j["max_score_z"] = rep.max_score_z;
    j["fim_consistent"] = rep.fim_consistent;
    j["score_zero_mean"] = rep.score_zero_mean;
    j["inconclusive"] = rep.inconclusive;
    j["passed"] = rep.passed();
    return to_json_text(j);
}

inline std::string cmd_sample(const RunConfig& c) {
    const auto model = build_model(c);
    const auto gen = build_generator(c);
    RngStream rng(c.seed, 0);
    const auto x = sample_dataset(model, model.params(c.theta), gen, c.T, c.kind, rng, c.quadrature);
    ordered_json header;
    header["kind"] = to_string(x.kind);
    header["generator"] = x.generator_tag;
    header["seed"] = x.seed;
    header["stream_index"] = x.stream_index;
    header["M"] = c.M;
    header["T"] = c.T;
    if (c.format == "csv") {
        std::ostringstream os;
        os << "# " << header.dump() << "\n" << "t,m,re,im\n";
        for (int t = 0; t < c.T; ++t)
            for (int m = 0; m < c.M; ++m)
                os << t << "," << m << "," << fmt17(x.snapshots(m, t).real()) << "," << fmt17(x.snapshots(m, t).imag())
                   << "\n";
        return os.str();
    }
    ordered_json j = header;
    j["re"] = detail::matrix_json(x.snapshots.real());
    j["im"] = detail::matrix_json(x.snapshots.imag());
    return to_json_text(j);
}

// ---------------------------------------------------------------------------------------------
// Entry point

namespace detail {

inline std::string numeric_error_path(const NumericError& e) {
    if (const auto* d = dynamic_cast<const DomainError*>(&e); d && d->parameter_index())
        return "/model/theta/" + std::to_string(*d->parameter_index());
    if (const auto* b = dynamic_cast<const BoundaryError*>(&e); b && b->parameter_index())
        return "/model/theta/" + std::to_string(*b->parameter_index());
    if (dynamic_cast<const DefinitenessError*>(&e) || dynamic_cast<const SingularityError*>(&e) ||
        dynamic_cast<const DomainError*>(&e))
        return "/model/theta";
    return "/generator";
}

}  // namespace detail

/// Runs one CLI invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Fisher information and Cramer-Rao bounds for complex elliptical data", "ecfim"};
    app.require_subcommand(1);

    std::string config_path, format, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<long> trials;
    std::optional<double> rel_tol;
    unsigned threads = 0;

    const std::vector<std::pair<std::string, std::string>> subcommands = {
        {"moments", "E[Q phi^2] and E[Q^2 phi^2] of the generator at dim M (EMS) or MT (EVS)"},
        {"fim", "Fisher information matrix with family tag"},
        {"crb", "Cramer-Rao bound and its diagonal"},
        {"validate", "Monte Carlo check of the closed-form FIM and the score mean"},
        {"sample", "one EC dataset drawn from the configured model"}};
    for (const auto& [name, help] : subcommands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--seed", seed, "master seed, overrides the config");
        sub->add_option("--trials", trials, "Monte Carlo trials for validate");
        sub->add_option("--out", out_path, "output file (default: stdout)");
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--quadrature-rel-tol", rel_tol, "relative tolerance of adaptive quadrature");
        sub->add_option("--threads", threads, "worker threads for validate (0: all cores)");
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kConfigError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        RunConfig cfg = load_run_config(config_path);
        if (seed) cfg.seed = *seed;
        if (trials) cfg.trials = *trials;
        if (!format.empty()) cfg.format = format;
        if (!out_path.empty()) cfg.out_path = out_path;
        if (rel_tol) cfg.quadrature.rel_tol = *rel_tol;
        try {
            cfg.quadrature.validate();
        } catch (const ContractError& e) {
            throw ConfigError("/quadrature", e.what());
        }

        std::string text;
        bool passed = true;
        if (command == "moments") text = cmd_moments(cfg);
        else if (command == "fim") text = cmd_fim(cfg);
        else if (command == "crb") text = cmd_crb(cfg);
        else if (command == "validate") text = cmd_validate(cfg, threads, passed, err);
        else text = cmd_sample(cfg);

        if (cfg.out_path) {
            std::ofstream file(*cfg.out_path, std::ios::binary);
            if (!file) throw ConfigError("/output/path", "cannot write " + cfg.out_path->string());
            file << text;
        } else {
            out << text;
        }
        return passed ? kOk : kValidationFailed;
    } catch (const ConfigError& e) {
        err << "config error at " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericError& e) {
        err << "numeric error at " << detail::numeric_error_path(e) << ": " << e.what() << "\n";
        return kNumericError;
    } catch (const ContractError& e) {
        err << "config error at (root): " << e.what() << "\n";
        return kConfigError;
    }
}

}  // namespace ecfim::cli
