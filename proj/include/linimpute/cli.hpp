#pragma once

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "linimpute/bench.hpp"
#include "linimpute/dataset.hpp"
#include "linimpute/synthetic.hpp"
#include "linimpute/version.hpp"

namespace linimpute {

// Exit codes shared by all subcommands; part of the public contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitSolverFailure = 2;
inline constexpr int kExitDiverged = 3;

/// Seed used when no --seed flag is given: the LINIMPUTE_SEED environment
/// variable if set, otherwise 1.
inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("LINIMPUTE_SEED")) {
        try {
            return static_cast<std::uint64_t>(std::stoull(env));
        } catch (const std::exception&) {
            throw std::invalid_argument("LINIMPUTE_SEED is not an unsigned integer: '" +
                                        std::string(env) + "'");
        }
    }
    return 1;
}

inline std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline OutputVariant parse_variant(const std::string& name) {
    if (name == "direct") return OutputVariant::direct;
    if (name == "regressed") return OutputVariant::regressed;
    throw std::invalid_argument("unknown variant '" + name + "' (expected direct or regressed)");
}

inline const char* variant_name(OutputVariant v) {
    return v == OutputVariant::direct ? "direct" : "regressed";
}

namespace detail {

using MetaFields = std::vector<std::pair<std::string, std::string>>;

// Reports start with '#' comment lines carrying the full configuration, the
// seed and the PRNG id; the timestamp is the only line allowed to differ
// between identical runs.
inline void write_report_header(std::ostream& os, const std::string& title,
                                const MetaFields& fields) {
    os << "# linimpute " << title << "\n";
    os << "# version: " << kVersion << "\n";
    os << "# prng: " << Rng::kAlgorithmId << "\n";
    for (const auto& [key, value] : fields) os << "# " << key << ": " << value << "\n";
    os << "# timestamp: " << timestamp_utc() << "\n";
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open output file '" + path + "'");
    return os;
}

} // namespace detail

struct ImputeOptions {
    std::string input;
    std::string output;
    std::string diagnostics; // defaults to output + ".json"
    std::string method = "oli";
    std::string missing_token;
    std::string variant = "direct";
    double lambda = 0.0;
};

/// Fills the missing cells of a CSV file and writes the completed file plus a
/// JSON diagnostics report. Original observed values are preserved exactly as
/// parsed. Exit codes: 0 ok, 1 input error, 2 solver failure, 3 divergence.
inline int cmd_impute(const ImputeOptions& opts, std::ostream& err = std::cerr) {
    Dataset ds;
    Method method;
    OutputVariant variant;
    try {
        method = parse_method(opts.method);
        variant = parse_variant(opts.variant);
        ds = load_csv(opts.input, opts.missing_token);
    } catch (const std::exception& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitInputError;
    }

    nlohmann::json diag;
    diag["command"] = "impute";
    diag["version"] = kVersion;
    diag["prng"] = Rng::kAlgorithmId;
    diag["input"] = opts.input;
    diag["method"] = method_name(method);
    diag["missing_token"] = opts.missing_token;
    diag["variant"] = variant_name(variant);
    diag["lambda"] = opts.lambda;
    diag["rows"] = ds.rows();
    diag["columns"] = ds.cols();
    diag["missing_cells"] = ds.mask.count();

    Imputations imputations;
    try {
        switch (method) {
            case Method::oli: {
                OliConfig cfg;
                cfg.lambda = opts.lambda;
                cfg.output = variant;
                const FitResult result = fit(ds, cfg);
                imputations = imputed_cells(build_design(ds), result.imputations,
                                            result.coefficients, variant);
                diag["solver"] = {{"converged", result.converged},
                                  {"outer_iterations", result.outer_iterations},
                                  {"objective_trace", result.objective_trace},
                                  {"closed_form_fallbacks", result.closed_form_fallbacks},
                                  {"warnings", result.warnings}};
                break;
            }
            case Method::irmi: {
                const IrmiOutcome outcome = fit_irmi(ds);
                if (outcome.status == IrmiStatus::diverged) {
                    err << "linimpute: irmi diverged after " << outcome.iterations
                        << " sweep(s): an imputed value grew beyond 10^6 times its column's "
                           "observed scale (or became non-finite); no output written\n";
                    return kExitDiverged;
                }
                imputations = outcome.imputations;
                diag["solver"] = {{"status", to_string(outcome.status)},
                                  {"iterations", outcome.iterations},
                                  {"change_trace", outcome.change_trace}};
                break;
            }
            case Method::mi:
                imputations = median_impute(ds);
                break;
            case Method::mean:
                imputations = mean_impute(ds);
                break;
        }
    } catch (const SingularMatrixError& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const DataError& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitInputError;
    }

    diag["imputed_cells"] = imputations.size();
    diag["timestamp"] = timestamp_utc();

    try {
        const Dataset completed = apply_imputations(ds, imputations);
        auto os = detail::open_output(opts.output);
        write_csv(os, completed, opts.missing_token);
        const std::string diag_path =
            opts.diagnostics.empty() ? opts.output + ".json" : opts.diagnostics;
        auto ds_os = detail::open_output(diag_path);
        ds_os << diag.dump(2) << "\n";
    } catch (const DataError& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitOk;
}

struct BenchmarkCmdOptions {
    std::string input;
    std::string output;
    std::vector<std::string> methods{"oli", "irmi", "mi"};
    double rate = 0.05;
    int repetitions = 10;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string variant = "direct";
    double lambda = 0.0;
};

/// Standardizes a complete CSV, repeatedly injects missing cells, runs every
/// requested method and reports per-method MSE statistics over converged
/// repetitions. One method failing shows up as a converged-count shortfall,
/// never as a command failure.
inline int cmd_benchmark(const BenchmarkCmdOptions& opts, std::ostream& err = std::cerr) {
    try {
        BenchmarkConfig cfg;
        cfg.methods.clear();
        for (const auto& name : opts.methods) cfg.methods.push_back(parse_method(name));
        cfg.rate = opts.rate;
        cfg.repetitions = opts.repetitions;
        cfg.seed = opts.seed ? *opts.seed : default_seed();
        cfg.jobs = opts.jobs;
        cfg.oli.output = parse_variant(opts.variant);
        cfg.oli.lambda = opts.lambda;

        const Dataset raw = load_csv(opts.input);
        if (raw.mask.any())
            throw DataError("benchmark: input must be complete (ground truth required); '" +
                            opts.input + "' has missing cells");
        auto [standardized, params] = standardize(raw);

        const auto rows = run_benchmark_repetitions(standardized, cfg);
        const auto summaries = summarize(rows, cfg.methods);

        std::string method_list;
        for (const auto& name : opts.methods) {
            if (!method_list.empty()) method_list += ",";
            method_list += name;
        }
        detail::MetaFields meta{
            {"input", opts.input},
            {"rows", std::to_string(raw.rows())},
            {"features", std::to_string(raw.cols())},
            {"methods", method_list},
            {"rate", format_double(cfg.rate)},
            {"repetitions", std::to_string(cfg.repetitions)},
            {"seed", std::to_string(cfg.seed)},
            {"variant", opts.variant},
            {"lambda", format_double(cfg.oli.lambda)},
            {"mean_abs_correlation (mean absolute pairwise Pearson, observed data)",
             format_double(mean_abs_pairwise_correlation(raw))},
        };

        bool any_cells = false;
        for (const auto& row : rows)
            if (row.status != "no_missing_cells") any_cells = true;

        std::ostringstream body;
        detail::write_report_header(body, "benchmark report", meta);
        if (!any_cells)
            body << "# note: rate rounds to zero held-out cells; MSE is undefined\n";
        body << "method,repetitions,converged,mean_mse,std_mse\n";
        for (const auto& s : summaries)
            body << method_name(s.method) << ',' << s.repetitions << ',' << s.converged << ','
                 << detail::format_optional(s.mean_mse) << ','
                 << detail::format_optional(s.std_mse) << "\n";

        if (opts.output.empty()) {
            std::cout << body.str();
        } else {
            auto os = detail::open_output(opts.output);
            os << body.str();
        }
        return kExitOk;
    } catch (const SingularMatrixError& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitInputError;
    }
}

struct SimulateCmdOptions {
    std::string figure = "2a"; // 1, 2a or 2b
    std::string scale = "desk";
    std::string output;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::optional<std::size_t> n;
    std::optional<int> repetitions;
    std::optional<double> rate;
};

/// Emits plot-ready long-format CSV for the simulation protocols: imputed
/// value pairs for the method-agreement scatter (figure 1), an MSE sweep over
/// the common correlation (figure 2a) or over dimensionality (figure 2b).
inline int cmd_simulate(const SimulateCmdOptions& opts, std::ostream& err = std::cerr) {
    try {
        if (opts.scale != "desk" && opts.scale != "paper")
            throw std::invalid_argument("unknown scale '" + opts.scale +
                                        "' (expected desk or paper)");
        SimSpec spec;
        spec.n = opts.scale == "desk" ? 2000 : 10000;
        spec.repetitions = opts.scale == "desk" ? 5 : 20;
        spec.seed = opts.seed ? *opts.seed : default_seed();
        if (opts.n) spec.n = *opts.n;
        if (opts.repetitions) spec.repetitions = *opts.repetitions;
        if (opts.rate) spec.missing_rate = *opts.rate;

        detail::MetaFields meta{
            {"figure", opts.figure},
            {"scale", opts.scale},
            {"samples", std::to_string(spec.n)},
            {"repetitions", std::to_string(spec.repetitions)},
            {"rate", format_double(spec.missing_rate)},
            {"seed", std::to_string(spec.seed)},
        };

        std::ostringstream body;
        if (opts.figure == "2a") {
            std::vector<double> rhos;
            if (opts.scale == "desk") rhos = {0.1, 0.3, 0.5, 0.7, 0.9};
            else rhos = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
            detail::write_report_header(body, "simulation report", meta);
            body << "rho,method,repetition,status,mse\n";
            for (const auto& row : run_covariance_sweep(rhos, 5, spec, opts.jobs))
                body << format_double(row.value) << ',' << row.method << ',' << row.repetition
                     << ',' << row.status << ',' << detail::format_optional(row.mse) << "\n";
        } else if (opts.figure == "2b") {
            std::vector<std::size_t> dims;
            if (opts.scale == "desk") dims = {3, 5, 10, 15, 20};
            else for (std::size_t d = 3; d <= 20; ++d) dims.push_back(d);
            detail::write_report_header(body, "simulation report", meta);
            body << "d,method,repetition,status,mse\n";
            for (const auto& row : run_dimension_sweep(dims, 0.7, spec, opts.jobs))
                body << static_cast<std::size_t>(row.value) << ',' << row.method << ','
                     << row.repetition << ',' << row.status << ','
                     << detail::format_optional(row.mse) << "\n";
        } else if (opts.figure == "1") {
            detail::write_report_header(body, "simulation report", meta);
            body << "repetition,row,col,true_value,oli,irmi\n";
            for (int rep = 0; rep < spec.repetitions; ++rep) {
                SimSpec rep_spec = spec;
                rep_spec.seed = spec.seed + static_cast<std::uint64_t>(rep);
                const Dataset data = mvn_equicorrelated(rep_spec);
                const auto [masked, held] = inject_missing(data, spec.missing_rate,
                                                           rep_spec.seed + kInjectSeedOffset);
                const MethodRun oli_run = run_method(Method::oli, masked);
                const MethodRun irmi_run = run_method(Method::irmi, masked);
                if (oli_run.imputations.empty() || irmi_run.imputations.empty()) {
                    body << "# repetition " << rep << " skipped: oli " << oli_run.status
                         << ", irmi " << irmi_run.status << "\n";
                    continue;
                }
                const auto oli_cells = detail::sorted_cells(oli_run.imputations);
                const auto irmi_cells = detail::sorted_cells(irmi_run.imputations);
                const auto truth = detail::sorted_cells(held);
                for (std::size_t i = 0; i < truth.size(); ++i)
                    body << rep << ',' << truth[i].row << ',' << truth[i].col << ','
                         << format_double(truth[i].value) << ','
                         << format_double(oli_cells[i].value) << ','
                         << format_double(irmi_cells[i].value) << "\n";
            }
        } else {
            throw std::invalid_argument("unknown figure '" + opts.figure +
                                        "' (expected 1, 2a or 2b)");
        }

        if (opts.output.empty()) {
            std::cout << body.str();
        } else {
            auto os = detail::open_output(opts.output);
            os << body.str();
        }
        return kExitOk;
    } catch (const SingularMatrixError& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        err << "linimpute: " << e.what() << "\n";
        return kExitInputError;
    }
}

} // namespace linimpute
