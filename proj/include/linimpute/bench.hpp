#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "linimpute/baseline.hpp"
#include "linimpute/dataset.hpp"
#include "linimpute/irmi.hpp"
#include "linimpute/oli.hpp"

namespace linimpute {

enum class Method { oli, irmi, mi, mean };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::oli: return "oli";
        case Method::irmi: return "irmi";
        case Method::mi: return "mi";
        case Method::mean: return "mean";
    }
    return "unknown";
}

inline Method parse_method(const std::string& name) {
    if (name == "oli") return Method::oli;
    if (name == "irmi") return Method::irmi;
    if (name == "mi" || name == "median") return Method::mi;
    if (name == "mean") return Method::mean;
    throw std::invalid_argument("unknown method '" + name +
                                "' (expected oli, irmi, mi/median or mean)");
}

/// Result of one method on one dataset-with-missing-cells. `imputations` is
/// empty exactly when the method failed to produce a result (IRMI divergence
/// or a singular regression).
struct MethodRun {
    std::string status; // converged | iteration_cap | diverged | singular
    bool converged = false;
    Imputations imputations;
};

inline MethodRun run_method(Method method, const Dataset& ds, const OliConfig& oli_cfg = {},
                            const IrmiConfig& irmi_cfg = {}) {
    MethodRun run;
    switch (method) {
        case Method::oli: {
            try {
                const FitResult fit_result = fit(ds, oli_cfg);
                const DesignMatrix design = build_design(ds);
                run.imputations = imputed_cells(design, fit_result.imputations,
                                                fit_result.coefficients, oli_cfg.output);
                run.converged = fit_result.converged;
                run.status = fit_result.converged ? "converged" : "iteration_cap";
            } catch (const SingularMatrixError&) {
                run.status = "singular";
            }
            break;
        }
        case Method::irmi: {
            try {
                IrmiOutcome outcome = fit_irmi(ds, irmi_cfg);
                run.status = to_string(outcome.status);
                run.converged = outcome.status == IrmiStatus::converged;
                run.imputations = std::move(outcome.imputations);
            } catch (const SingularMatrixError&) {
                run.status = "singular";
            }
            break;
        }
        case Method::mi:
            run.imputations = median_impute(ds);
            run.converged = true;
            run.status = "converged";
            break;
        case Method::mean:
            run.imputations = mean_impute(ds);
            run.converged = true;
            run.status = "converged";
            break;
    }
    return run;
}

/// Runs fn(0..count-1) on up to `jobs` worker threads. Results must be stored
/// by index inside fn; ordering of execution is unspecified.
inline void parallel_for(int jobs, std::size_t count,
                         const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> guard(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> workers;
    const std::size_t pool = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    for (std::size_t t = 0; t < pool; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

struct BenchmarkConfig {
    std::vector<Method> methods{Method::oli, Method::irmi, Method::mi};
    double rate = 0.05;
    int repetitions = 10;
    std::uint64_t seed = 1;
    int jobs = 1;
    OliConfig oli;
    IrmiConfig irmi;
};

struct RepetitionResult {
    Method method;
    int repetition;
    std::string status;
    bool converged = false;
    std::optional<double> mse; // absent when the method produced nothing
};

struct MethodSummary {
    Method method;
    int repetitions = 0;
    int converged = 0;
    std::optional<double> mean_mse; // over converged repetitions only
    std::optional<double> std_mse;  // population std over converged repetitions
};

// Missingness draws use seed + repetition so repetitions stay independent
// jobs with reproducible streams.
inline std::vector<RepetitionResult> run_benchmark_repetitions(const Dataset& standardized,
                                                               const BenchmarkConfig& cfg) {
    if (cfg.repetitions < 1)
        throw std::invalid_argument("benchmark: repetitions must be >= 1");
    std::vector<RepetitionResult> rows(cfg.methods.size() * cfg.repetitions);
    parallel_for(cfg.jobs, static_cast<std::size_t>(cfg.repetitions), [&](std::size_t rep) {
        const auto [masked, held] =
            inject_missing(standardized, cfg.rate, cfg.seed + static_cast<std::uint64_t>(rep));
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            const Method method = cfg.methods[mi];
            RepetitionResult row;
            row.method = method;
            row.repetition = static_cast<int>(rep);
            if (held.empty()) {
                row.status = "no_missing_cells";
            } else {
                const MethodRun run = run_method(method, masked, cfg.oli, cfg.irmi);
                row.status = run.status;
                row.converged = run.converged;
                if (!run.imputations.empty()) row.mse = mse(run.imputations, held);
            }
            rows[mi * cfg.repetitions + rep] = std::move(row);
        }
    });
    return rows;
}

/// Aggregates per-repetition rows into the per-method summary: converged
/// count out of repetitions, with MSE statistics over converged runs only.
inline std::vector<MethodSummary> summarize(const std::vector<RepetitionResult>& rows,
                                            const std::vector<Method>& methods) {
    std::vector<MethodSummary> out;
    for (const Method method : methods) {
        MethodSummary s;
        s.method = method;
        std::vector<double> values;
        for (const auto& row : rows) {
            if (row.method != method) continue;
            ++s.repetitions;
            if (row.converged && row.mse) {
                ++s.converged;
                values.push_back(*row.mse);
            }
        }
        if (!values.empty()) {
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(values.size());
            s.mean_mse = mean;
            s.std_mse = std::sqrt(var);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace linimpute
