#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "linimpute/bench.hpp"
#include "linimpute/dataset.hpp"
#include "linimpute/matrix.hpp"
#include "linimpute/rng.hpp"

namespace linimpute {

/// Parameters for the equicorrelated multivariate-normal simulations: mean 1
/// in every dimension, unit variances, common off-diagonal correlation rho.
struct SimSpec {
    std::size_t n = 2000;      // desk scale; the full protocol uses 10000
    std::size_t d = 5;
    double rho = 0.7;
    double missing_rate = 0.05;
    int repetitions = 5;       // desk scale; the full protocol uses 20
    std::uint64_t seed = 1;
};

// Offset separating the missingness stream from the data stream when both are
// derived from the same base seed.
inline constexpr std::uint64_t kInjectSeedOffset = 1000003;

inline void validate(const SimSpec& spec) {
    if (spec.n < 1 || spec.d < 1)
        throw std::invalid_argument("simspec: n and d must be >= 1");
    if (spec.repetitions < 1)
        throw std::invalid_argument("simspec: repetitions must be >= 1");
    if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0))
        throw std::invalid_argument("simspec: missing_rate must be in [0, 1)");
    const double lower = spec.d > 1 ? -1.0 / (static_cast<double>(spec.d) - 1.0) : -1.0;
    if (!(spec.rho > lower && spec.rho < 1.0))
        throw std::invalid_argument(
            "simspec: equicorrelated covariance is indefinite for rho = " +
            format_double(spec.rho) + " at d = " + std::to_string(spec.d) +
            " (needs rho in (" + format_double(lower) + ", 1))");
}

/// Samples n draws from N(1, C) where C has unit diagonal and rho
/// off-diagonal, via the Cholesky factor applied to standard normal draws.
/// Rows are generated in order, each consuming d normal variates, so the
/// output is bit-reproducible for a fixed spec.
inline Dataset mvn_equicorrelated(const SimSpec& spec) {
    validate(spec);
    const std::size_t n = spec.n, d = spec.d;

    Matrix cov(d, d, spec.rho);
    for (std::size_t i = 0; i < d; ++i) cov(i, i) = 1.0;
    const Matrix chol = cholesky(cov);

    Rng rng(spec.seed);
    Matrix values(n, d);
    std::vector<double> z(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) z[c] = rng.next_normal();
        for (std::size_t c = 0; c < d; ++c) {
            double v = 1.0; // mean
            for (std::size_t k = 0; k <= c; ++k) v += chol(c, k) * z[k];
            values(r, c) = v;
        }
    }

    std::vector<std::string> names(d);
    for (std::size_t c = 0; c < d; ++c) names[c] = "x" + std::to_string(c + 1);
    return make_dataset(std::move(values), MissingMask(n, d), std::move(names));
}

/// One sweep cell: a method's MSE on one repetition of one sweep setting.
struct SweepRow {
    std::string sweep;   // "rho" or "d"
    double value = 0.0;  // the sweep variable's value
    std::string method;
    int repetition = 0;
    std::string status;
    bool converged = false;
    std::optional<double> mse;
};

namespace detail {

inline std::vector<SweepRow> run_sweep_point(const std::string& sweep_name, double sweep_value,
                                             const SimSpec& spec,
                                             const std::vector<Method>& methods, int jobs) {
    std::vector<SweepRow> rows(methods.size() * static_cast<std::size_t>(spec.repetitions));
    parallel_for(jobs, static_cast<std::size_t>(spec.repetitions), [&](std::size_t rep) {
        SimSpec rep_spec = spec;
        rep_spec.seed = spec.seed + rep;
        const Dataset data = mvn_equicorrelated(rep_spec);
        const auto [masked, held] =
            inject_missing(data, spec.missing_rate, rep_spec.seed + kInjectSeedOffset);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            SweepRow row;
            row.sweep = sweep_name;
            row.value = sweep_value;
            row.method = method_name(methods[mi]);
            row.repetition = static_cast<int>(rep);
            if (held.empty()) {
                row.status = "no_missing_cells";
            } else {
                const MethodRun run = run_method(methods[mi], masked);
                row.status = run.status;
                row.converged = run.converged;
                if (!run.imputations.empty()) row.mse = mse(run.imputations, held);
            }
            rows[mi * static_cast<std::size_t>(spec.repetitions) + rep] = std::move(row);
        }
    });
    return rows;
}

} // namespace detail

/// MSE of each method as the common correlation varies at fixed
/// dimensionality. Repetition r reuses seed base + r at every sweep point, so
/// points share their underlying draws and are directly comparable.
inline std::vector<SweepRow> run_covariance_sweep(const std::vector<double>& rhos,
                                                  std::size_t d, const SimSpec& base,
                                                  int jobs = 1) {
    std::vector<SweepRow> rows;
    for (const double rho : rhos) {
        SimSpec spec = base;
        spec.d = d;
        spec.rho = rho;
        validate(spec);
        auto point = detail::run_sweep_point("rho", rho, spec,
                                             {Method::oli, Method::irmi, Method::mi}, jobs);
        rows.insert(rows.end(), point.begin(), point.end());
    }
    return rows;
}

/// MSE of each method as dimensionality varies at fixed common correlation.
inline std::vector<SweepRow> run_dimension_sweep(const std::vector<std::size_t>& dims,
                                                 double rho, const SimSpec& base,
                                                 int jobs = 1) {
    std::vector<SweepRow> rows;
    for (const std::size_t d : dims) {
        SimSpec spec = base;
        spec.d = d;
        spec.rho = rho;
        validate(spec);
        auto point = detail::run_sweep_point("d", static_cast<double>(d), spec,
                                             {Method::oli, Method::irmi, Method::mi}, jobs);
        rows.insert(rows.end(), point.begin(), point.end());
    }
    return rows;
}

/// Agreement statistics between two imputations of the same held-out cells:
/// Pearson correlation of the imputed values, Pearson correlation of the
/// signed errors (truth - imputed), and mean absolute deviation between the
/// two methods' values.
struct MethodAgreement {
    double value_correlation = 0.0;
    double error_correlation = 0.0;
    double mean_abs_deviation = 0.0;
    std::size_t cells = 0;
};

inline MethodAgreement compare_imputations(const Imputations& a, const Imputations& b,
                                           const HeldOut& truth) {
    if (a.size() != truth.size() || b.size() != truth.size())
        throw DataError("compare_imputations: cell counts differ");
    const auto sa = detail::sorted_cells(a);
    const auto sb = detail::sorted_cells(b);
    const auto st = detail::sorted_cells(truth);
    std::vector<double> va, vb, ea, eb;
    double mad = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) {
        if (sa[i].row != st[i].row || sa[i].col != st[i].col || sb[i].row != st[i].row ||
            sb[i].col != st[i].col)
            throw DataError("compare_imputations: imputations address different cells");
        va.push_back(sa[i].value);
        vb.push_back(sb[i].value);
        ea.push_back(st[i].value - sa[i].value);
        eb.push_back(st[i].value - sb[i].value);
        mad += std::abs(sa[i].value - sb[i].value);
    }
    MethodAgreement out;
    out.cells = st.size();
    out.mean_abs_deviation = st.empty() ? 0.0 : mad / static_cast<double>(st.size());
    out.value_correlation = pearson(va, vb);
    out.error_correlation = pearson(ea, eb);
    return out;
}

/// Runs OLI and IRMI on the same masked dataset and reports how closely the
/// two imputations agree. Absent when IRMI returns no imputations.
inline std::optional<MethodAgreement> compare_methods_pairwise(const Dataset& masked,
                                                               const HeldOut& truth,
                                                               const OliConfig& oli_cfg = {},
                                                               const IrmiConfig& irmi_cfg = {}) {
    const MethodRun oli_run = run_method(Method::oli, masked, oli_cfg, irmi_cfg);
    const MethodRun irmi_run = run_method(Method::irmi, masked, oli_cfg, irmi_cfg);
    if (oli_run.imputations.empty() || irmi_run.imputations.empty()) return std::nullopt;
    return compare_imputations(oli_run.imputations, irmi_run.imputations, truth);
}

} // namespace linimpute
