#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "linimpute/baseline.hpp"
#include "linimpute/dataset.hpp"
#include "linimpute/matrix.hpp"

namespace linimpute {

struct IrmiConfig {
    int max_iter = 50;
    double divergence_ratio = 6.0; // orders of magnitude over the column scale
    double tol = 1e-6;             // max absolute change of imputed values between sweeps
};

inline void validate(const IrmiConfig& cfg) {
    if (cfg.max_iter < 1) throw std::invalid_argument("irmi: max_iter must be >= 1");
    if (!(cfg.divergence_ratio > 0.0))
        throw std::invalid_argument("irmi: divergence_ratio must be > 0");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("irmi: tol must be > 0");
}

enum class IrmiStatus { converged, iteration_cap, diverged };

inline const char* to_string(IrmiStatus s) {
    switch (s) {
        case IrmiStatus::converged: return "converged";
        case IrmiStatus::iteration_cap: return "iteration_cap";
        case IrmiStatus::diverged: return "diverged";
    }
    return "unknown";
}

struct IrmiOutcome {
    IrmiStatus status = IrmiStatus::iteration_cap;
    Imputations imputations; // empty when diverged
    int iterations = 0;      // completed sweeps
    std::vector<double> change_trace; // max |change| of imputed values per sweep
};

/// Iterative regression imputation: median-seed the missing cells, then sweep
/// the features in ascending index order, re-fitting each feature's linear
/// regression on all other (currently imputed) features over the rows where
/// the feature is observed, and re-predicting its missing rows.
///
/// The sweep has no convergence guarantee; imputed values whose magnitude
/// grows beyond 10^divergence_ratio times the column's observed scale (median
/// absolute observed value), or turn non-finite, abort the fit with a
/// `diverged` outcome that carries no imputations.
inline IrmiOutcome fit_irmi(const Dataset& ds, const IrmiConfig& cfg = {}) {
    validate(cfg);
    const std::size_t n = ds.rows(), d = ds.cols();
    for (std::size_t c = 0; c < d; ++c)
        if (ds.mask.observed_in_column(c) < 2)
            throw DataError("irmi: column '" + ds.column_names[c] +
                            "' has fewer than 2 observed entries");

    IrmiOutcome outcome;
    if (!ds.mask.any()) {
        outcome.status = IrmiStatus::converged;
        return outcome;
    }

    Matrix imputed = ds.values;
    std::vector<double> divergence_limit(d);
    for (std::size_t c = 0; c < d; ++c) {
        const double med = observed_median(ds, c);
        for (std::size_t r = 0; r < n; ++r)
            if (ds.mask(r, c)) imputed(r, c) = med;
        std::vector<double> abs_obs;
        for (std::size_t r = 0; r < n; ++r)
            if (!ds.mask(r, c)) abs_obs.push_back(std::abs(ds.values(r, c)));
        std::nth_element(abs_obs.begin(), abs_obs.begin() + abs_obs.size() / 2, abs_obs.end());
        double scale = abs_obs[abs_obs.size() / 2];
        if (abs_obs.size() % 2 == 0) {
            std::nth_element(abs_obs.begin(), abs_obs.begin() + abs_obs.size() / 2 - 1,
                             abs_obs.begin() + abs_obs.size() / 2);
            scale = 0.5 * (scale + abs_obs[abs_obs.size() / 2 - 1]);
        }
        divergence_limit[c] = std::pow(10.0, cfg.divergence_ratio) * std::max(scale, 1e-12);
    }

    std::vector<CellValue> cells;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c)
            if (ds.mask(r, c)) cells.push_back({r, c, 0.0});

    auto collect = [&] {
        Imputations out;
        out.reserve(cells.size());
        for (const auto& cell : cells)
            out.push_back({cell.row, cell.col, imputed(cell.row, cell.col)});
        return out;
    };

    std::vector<double> previous(cells.size());
    for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            previous[i] = imputed(cells[i].row, cells[i].col);

        for (std::size_t feature = 0; feature < d; ++feature) {
            std::vector<std::size_t> missing_rows;
            for (std::size_t r = 0; r < n; ++r)
                if (ds.mask(r, feature)) missing_rows.push_back(r);
            if (missing_rows.empty()) continue;

            const std::size_t observed = n - missing_rows.size();
            Matrix x(observed, d); // other features plus trailing intercept column
            std::vector<double> y(observed);
            std::size_t row = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (ds.mask(r, feature)) continue;
                std::size_t col = 0;
                for (std::size_t c = 0; c < d; ++c) {
                    if (c == feature) continue;
                    x(row, col++) = imputed(r, c);
                }
                x(row, col) = 1.0;
                y[row] = imputed(r, feature);
                ++row;
            }
            std::vector<double> beta;
            try {
                beta = least_squares(x, y, 0.0);
            } catch (const SingularMatrixError&) {
                throw SingularMatrixError("irmi: singular regression for feature " +
                                          std::to_string(feature) + " ('" +
                                          ds.column_names[feature] + "')");
            }

            for (const std::size_t r : missing_rows) {
                double value = beta[d - 1]; // intercept
                std::size_t col = 0;
                for (std::size_t c = 0; c < d; ++c) {
                    if (c == feature) continue;
                    value += beta[col++] * imputed(r, c);
                }
                imputed(r, feature) = value;
                if (!std::isfinite(value) || std::abs(value) > divergence_limit[feature]) {
                    outcome.status = IrmiStatus::diverged;
                    outcome.iterations = sweep - 1;
                    return outcome;
                }
            }
        }

        double delta = 0.0;
        for (std::size_t i = 0; i < cells.size(); ++i)
            delta = std::max(delta,
                             std::abs(imputed(cells[i].row, cells[i].col) - previous[i]));
        outcome.change_trace.push_back(delta);
        outcome.iterations = sweep;
        if (delta < cfg.tol) {
            outcome.status = IrmiStatus::converged;
            outcome.imputations = collect();
            return outcome;
        }
    }

    outcome.status = IrmiStatus::iteration_cap;
    outcome.imputations = collect();
    return outcome;
}

} // namespace linimpute
