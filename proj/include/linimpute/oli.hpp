#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "linimpute/baseline.hpp"
#include "linimpute/dataset.hpp"
#include "linimpute/matrix.hpp"

namespace linimpute {

enum class InitMethod { median, mean };
enum class MSolver { closed_form, gradient };
enum class OutputVariant { direct, regressed };

struct OliConfig {
    InitMethod init = InitMethod::median;
    MSolver m_solver = MSolver::closed_form;
    double step_alpha = 0.1; // initial gradient step, shrunk by backtracking
    double tol_outer = 1e-8; // relative objective-change threshold
    double tol_inner = 1e-9; // max-norm threshold on the restricted gradient
    int max_outer = 100;
    int max_inner = 1000;
    double lambda = 0.0; // ridge weight; 0 reproduces plain least squares
    OutputVariant output = OutputVariant::direct;
};

inline void validate(const OliConfig& cfg) {
    if (!(cfg.step_alpha > 0.0)) throw std::invalid_argument("oli: step_alpha must be > 0");
    if (!(cfg.tol_outer > 0.0)) throw std::invalid_argument("oli: tol_outer must be > 0");
    if (!(cfg.tol_inner > 0.0)) throw std::invalid_argument("oli: tol_inner must be > 0");
    if (cfg.max_outer < 1) throw std::invalid_argument("oli: max_outer must be >= 1");
    if (cfg.max_inner < 1) throw std::invalid_argument("oli: max_inner must be >= 1");
    if (cfg.lambda < 0.0) throw std::invalid_argument("oli: lambda must be >= 0");
}

/// N x (d+1) matrix: the dataset with missing cells zeroed plus a trailing
/// constant-1 intercept column. Carries the mask so the solvers know which
/// cells are free variables (the intercept column never is).
struct DesignMatrix {
    Matrix values;
    MissingMask mask; // N x d, over the feature columns only

    std::size_t samples() const { return values.rows(); }
    std::size_t features() const { return values.cols() - 1; }
};

/// (d+1) x (d+1) coefficient matrix. Column i (i < d) holds the regression of
/// feature i on all other columns with a structural 0 on the diagonal; the
/// last column is fixed to the unit vector so the intercept column passes
/// through untouched.
struct CoefficientMatrix {
    Matrix values;
};

/// N x (d+1) matrix of imputation values: nonzero only at missing cells,
/// identically zero in the intercept column.
struct ImputationMatrix {
    Matrix values;
};

struct FitResult {
    CoefficientMatrix coefficients;
    ImputationMatrix imputations;
    // One entry at initialization plus one per half-step (coefficient update,
    // imputation update); non-increasing by construction. Records the
    // ridge-penalized objective, which coincides with the reconstruction
    // objective when lambda = 0.
    std::vector<double> objective_trace;
    int outer_iterations = 0;
    bool converged = false;
    int closed_form_fallbacks = 0; // singular closed-form systems rescued by gradient steps
    std::vector<std::string> warnings;
};

inline DesignMatrix build_design(const Dataset& ds) {
    const std::size_t n = ds.rows(), d = ds.cols();
    Matrix x(n, d + 1);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c)
            x(r, c) = ds.mask(r, c) ? 0.0 : ds.values(r, c);
        x(r, d) = 1.0;
    }
    return DesignMatrix{std::move(x), ds.mask};
}

namespace detail {

inline Matrix completed(const DesignMatrix& design, const ImputationMatrix& m) {
    Matrix z = design.values;
    for (std::size_t i = 0; i < z.data().size(); ++i) z.data()[i] += m.values.data()[i];
    return z;
}

inline double ridge_penalty(const CoefficientMatrix& a, double lambda) {
    if (lambda == 0.0) return 0.0;
    const std::size_t d = a.values.cols() - 1;
    double sum = 0.0;
    for (std::size_t r = 0; r < d; ++r) // intercept row excluded
        for (std::size_t c = 0; c < d; ++c) sum += a.values(r, c) * a.values(r, c);
    return lambda * sum;
}

// Reconstruction error of Z under A, summed over the feature columns. The
// intercept column reproduces itself exactly and contributes nothing.
inline double reconstruction_error(const Matrix& z, const CoefficientMatrix& a) {
    const Matrix za = multiply(z, a.values);
    const std::size_t d = z.cols() - 1;
    double sum = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < d; ++c) {
            const double e = za(r, c) - z(r, c);
            sum += e * e;
        }
    return sum;
}

} // namespace detail

/// Squared reconstruction error of the completed matrix X+M under the
/// regression coefficients A: each feature column is approximated by a linear
/// combination of all other columns plus the intercept.
inline double objective(const DesignMatrix& design, const ImputationMatrix& m,
                        const CoefficientMatrix& a) {
    return detail::reconstruction_error(detail::completed(design, m), a);
}

/// Re-fits all per-feature regressions against the current completed matrix;
/// this is the exact minimizer of the objective in A for fixed M. The ridge
/// penalty (if any) skips the intercept coefficients.
///
/// All regressions share one Gram matrix of X+M; dropping row/column i gives
/// the normal equations of feature i directly, identical to calling
/// least_squares on (X+M) without column i.
inline CoefficientMatrix update_coefficients(const DesignMatrix& design,
                                             const ImputationMatrix& m, double lambda) {
    const std::size_t d = design.features();
    const Matrix z = detail::completed(design, m);
    const Matrix g = gram(z);

    Matrix a(d + 1, d + 1);
    a(d, d) = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
        Matrix sub(d, d);
        std::vector<double> rhs(d);
        std::size_t ri = 0;
        for (std::size_t r = 0; r < d + 1; ++r) {
            if (r == i) continue;
            std::size_t ci = 0;
            for (std::size_t c = 0; c < d + 1; ++c) {
                if (c == i) continue;
                sub(ri, ci) = g(r, c);
                ++ci;
            }
            if (r != d) sub(ri, ri) += lambda; // intercept column stays unpenalized
            rhs[ri] = g(r, i);
            ++ri;
        }
        std::vector<double> beta;
        try {
            beta = solve_linear_system(std::move(sub), std::move(rhs));
        } catch (const SingularMatrixError&) {
            throw SingularMatrixError(
                "oli: singular regression for feature " + std::to_string(i) +
                (lambda == 0.0 ? " (collinear columns; consider lambda > 0)" : ""));
        }
        std::size_t bi = 0;
        for (std::size_t r = 0; r < d + 1; ++r) {
            if (r == i) continue;
            a(r, i) = beta[bi++];
        }
    }
    return CoefficientMatrix{std::move(a)};
}

/// Gradient of the objective with respect to M, restricted to the actual
/// optimization variables: entries at observed cells and the whole intercept
/// column are zero.
inline Matrix imputation_gradient(const DesignMatrix& design, const ImputationMatrix& m,
                                  const CoefficientMatrix& a) {
    const Matrix z = detail::completed(design, m);
    const Matrix za = multiply(z, a.values);
    const std::size_t n = design.samples(), d = design.features();
    Matrix grad(n, d + 1);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            if (!design.mask(r, c)) continue;
            // 2 * [(X+M)A - (X+M)] (A - I)^T at cell (r, c)
            double v = 0.0;
            for (std::size_t k = 0; k < d + 1; ++k) {
                const double residual = za(r, k) - z(r, k);
                const double a_minus_i = a.values(c, k) - (c == k ? 1.0 : 0.0);
                v += residual * a_minus_i;
            }
            grad(r, c) = 2.0 * v;
        }
    return grad;
}

/// Projected gradient descent on M with backtracking: the step is halved
/// until it produces an Armijo-style decrease, so the objective never rises.
/// Stops once the restricted gradient's max-norm drops to tol_inner or
/// max_inner steps have run.
inline ImputationMatrix update_imputations_gradient(const DesignMatrix& design,
                                                    const ImputationMatrix& m_start,
                                                    const CoefficientMatrix& a,
                                                    const OliConfig& cfg) {
    constexpr double kArmijo = 1e-4;
    const std::size_t n = design.samples(), d = design.features();

    ImputationMatrix m{m_start.values};
    Matrix z = detail::completed(design, m);
    // residual R = (X+M)A - (X+M); maintained incrementally across steps
    Matrix residual = multiply(z, a.values);
    for (std::size_t i = 0; i < residual.data().size(); ++i)
        residual.data()[i] -= z.data()[i];

    auto error_of = [&](const Matrix& res) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) sum += res(r, c) * res(r, c);
        return sum;
    };

    double value = error_of(residual);
    for (int iter = 0; iter < cfg.max_inner; ++iter) {
        if (!std::isfinite(value))
            throw std::runtime_error("oli: non-finite objective in gradient descent");

        Matrix grad(n, d + 1);
        double grad_max = 0.0, grad_norm2 = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                if (!design.mask(r, c)) continue;
                double v = 0.0;
                for (std::size_t k = 0; k < d + 1; ++k)
                    v += residual(r, k) * (a.values(c, k) - (c == k ? 1.0 : 0.0));
                v *= 2.0;
                grad(r, c) = v;
                grad_max = std::max(grad_max, std::abs(v));
                grad_norm2 += v * v;
            }
        if (grad_max <= cfg.tol_inner) break;

        // Stepping M by -alpha*grad moves the residual by -alpha*dir; the
        // objective is exactly quadratic in alpha, so each backtracking trial
        // is O(1).
        Matrix dir = multiply(grad, a.values);
        for (std::size_t i = 0; i < dir.data().size(); ++i)
            dir.data()[i] -= grad.data()[i];
        double slope = 0.0, curvature = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                slope += residual(r, c) * dir(r, c);
                curvature += dir(r, c) * dir(r, c);
            }
        if (slope <= 0.0) break; // no descent direction left numerically

        double alpha = cfg.step_alpha;
        while (value - 2.0 * alpha * slope + alpha * alpha * curvature >
               value - kArmijo * alpha * grad_norm2) {
            alpha *= 0.5;
            if (alpha < 1e-300) break;
        }
        if (alpha < 1e-300) break;

        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c)
                if (design.mask(r, c)) m.values(r, c) -= alpha * grad(r, c);
        for (std::size_t i = 0; i < residual.data().size(); ++i)
            residual.data()[i] -= alpha * dir.data()[i];
        value = error_of(residual);
    }
    return m;
}

/// Exact minimizer of the objective in M for fixed A. Setting the restricted
/// gradient to zero yields M P = -X P with P = (A-I)(A-I)^T, taken only at
/// missing cells; rows decouple, so each row solves a small dense system over
/// its own missing columns.
///
/// Throws SingularMatrixError when a row's restricted system is singular;
/// fit() falls back to the gradient solver in that case.
inline ImputationMatrix update_imputations_closed_form(const DesignMatrix& design,
                                                       const CoefficientMatrix& a) {
    const std::size_t n = design.samples(), d = design.features();
    const std::size_t dim = d + 1;

    Matrix a_minus_i = a.values;
    for (std::size_t i = 0; i < dim; ++i) a_minus_i(i, i) -= 1.0;
    const Matrix p = multiply(a_minus_i, transpose(a_minus_i));

    ImputationMatrix m{Matrix(n, dim)};
    std::vector<std::size_t> missing_cols;
    for (std::size_t r = 0; r < n; ++r) {
        missing_cols.clear();
        for (std::size_t c = 0; c < d; ++c)
            if (design.mask(r, c)) missing_cols.push_back(c);
        if (missing_cols.empty()) continue;

        const std::size_t k = missing_cols.size();
        Matrix system(k, k);
        std::vector<double> rhs(k);
        for (std::size_t eq = 0; eq < k; ++eq) {
            const std::size_t c = missing_cols[eq];
            for (std::size_t un = 0; un < k; ++un)
                system(eq, un) = p(missing_cols[un], c); // unknown M[r][c'] couples via P[c'][c]
            double q = 0.0; // Q[r][c] with Q = -X P
            for (std::size_t j = 0; j < dim; ++j) q -= design.values(r, j) * p(j, c);
            rhs[eq] = q;
        }
        std::vector<double> solution;
        try {
            solution = solve_linear_system(std::move(system), std::move(rhs));
        } catch (const SingularMatrixError&) {
            throw SingularMatrixError("oli: singular closed-form imputation system at row " +
                                      std::to_string(r));
        }
        for (std::size_t un = 0; un < k; ++un) m.values(r, missing_cols[un]) = solution[un];
    }
    return m;
}

/// Completed N x d data matrix. `direct` returns X+M as-is; `regressed` keeps
/// observed values and fills missing cells from the regression predictions
/// (X+M)A. The two agree at any stationary point with zero residual.
inline Matrix imputed_matrix(const DesignMatrix& design, const ImputationMatrix& m,
                             const CoefficientMatrix& a, OutputVariant variant) {
    const std::size_t n = design.samples(), d = design.features();
    Matrix out(n, d);
    if (variant == OutputVariant::direct) {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c)
                out(r, c) = design.values(r, c) + m.values(r, c);
        return out;
    }
    const Matrix za = multiply(detail::completed(design, m), a.values);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c)
            out(r, c) = design.mask(r, c) ? za(r, c) : design.values(r, c);
    return out;
}

/// Imputed values at the missing cells only, row-major order.
inline Imputations imputed_cells(const DesignMatrix& design, const ImputationMatrix& m,
                                 const CoefficientMatrix& a, OutputVariant variant) {
    const Matrix full = imputed_matrix(design, m, a, variant);
    Imputations out;
    for (std::size_t r = 0; r < design.samples(); ++r)
        for (std::size_t c = 0; c < design.features(); ++c)
            if (design.mask(r, c)) out.push_back({r, c, full(r, c)});
    return out;
}

/// Block coordinate descent on the joint objective: seed M with a simple
/// column-statistic imputation, then alternate the exact coefficient update
/// with the configured imputation update until the relative objective change
/// drops below tol_outer. Each half-step minimizes (or at least does not
/// increase) the recorded objective, so the trace is non-increasing.
inline FitResult fit(const Dataset& ds, const OliConfig& cfg = {}) {
    validate(cfg);
    const std::size_t n = ds.rows(), d = ds.cols();
    for (std::size_t c = 0; c < d; ++c)
        if (ds.mask.observed_in_column(c) < 2)
            throw DataError("oli: column '" + ds.column_names[c] +
                            "' has fewer than 2 observed entries");

    FitResult result;
    if (n <= d + 1)
        result.warnings.push_back("sample count " + std::to_string(n) +
                                  " is not larger than feature count + intercept (" +
                                  std::to_string(d + 1) + "); regressions may be ill-posed");

    DesignMatrix design = build_design(ds);
    ImputationMatrix m{Matrix(n, d + 1)};
    const Imputations seed =
        cfg.init == InitMethod::median ? median_impute(ds) : mean_impute(ds);
    for (const auto& cell : seed) m.values(cell.row, cell.col) = cell.value;

    CoefficientMatrix a{Matrix(d + 1, d + 1)};
    a.values(d, d) = 1.0;

    auto penalized = [&](const CoefficientMatrix& coeffs) {
        return objective(design, m, coeffs) + detail::ridge_penalty(coeffs, cfg.lambda);
    };

    result.objective_trace.push_back(penalized(a));

    if (!ds.mask.any()) { // nothing to impute: a single coefficient pass suffices
        a = update_coefficients(design, m, cfg.lambda);
        result.objective_trace.push_back(penalized(a));
        result.coefficients = std::move(a);
        result.imputations = std::move(m);
        result.outer_iterations = 1;
        result.converged = true;
        return result;
    }

    double previous = result.objective_trace.front();
    for (int iter = 1; iter <= cfg.max_outer; ++iter) {
        a = update_coefficients(design, m, cfg.lambda);
        result.objective_trace.push_back(penalized(a));

        if (cfg.m_solver == MSolver::closed_form) {
            try {
                m = update_imputations_closed_form(design, a);
            } catch (const SingularMatrixError&) {
                ++result.closed_form_fallbacks;
                m = update_imputations_gradient(design, m, a, cfg);
            }
        } else {
            m = update_imputations_gradient(design, m, a, cfg);
        }
        const double value = penalized(a);
        result.objective_trace.push_back(value);

        result.outer_iterations = iter;
        if (std::abs(value - previous) < cfg.tol_outer * (1.0 + previous)) {
            result.converged = true;
            break;
        }
        previous = value;
    }

    if (result.closed_form_fallbacks > 0)
        result.warnings.push_back(std::to_string(result.closed_form_fallbacks) +
                                  " closed-form update(s) hit a singular system; "
                                  "used gradient steps instead");
    result.coefficients = std::move(a);
    result.imputations = std::move(m);
    return result;
}

} // namespace linimpute
