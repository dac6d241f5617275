#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "linimpute/dataset.hpp"

namespace linimpute {

/// Median of a column's observed entries. Even counts take the mean of the
/// two middle order statistics.
inline double observed_median(const Dataset& ds, std::size_t col) {
    std::vector<double> obs;
    obs.reserve(ds.rows());
    for (std::size_t r = 0; r < ds.rows(); ++r)
        if (!ds.mask(r, col)) obs.push_back(ds.values(r, col));
    if (obs.empty())
        throw DataError("median: column '" + ds.column_names[col] + "' is fully missing");
    const std::size_t mid = obs.size() / 2;
    std::nth_element(obs.begin(), obs.begin() + mid, obs.end());
    double m = obs[mid];
    if (obs.size() % 2 == 0) {
        std::nth_element(obs.begin(), obs.begin() + mid - 1, obs.begin() + mid);
        m = 0.5 * (m + obs[mid - 1]);
    }
    return m;
}

inline double observed_mean(const Dataset& ds, std::size_t col) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r)
        if (!ds.mask(r, col)) {
            sum += ds.values(r, col);
            ++count;
        }
    if (count == 0)
        throw DataError("mean: column '" + ds.column_names[col] + "' is fully missing");
    return sum / static_cast<double>(count);
}

namespace detail {

template <typename ColumnStat>
Imputations impute_columnwise(const Dataset& ds, ColumnStat stat) {
    Imputations out;
    for (std::size_t c = 0; c < ds.cols(); ++c) {
        bool column_has_missing = false;
        for (std::size_t r = 0; r < ds.rows(); ++r)
            if (ds.mask(r, c)) {
                column_has_missing = true;
                break;
            }
        if (!column_has_missing) continue;
        const double fill = stat(ds, c);
        for (std::size_t r = 0; r < ds.rows(); ++r)
            if (ds.mask(r, c)) out.push_back({r, c, fill});
    }
    return out;
}

} // namespace detail

/// Fills every missing cell with its column's observed median.
inline Imputations median_impute(const Dataset& ds) {
    return detail::impute_columnwise(ds, [](const Dataset& d, std::size_t c) {
        return observed_median(d, c);
    });
}

/// Fills every missing cell with its column's observed mean.
inline Imputations mean_impute(const Dataset& ds) {
    return detail::impute_columnwise(ds, [](const Dataset& d, std::size_t c) {
        return observed_mean(d, c);
    });
}

} // namespace linimpute
