#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <utility>
#include <vector>

#include "linimpute/matrix.hpp"
#include "linimpute/rng.hpp"

namespace linimpute {

/// Input-data problem: malformed file, degenerate column, mismatched cell
/// sets. Distinct from SingularMatrixError, which signals solver failure.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class CsvError : public DataError {
  public:
    explicit CsvError(const std::string& what) : DataError(what) {}
};

/// Row-major boolean missingness mask; true marks a missing cell.
class MissingMask {
  public:
    MissingMask() = default;
    MissingMask(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    bool operator()(std::size_t r, std::size_t c) const {
        return bits_[r * cols_ + c] != 0;
    }
    void set(std::size_t r, std::size_t c, bool missing) {
        bits_[r * cols_ + c] = missing ? 1 : 0;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits_) n += b;
        return n;
    }
    bool any() const { return count() > 0; }

    std::size_t observed_in_column(std::size_t c) const {
        std::size_t n = 0;
        for (std::size_t r = 0; r < rows_; ++r)
            if (!(*this)(r, c)) ++n;
        return n;
    }

    bool operator==(const MissingMask& other) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// A value matrix plus missingness mask. Missing cells always hold the
/// carrier value 0, so `values` doubles as the zeroed matrix used by the
/// solvers. Immutable by convention after construction; all operations below
/// return fresh datasets.
struct Dataset {
    Matrix values;                         // N x d, zeros at missing cells
    MissingMask mask;                      // N x d
    std::vector<std::string> column_names; // d labels

    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
};

/// One addressed cell with a value; used both for held-out truth and for
/// imputation output.
struct CellValue {
    std::size_t row;
    std::size_t col;
    double value;

    friend bool operator==(const CellValue&, const CellValue&) = default;
};

using Imputations = std::vector<CellValue>;
using HeldOut = std::vector<CellValue>;

/// Means and standard deviations (computed over observed entries only,
/// population convention: divide by the observed count) that map a dataset to
/// standard scale; enough to invert the transform.
struct StandardizationParams {
    std::vector<double> means;
    std::vector<double> stds;
};

inline Dataset make_dataset(Matrix values, MissingMask mask,
                            std::vector<std::string> column_names) {
    if (values.rows() == 0 || values.cols() == 0)
        throw DataError("dataset: needs at least one row and one column");
    if (mask.rows() != values.rows() || mask.cols() != values.cols())
        throw DataError("dataset: mask and values dimensions differ");
    if (column_names.size() != values.cols())
        throw DataError("dataset: column name count mismatch");
    for (std::size_t r = 0; r < values.rows(); ++r)
        for (std::size_t c = 0; c < values.cols(); ++c) {
            if (mask(r, c))
                values(r, c) = 0.0; // carrier value
            else if (!std::isfinite(values(r, c)))
                throw DataError("dataset: non-finite value at row " + std::to_string(r) +
                                ", column " + std::to_string(c));
        }
    return Dataset{std::move(values), std::move(mask), std::move(column_names)};
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::optional<double> parse_double(std::string_view field) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return value;
}

// RFC-4180-style records: comma separated, double quotes for fields that
// contain commas/quotes/newlines, "" as an escaped quote, LF or CRLF line
// endings.
inline std::vector<std::vector<std::string>> parse_csv_records(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && field.empty() && !field_was_quoted) {
            in_quotes = true;
            field_was_quoted = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
        } else {
            field.push_back(ch);
        }
    }
    if (in_quotes) throw CsvError("csv: unterminated quoted field");
    if (!field.empty() || !record.empty() || field_was_quoted) end_record();
    return records;
}

inline std::string quote_csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

/// Parses CSV text into a Dataset. The first record is the header; a field is
/// missing when it is empty or equals `missing_token` exactly.
inline Dataset parse_csv(std::string_view text, const std::string& missing_token = "") {
    const auto records = detail::parse_csv_records(text);
    if (records.empty()) throw CsvError("csv: empty input, header row required");
    const auto& header = records.front();
    const std::size_t d = header.size();
    if (d == 0 || (d == 1 && header[0].empty()))
        throw CsvError("csv: header row has no columns");
    const std::size_t n = records.size() - 1;
    if (n == 0) throw CsvError("csv: no data rows");

    Matrix values(n, d);
    MissingMask mask(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& rec = records[r + 1];
        if (rec.size() != d)
            throw CsvError("csv: ragged row " + std::to_string(r + 2) + " has " +
                           std::to_string(rec.size()) + " fields, expected " +
                           std::to_string(d));
        for (std::size_t c = 0; c < d; ++c) {
            const std::string& f = rec[c];
            if (f.empty() || f == missing_token) {
                mask.set(r, c, true);
                continue;
            }
            const auto v = detail::parse_double(f);
            if (!v)
                throw CsvError("csv: non-numeric field '" + f + "' at row " +
                               std::to_string(r + 2) + ", column '" + header[c] + "'");
            if (!std::isfinite(*v))
                throw CsvError("csv: non-finite value at row " + std::to_string(r + 2) +
                               ", column '" + header[c] + "'");
            values(r, c) = *v;
        }
    }
    return make_dataset(std::move(values), std::move(mask), header);
}

inline Dataset load_csv(const std::string& path, const std::string& missing_token = "") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("csv: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), missing_token);
}

/// Writes the dataset back as CSV; missing cells become `missing_token`.
/// Numbers use the shortest round-trip representation, so a load/write cycle
/// preserves parsed values bit for bit.
inline void write_csv(std::ostream& os, const Dataset& ds,
                      const std::string& missing_token = "") {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
        if (c) os << ',';
        os << detail::quote_csv_field(ds.column_names[c]);
    }
    os << '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t c = 0; c < ds.cols(); ++c) {
            if (c) os << ',';
            if (ds.mask(r, c)) os << missing_token;
            else os << format_double(ds.values(r, c));
        }
        os << '\n';
    }
}

/// Fills the listed cells and clears their missing flags.
inline Dataset apply_imputations(const Dataset& ds, const Imputations& imputations) {
    Dataset out = ds;
    for (const auto& cell : imputations) {
        if (cell.row >= ds.rows() || cell.col >= ds.cols() || !ds.mask(cell.row, cell.col))
            throw DataError("apply_imputations: cell (" + std::to_string(cell.row) + "," +
                            std::to_string(cell.col) + ") is not a missing cell");
        out.values(cell.row, cell.col) = cell.value;
        out.mask.set(cell.row, cell.col, false);
    }
    return out;
}

/// Rescales every column so its observed entries have mean 0 and
/// (population) standard deviation 1. Masked cells stay 0.
inline std::pair<Dataset, StandardizationParams> standardize(const Dataset& ds) {
    const std::size_t n = ds.rows(), d = ds.cols();
    StandardizationParams params;
    params.means.resize(d);
    params.stds.resize(d);
    Dataset out = ds;
    for (std::size_t c = 0; c < d; ++c) {
        const std::size_t observed = ds.mask.observed_in_column(c);
        if (observed < 2)
            throw DataError("standardize: column '" + ds.column_names[c] +
                            "' has fewer than 2 observed entries");
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            if (!ds.mask(r, c)) mean += ds.values(r, c);
        mean /= static_cast<double>(observed);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            if (!ds.mask(r, c)) {
                const double delta = ds.values(r, c) - mean;
                var += delta * delta;
            }
        var /= static_cast<double>(observed);
        const double sd = std::sqrt(var);
        if (sd < 1e-12 * std::max(1.0, std::abs(mean)))
            throw DataError("standardize: constant column '" + ds.column_names[c] + "'");
        params.means[c] = mean;
        params.stds[c] = sd;
        for (std::size_t r = 0; r < n; ++r)
            if (!ds.mask(r, c)) out.values(r, c) = (ds.values(r, c) - mean) / sd;
    }
    return {std::move(out), std::move(params)};
}

/// Marks round(rate * N * d) cells, drawn uniformly without replacement over
/// the flattened matrix, as missing; returns the masked dataset together with
/// the true values of the masked cells. Deterministic for a fixed seed.
inline std::pair<Dataset, HeldOut> inject_missing(const Dataset& ds, double rate,
                                                  std::uint64_t seed) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw std::invalid_argument("inject_missing: rate must be in [0, 1)");
    if (ds.mask.any())
        throw DataError("inject_missing: dataset already has missing cells");

    const std::size_t n = ds.rows(), d = ds.cols();
    const auto k = static_cast<std::size_t>(
        std::llround(rate * static_cast<double>(n) * static_cast<double>(d)));
    if (k == 0) return {ds, {}};

    Rng rng(seed);
    auto chosen = rng.sample_without_replacement(k, n * d);
    std::sort(chosen.begin(), chosen.end());

    Dataset out = ds;
    HeldOut held;
    held.reserve(k);
    for (const std::size_t flat : chosen) {
        const std::size_t r = flat / d, c = flat % d;
        held.push_back({r, c, ds.values(r, c)});
        out.mask.set(r, c, true);
        out.values(r, c) = 0.0;
    }
    for (std::size_t c = 0; c < d; ++c)
        if (out.mask.observed_in_column(c) < 2)
            throw DataError("inject_missing: rate " + format_double(rate) +
                            " leaves column '" + ds.column_names[c] +
                            "' with fewer than 2 observed entries");
    return {std::move(out), std::move(held)};
}

namespace detail {

inline std::vector<CellValue> sorted_cells(const std::vector<CellValue>& cells) {
    auto out = cells;
    std::sort(out.begin(), out.end(), [](const CellValue& a, const CellValue& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    return out;
}

} // namespace detail

/// Mean squared error between imputed values and held-out truth. Both lists
/// must address exactly the same cells; order is irrelevant.
inline double mse(const Imputations& imputed, const HeldOut& truth) {
    if (imputed.size() != truth.size())
        throw DataError("mse: imputed covers " + std::to_string(imputed.size()) +
                        " cells, truth has " + std::to_string(truth.size()));
    if (truth.empty())
        throw DataError("mse: no held-out cells");
    const auto a = detail::sorted_cells(imputed);
    const auto b = detail::sorted_cells(truth);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].row != b[i].row || a[i].col != b[i].col)
            throw DataError("mse: imputed and truth address different cells");
        const double e = a[i].value - b[i].value;
        sum += e * e;
    }
    return sum / static_cast<double>(a.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson: need two equal-length series of size >= 2");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson: zero-variance series");
    return sxy / std::sqrt(sxx * syy);
}

/// Mean absolute pairwise Pearson correlation between features, computed over
/// rows where both features are observed. This is the summary statistic
/// benchmark reports label `mean_abs_correlation`.
inline double mean_abs_pairwise_correlation(const Dataset& ds) {
    const std::size_t d = ds.cols();
    if (d < 2) return 0.0;
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            std::vector<double> xi, xj;
            for (std::size_t r = 0; r < ds.rows(); ++r)
                if (!ds.mask(r, i) && !ds.mask(r, j)) {
                    xi.push_back(ds.values(r, i));
                    xj.push_back(ds.values(r, j));
                }
            if (xi.size() >= 2) {
                total += std::abs(pearson(xi, xj));
                ++pairs;
            }
        }
    return pairs ? total / static_cast<double>(pairs) : 0.0;
}

} // namespace linimpute
