#include <catch2/catch_amalgamated.hpp>

#include "linimpute/baseline.hpp"
#include "test_support.hpp"

using namespace linimpute;
using Catch::Matchers::WithinAbs;

TEST_CASE("median_impute fills column medians") {
    const Dataset ds = parse_csv("a\n1\n2\n100\n", "");
    REQUIRE(median_impute(ds).empty());

    const Dataset with_gap = parse_csv("a\n1\n\n2\n100\n");
    const auto imps = median_impute(with_gap);
    REQUIRE(imps.size() == 1);
    REQUIRE(imps[0].row == 1);
    REQUIRE(imps[0].col == 0);
    REQUIRE_THAT(imps[0].value, WithinAbs(2.0, 1e-15)); // robust to the outlier
}

TEST_CASE("median of an even count averages the middle pair") {
    const Dataset ds = parse_csv("a\n1\n3\n\n");
    const auto imps = median_impute(ds);
    REQUIRE(imps.size() == 1);
    REQUIRE_THAT(imps[0].value, WithinAbs(2.0, 1e-15));
}

TEST_CASE("mean_impute fills column means") {
    const Dataset ds = parse_csv("a,b\n1,0\n2,\n3,10\n");
    const auto imps = mean_impute(ds);
    REQUIRE(imps.size() == 1);
    REQUIRE(imps[0].col == 1);
    REQUIRE_THAT(imps[0].value, WithinAbs(5.0, 1e-15));

    REQUIRE(mean_impute(parse_csv("a\n1\n2\n3\n")).empty());
}

TEST_CASE("fully missing column is an error") {
    Matrix values(2, 1);
    MissingMask mask(2, 1);
    mask.set(0, 0, true);
    mask.set(1, 0, true);
    const Dataset ds = make_dataset(values, mask, {"a"});
    REQUIRE_THROWS_AS(median_impute(ds), DataError);
    REQUIRE_THROWS_AS(mean_impute(ds), DataError);
}

TEST_CASE("median imputation MSE is about 1 on standardized MCAR data") {
    const Dataset raw = testsupport::random_dataset(21, 4000, 4, 0.5);
    const auto [std_ds, params] = standardize(raw);
    const auto [masked, held] = inject_missing(std_ds, 0.05, 77);
    const double err = mse(median_impute(masked), held);
    REQUIRE_THAT(err, WithinAbs(1.0, 0.1));
}
