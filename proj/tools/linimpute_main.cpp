#include <CLI11.hpp>

#include "linimpute/cli.hpp"
#include "linimpute/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"linimpute: linear-model missing value imputation and benchmarks"};
    app.set_version_flag("--version", linimpute::kVersion);
    app.require_subcommand(1);

    linimpute::ImputeOptions impute;
    auto* impute_cmd = app.add_subcommand("impute", "impute missing cells of a CSV file");
    impute_cmd->add_option("input", impute.input, "input CSV (header row required)")
        ->required();
    impute_cmd->add_option("--out", impute.output, "output CSV path")->required();
    impute_cmd->add_option("--diagnostics", impute.diagnostics,
                           "diagnostics JSON path (default: <out>.json)");
    impute_cmd->add_option("--method", impute.method, "oli | irmi | mi | mean")
        ->default_val("oli");
    impute_cmd->add_option("--missing-token", impute.missing_token,
                           "token marking missing fields (empty fields always count)");
    impute_cmd->add_option("--variant", impute.variant,
                           "output variant for oli: direct | regressed")
        ->default_val("direct");
    impute_cmd->add_option("--lambda", impute.lambda, "ridge weight for oli regressions")
        ->default_val(0.0);

    linimpute::BenchmarkCmdOptions bench;
    auto* bench_cmd = app.add_subcommand(
        "benchmark", "hold out random cells of a complete CSV and compare methods");
    bench_cmd->add_option("input", bench.input, "complete input CSV")->required();
    bench_cmd->add_option("--out", bench.output, "report CSV path (default: stdout)");
    bench_cmd->add_option("--methods", bench.methods, "methods to compare")
        ->delimiter(',')
        ->default_val(std::vector<std::string>{"oli", "irmi", "mi"});
    bench_cmd->add_option("--rate", bench.rate, "missingness rate")->default_val(0.05);
    bench_cmd->add_option("--reps", bench.repetitions, "number of repetitions")
        ->default_val(10);
    bench_cmd->add_option("--seed", bench.seed,
                          "base seed (default: LINIMPUTE_SEED env var, else 1)");
    bench_cmd->add_option("--jobs", bench.jobs, "worker threads")->default_val(1);
    bench_cmd->add_option("--variant", bench.variant, "oli output variant")
        ->default_val("direct");
    bench_cmd->add_option("--lambda", bench.lambda, "ridge weight for oli")->default_val(0.0);

    linimpute::SimulateCmdOptions sim;
    auto* sim_cmd =
        app.add_subcommand("simulate", "run the synthetic-data protocols, emit plot-ready CSV");
    sim_cmd->add_option("--figure", sim.figure, "1 | 2a | 2b")->default_val("2a");
    sim_cmd->add_option("--scale", sim.scale, "desk | paper")->default_val("desk");
    sim_cmd->add_option("--out", sim.output, "report CSV path (default: stdout)");
    sim_cmd->add_option("--seed", sim.seed,
                        "base seed (default: LINIMPUTE_SEED env var, else 1)");
    sim_cmd->add_option("--jobs", sim.jobs, "worker threads")->default_val(1);
    sim_cmd->add_option("--n", sim.n, "override sample count");
    sim_cmd->add_option("--reps", sim.repetitions, "override repetition count");
    sim_cmd->add_option("--rate", sim.rate, "override missingness rate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : linimpute::kExitInputError;
    }

    try {
        if (*impute_cmd) return linimpute::cmd_impute(impute);
        if (*bench_cmd) return linimpute::cmd_benchmark(bench);
        if (*sim_cmd) return linimpute::cmd_simulate(sim);
    } catch (const std::exception& e) {
        std::cerr << "linimpute: " << e.what() << "\n";
        return linimpute::kExitInputError;
    }
    return linimpute::kExitInputError;
}
