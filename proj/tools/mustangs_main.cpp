#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mustangs/errors.hpp"
#include "mustangs/harness.hpp"
#include "mustangs/kernels.hpp"

namespace fs = std::filesystem;

namespace {

int run_train(const std::string& config_path, unsigned jobs) {
    const mustangs::ExperimentConfig config =
        mustangs::load_config(config_path);
    std::cout << "kernel backend: " << mustangs::kernels::backend_name()
              << "\n";
    const mustangs::RunSummary summary =
        mustangs::run_experiment(config, jobs);
    std::cout << "run directory: " << summary.run_dir.string() << "\n";
    for (const auto& seed : summary.seeds) {
        std::cout << "seed " << seed.seed
                  << ": frechet=" << mustangs::fmt_double_csv(seed.final_frechet)
                  << " tvd=" << mustangs::fmt_double_csv(seed.final_tvd)
                  << " modes=" << seed.final_modes_covered
                  << " steps=" << seed.steps_executed << "\n";
    }
    return 0;
}

int run_summarize(const std::vector<std::string>& dirs,
                  const std::string& csv_dir) {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    const mustangs::SummaryTable table = mustangs::summarize(paths);
    std::cout << table.to_text();
    const fs::path out(csv_dir);
    fs::create_directories(out);
    std::ofstream(out / "summary_frechet.csv", std::ios::trunc)
        << table.frechet_csv();
    std::ofstream(out / "summary_tvd.csv", std::ios::trunc) << table.tvd_csv();
    std::cout << "wrote " << (out / "summary_frechet.csv").string() << " and "
              << (out / "summary_tvd.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatial coevolutionary GAN training on 2D mixtures"};
    app.require_subcommand(1);

    std::string config_path;
    unsigned jobs = 1;
    auto* train = app.add_subcommand("train", "run an experiment config");
    train->add_option("config", config_path, "config file")->required();
    train->add_option("--jobs", jobs, "seeds trained concurrently")
        ->default_val(1u);

    std::vector<std::string> summarize_dirs;
    std::string csv_dir = ".";
    auto* summarize =
        app.add_subcommand("summarize", "summary table over run directories");
    summarize->add_option("dirs", summarize_dirs, "run directories")
        ->required()
        ->expected(-1);
    summarize->add_option("--csv-dir", csv_dir, "where to write summary CSVs");

    std::string cmp_a, cmp_b;
    auto* compare =
        app.add_subcommand("compare", "rank-sum test between two runs");
    compare->add_option("run_a", cmp_a, "first run directory")->required();
    compare->add_option("run_b", cmp_b, "second run directory")->required();

    std::string checkpoint;
    std::size_t samples = 1000;
    std::string scatter_csv;
    auto* inspect =
        app.add_subcommand("inspect", "genome metadata and sample scatter");
    inspect->add_option("checkpoint", checkpoint, "genome checkpoint file")
        ->required();
    inspect->add_option("--samples", samples, "scatter sample count")
        ->default_val(std::size_t{1000});
    inspect->add_option("--csv", scatter_csv, "scatter CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(config_path, jobs);
        if (summarize->parsed()) return run_summarize(summarize_dirs, csv_dir);
        if (compare->parsed()) {
            std::cout << mustangs::compare_runs(cmp_a, cmp_b).to_text();
            return 0;
        }
        if (inspect->parsed()) {
            const fs::path csv(scatter_csv);
            std::cout << mustangs::inspect_checkpoint(
                checkpoint, samples, scatter_csv.empty() ? nullptr : &csv);
            return 0;
        }
    } catch (const mustangs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
