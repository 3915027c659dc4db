#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mustangs/config.hpp"
#include "mustangs/stats.hpp"

namespace mustangs {

std::string fmt_double_csv(double v);

struct SeedOutcome {
    std::uint64_t seed{0};
    bool completed{false};
    std::string error;
    double final_frechet{0.0};
    double final_tvd{0.0};
    int final_modes_covered{0};
    double final_hq_fraction{0.0};
    std::uint64_t steps_executed{0};
    std::uint32_t epochs_run{0};
};

struct RunSummary {
    std::filesystem::path run_dir;
    std::string run_id;
    Method method{Method::Mustangs};
    std::uint64_t hash{0};
    std::vector<SeedOutcome> seeds;

    bool all_completed() const;
};

// Trains every seed in the config and writes the run directory:
//   <out>/<run_id>/config.txt, manifest.txt, final_report.txt,
//   seed_<n>/{metrics.csv, epochs.csv, final_report.txt, checkpoints/...}
// run_id is method-confighash-timestamp, so re-running an identical config
// never overwrites an earlier run. jobs > 1 trains seeds concurrently
// (each seed is an isolated deterministic job). Failed seeds are marked in
// the manifest; the run directory with at least one failure is a partial
// run and the function throws after finishing the remaining seeds.
RunSummary run_experiment(const ExperimentConfig& config, unsigned jobs = 1);

// Re-reads a run directory written by run_experiment.
RunSummary load_run(const std::filesystem::path& run_dir);

struct MethodSummary {
    std::string label;
    std::vector<double> frechet_values;
    std::vector<double> tvd_values;
    SummaryStats frechet;
    SummaryStats tvd;
};

struct PairwiseComparison {
    std::string label_a;
    std::string label_b;
    RankSumResult frechet_ranksum;
    double holm_p{1.0};
};

struct SummaryTable {
    std::vector<MethodSummary> methods;   // sorted by frechet median asc
    std::vector<PairwiseComparison> comparisons;

    std::string to_text() const;
    std::string frechet_csv() const;
    std::string tvd_csv() const;
};

// Summary statistics over the final frechet_distance and tvd of each run's
// seeds, plus Holm-corrected pairwise rank-sum tests on frechet_distance.
// Each run needs >= 2 completed seeds.
SummaryTable summarize(const std::vector<std::filesystem::path>& run_dirs);

struct ComparisonReport {
    RankSumResult frechet;
    RankSumResult tvd;
    std::string to_text() const;
};

// Two-sided rank-sum tests between the final per-seed metrics of two runs.
ComparisonReport compare_runs(const std::filesystem::path& run_a,
                              const std::filesystem::path& run_b);

// Prints genome metadata; for generators also writes a scatter CSV of
// 1000 generated samples (or sample_count) next to the checkpoint unless
// csv_out is given.
std::string inspect_checkpoint(const std::filesystem::path& checkpoint,
                               std::size_t sample_count = 1000,
                               const std::filesystem::path* csv_out = nullptr);

// Resolves the configured output directory: relative paths land under
// $MUSTANGS_OUT_ROOT when that is set.
std::filesystem::path resolve_out_dir(const std::string& out);

}  // namespace mustangs
