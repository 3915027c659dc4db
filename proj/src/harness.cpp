#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mustangs/errors.hpp"
#include "mustangs/harness.hpp"
#include "mustangs/kernels.hpp"

namespace fs = std::filesystem;

namespace mustangs {

std::string fmt_double_csv(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string hash_hex(std::uint64_t hash) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%08llx",
                  static_cast<unsigned long long>(hash & 0xFFFFFFFFull));
    return buf;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
    return buf;
}

std::string kind_label(const std::optional<ObjectiveKind>& kind) {
    return kind.has_value() ? to_string(*kind) : "none";
}

// Streams epochs.csv / metrics.csv rows as training produces them and
// writes genome checkpoints.
class CsvObserver final : public TrainingObserver {
public:
    explicit CsvObserver(const fs::path& seed_dir) : seed_dir_(seed_dir) {
        epochs_.open(seed_dir / "epochs.csv", std::ios::trunc);
        metrics_.open(seed_dir / "metrics.csv", std::ios::trunc);
        if (!epochs_ || !metrics_) {
            throw Error("cannot create CSV files in " + seed_dir.string());
        }
        epochs_ << "epoch,cell,gen_kind,gen_incumbent_fitness,"
                   "gen_offspring_fitness,gen_replaced,gen_version,"
                   "disc_kind,disc_incumbent_fitness,disc_offspring_fitness,"
                   "disc_replaced,disc_version\n";
        metrics_ << "epoch,cell,frechet_distance,tvd,modes_covered,"
                    "hq_fraction\n";
    }

    void on_epoch_row(const EpochRow& row) override {
        epochs_ << row.epoch << ',' << row.cell.x << ':' << row.cell.y << ','
                << kind_label(row.gen_kind) << ','
                << fmt_double_csv(row.gen_incumbent_fitness) << ','
                << fmt_double_csv(row.gen_offspring_fitness) << ','
                << (row.gen_replaced ? 1 : 0) << ',' << row.gen_version << ','
                << kind_label(row.disc_kind) << ','
                << fmt_double_csv(row.disc_incumbent_fitness) << ','
                << fmt_double_csv(row.disc_offspring_fitness) << ','
                << (row.disc_replaced ? 1 : 0) << ',' << row.disc_version
                << '\n';
    }

    void on_metrics_row(const MetricsRow& row) override {
        metrics_ << row.epoch << ',' << row.cell << ','
                 << fmt_double_csv(row.report.frechet_distance) << ','
                 << fmt_double_csv(row.report.tvd) << ','
                 << row.report.modes_covered << ','
                 << fmt_double_csv(row.report.high_quality_fraction) << '\n';
    }

    void on_checkpoint(std::uint32_t epoch, const std::vector<Cell>& cells,
                       bool final) override {
        char label[32];
        if (final) {
            std::snprintf(label, sizeof(label), "final");
        } else {
            std::snprintf(label, sizeof(label), "epoch_%06u", epoch);
        }
        const fs::path dir = seed_dir_ / "checkpoints" / label;
        fs::create_directories(dir);
        for (const Cell& cell : cells) {
            const std::string stem = "cell_" + std::to_string(cell.coord.x) +
                                     "_" + std::to_string(cell.coord.y);
            save_genome(cell.center_generator, dir / (stem + ".gen.cgg"));
            save_genome(cell.center_discriminator, dir / (stem + ".disc.cgg"));
        }
    }

private:
    fs::path seed_dir_;
    std::ofstream epochs_;
    std::ofstream metrics_;
};

SeedOutcome train_one_seed(const ExperimentConfig& config, std::uint64_t seed,
                           const fs::path& seed_dir) {
    SeedOutcome outcome;
    outcome.seed = seed;
    fs::create_directories(seed_dir);
    CsvObserver observer(seed_dir);
    const TrainingResult result = run_training(
        config.engine_config(seed), &observer, config.checkpoint_every);

    // Final per-seed report: the last "best" metrics row.
    const MetricsRow* final_best = nullptr;
    for (const MetricsRow& row : result.metrics_rows) {
        if (row.cell == "best") final_best = &row;
    }
    if (final_best == nullptr) {
        throw Error("training produced no metrics rows");
    }
    outcome.completed = true;
    outcome.final_frechet = final_best->report.frechet_distance;
    outcome.final_tvd = final_best->report.tvd;
    outcome.final_modes_covered = final_best->report.modes_covered;
    outcome.final_hq_fraction = final_best->report.high_quality_fraction;
    outcome.steps_executed = result.steps_executed;
    outcome.epochs_run = result.epochs_run;

    std::ofstream report(seed_dir / "final_report.txt", std::ios::trunc);
    report << "seed = " << seed << "\n"
           << "steps_executed = " << result.steps_executed << "\n"
           << "epochs_run = " << result.epochs_run << "\n"
           << "final_frechet_distance = "
           << fmt_double_csv(outcome.final_frechet) << "\n"
           << "final_tvd = " << fmt_double_csv(outcome.final_tvd) << "\n"
           << "final_modes_covered = " << outcome.final_modes_covered << "\n"
           << "final_hq_fraction = "
           << fmt_double_csv(outcome.final_hq_fraction) << "\n";
    return outcome;
}

std::map<std::string, std::string> read_kv_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace

bool RunSummary::all_completed() const {
    return std::all_of(seeds.begin(), seeds.end(),
                       [](const SeedOutcome& s) { return s.completed; });
}

fs::path resolve_out_dir(const std::string& out) {
    fs::path path(out);
    if (path.is_relative()) {
        if (const char* root = std::getenv("MUSTANGS_OUT_ROOT");
            root != nullptr && *root != '\0') {
            return fs::path(root) / path;
        }
    }
    return path;
}

RunSummary run_experiment(const ExperimentConfig& config, unsigned jobs) {
    RunSummary summary;
    summary.method = config.method;
    summary.hash = config_hash(config);

    const fs::path out_root = resolve_out_dir(config.out);
    fs::create_directories(out_root);
    std::string base_id = std::string(to_string(config.method)) + "-" +
                          hash_hex(summary.hash) + "-" + utc_timestamp();
    fs::path run_dir = out_root / base_id;
    for (int suffix = 2; fs::exists(run_dir); ++suffix) {
        run_dir = out_root / (base_id + "-" + std::to_string(suffix));
    }
    fs::create_directories(run_dir);
    summary.run_dir = run_dir;
    summary.run_id = run_dir.filename().string();

    {
        std::ofstream echo(run_dir / "config.txt", std::ios::trunc);
        echo << canonical_text(config);
    }

    summary.seeds.resize(config.seeds.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(
        jobs, static_cast<unsigned>(config.seeds.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.seeds.size()) return;
            const std::uint64_t seed = config.seeds[i];
            const fs::path seed_dir =
                run_dir / ("seed_" + std::to_string(seed));
            try {
                summary.seeds[i] = train_one_seed(config, seed, seed_dir);
            } catch (const std::exception& e) {
                summary.seeds[i].seed = seed;
                summary.seeds[i].completed = false;
                summary.seeds[i].error = e.what();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    {
        std::ofstream manifest(run_dir / "manifest.txt", std::ios::trunc);
        manifest << "run_id = " << summary.run_id << "\n"
                 << "method = " << to_string(config.method) << "\n"
                 << "config_hash = " << hash_hex(summary.hash) << "\n"
                 << "kernel_backend = " << kernels::backend_name() << "\n"
                 << "seed_count = " << config.seeds.size() << "\n";
        for (const SeedOutcome& s : summary.seeds) {
            manifest << "seed_" << s.seed << " = "
                     << (s.completed ? "completed"
                                     : "FAILED: " + s.error)
                     << "\n";
        }
        manifest << "status = "
                 << (summary.all_completed() ? "completed" : "PARTIAL")
                 << "\n";
    }

    {
        std::ofstream report(run_dir / "final_report.txt", std::ios::trunc);
        report << "run_id = " << summary.run_id << "\n"
               << "method = " << to_string(config.method) << "\n";
        std::vector<double> fds, tvds;
        for (const SeedOutcome& s : summary.seeds) {
            report << "seed_" << s.seed << " = ";
            if (s.completed) {
                report << "frechet=" << fmt_double_csv(s.final_frechet)
                       << " tvd=" << fmt_double_csv(s.final_tvd)
                       << " modes=" << s.final_modes_covered
                       << " hq=" << fmt_double_csv(s.final_hq_fraction)
                       << " steps=" << s.steps_executed << "\n";
                fds.push_back(s.final_frechet);
                tvds.push_back(s.final_tvd);
            } else {
                report << "FAILED: " << s.error << "\n";
            }
        }
        if (fds.size() >= 2) {
            const SummaryStats fd = summarize_values(fds);
            const SummaryStats tv = summarize_values(tvds);
            report << "frechet mean=" << fmt_double_csv(fd.mean)
                   << " std%=" << fmt_double_csv(fd.std_pct)
                   << " median=" << fmt_double_csv(fd.median)
                   << " iqr=" << fmt_double_csv(fd.iqr) << "\n";
            report << "tvd mean=" << fmt_double_csv(tv.mean)
                   << " std%=" << fmt_double_csv(tv.std_pct)
                   << " median=" << fmt_double_csv(tv.median)
                   << " iqr=" << fmt_double_csv(tv.iqr) << "\n";
        }
    }

    if (!summary.all_completed()) {
        std::string failed;
        for (const SeedOutcome& s : summary.seeds) {
            if (!s.completed) {
                failed += " seed_" + std::to_string(s.seed);
            }
        }
        throw Error("run " + summary.run_id + " is partial; failed:" + failed);
    }
    return summary;
}

RunSummary load_run(const fs::path& run_dir) {
    const auto manifest = read_kv_file(run_dir / "manifest.txt");
    RunSummary summary;
    summary.run_dir = run_dir;
    const auto id = manifest.find("run_id");
    const auto method = manifest.find("method");
    if (id == manifest.end() || method == manifest.end()) {
        throw FormatError(run_dir.string() + ": manifest is missing run_id "
                                             "or method");
    }
    summary.run_id = id->second;
    summary.method = parse_method(method->second);

    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("seed_", 0) != 0) continue;
        SeedOutcome outcome;
        outcome.seed = std::strtoull(name.c_str() + 5, nullptr, 10);
        const fs::path report = entry.path() / "final_report.txt";
        if (fs::exists(report)) {
            const auto kv = read_kv_file(report);
            const auto need = [&](const char* key) -> std::string {
                const auto it = kv.find(key);
                if (it == kv.end()) {
                    throw FormatError(report.string() + ": missing " + key);
                }
                return it->second;
            };
            outcome.completed = true;
            outcome.final_frechet = std::stod(need("final_frechet_distance"));
            outcome.final_tvd = std::stod(need("final_tvd"));
            outcome.final_modes_covered =
                static_cast<int>(std::stol(need("final_modes_covered")));
            outcome.final_hq_fraction = std::stod(need("final_hq_fraction"));
            outcome.steps_executed = std::stoull(need("steps_executed"));
            outcome.epochs_run =
                static_cast<std::uint32_t>(std::stoul(need("epochs_run")));
        }
        summary.seeds.push_back(outcome);
    }
    std::sort(summary.seeds.begin(), summary.seeds.end(),
              [](const SeedOutcome& a, const SeedOutcome& b) {
                  return a.seed < b.seed;
              });
    return summary;
}

namespace {

MethodSummary method_summary_of(const RunSummary& run, const std::string& label) {
    MethodSummary ms;
    ms.label = label;
    for (const SeedOutcome& s : run.seeds) {
        if (!s.completed) continue;
        ms.frechet_values.push_back(s.final_frechet);
        ms.tvd_values.push_back(s.final_tvd);
    }
    ms.frechet = summarize_values(ms.frechet_values);
    ms.tvd = summarize_values(ms.tvd_values);
    return ms;
}

void append_stats_csv(std::ostringstream& out, const std::string& label,
                      const SummaryStats& s) {
    out << label << ',' << fmt_double_csv(s.mean) << ','
        << fmt_double_csv(s.std_pct) << ',' << fmt_double_csv(s.median) << ','
        << fmt_double_csv(s.iqr) << '\n';
}

}  // namespace

std::string SummaryTable::to_text() const {
    std::ostringstream out;
    out << std::left;
    const auto table = [&](const char* title, auto&& stats_of) {
        out << title << "\n";
        out << std::setw(14) << "method" << std::right << std::setw(12)
            << "mean" << std::setw(10) << "std%" << std::setw(12) << "median"
            << std::setw(12) << "iqr" << std::left << "\n";
        for (const MethodSummary& m : methods) {
            const SummaryStats& s = stats_of(m);
            std::ostringstream line;
            line << std::left << std::setw(14) << m.label << std::right
                 << std::fixed << std::setprecision(4) << std::setw(12)
                 << s.mean << std::setprecision(2) << std::setw(10)
                 << s.std_pct << std::setprecision(4) << std::setw(12)
                 << s.median << std::setw(12) << s.iqr;
            out << line.str() << "\n";
        }
        out << "\n";
    };
    table("final frechet_distance (lower is better)",
          [](const MethodSummary& m) -> const SummaryStats& { return m.frechet; });
    table("final tvd (lower is better)",
          [](const MethodSummary& m) -> const SummaryStats& { return m.tvd; });

    if (!comparisons.empty()) {
        out << "pairwise rank-sum on final frechet_distance (Holm-adjusted)\n";
        for (const PairwiseComparison& c : comparisons) {
            std::ostringstream line;
            line << std::left << std::setw(30)
                 << (c.label_a + " vs " + c.label_b) << "U="
                 << std::setw(8) << c.frechet_ranksum.u
                 << " p=" << std::scientific << std::setprecision(3)
                 << c.frechet_ranksum.p << " holm_p=" << c.holm_p;
            if (c.frechet_ranksum.tie_warning) line << " (ties)";
            out << line.str() << "\n";
        }
    }
    return out.str();
}

std::string SummaryTable::frechet_csv() const {
    std::ostringstream out;
    out << "method,mean,std_pct,median,iqr\n";
    for (const MethodSummary& m : methods) {
        append_stats_csv(out, m.label, m.frechet);
    }
    return out.str();
}

std::string SummaryTable::tvd_csv() const {
    std::ostringstream out;
    out << "method,mean,std_pct,median,iqr\n";
    for (const MethodSummary& m : methods) append_stats_csv(out, m.label, m.tvd);
    return out.str();
}

SummaryTable summarize(const std::vector<fs::path>& run_dirs) {
    if (run_dirs.empty()) throw UsageError("summarize: no run directories");
    SummaryTable table;
    std::vector<std::string> incomplete;
    std::map<std::string, int> label_uses;
    for (const fs::path& dir : run_dirs) {
        const RunSummary run = load_run(dir);
        std::size_t completed = 0;
        for (const SeedOutcome& s : run.seeds) {
            if (s.completed) ++completed;
        }
        if (completed < 2) {
            incomplete.push_back(dir.string());
            continue;
        }
        std::string label = to_string(run.method);
        const int uses = ++label_uses[label];
        if (uses > 1) label += "#" + std::to_string(uses);
        table.methods.push_back(method_summary_of(run, label));
    }
    if (!incomplete.empty()) {
        std::string msg = "runs with fewer than 2 completed seeds:";
        for (const std::string& name : incomplete) msg += "\n  - " + name;
        throw UsageError(msg);
    }
    std::sort(table.methods.begin(), table.methods.end(),
              [](const MethodSummary& a, const MethodSummary& b) {
                  return a.frechet.median < b.frechet.median;
              });

    // Holm-corrected pairwise family over final frechet_distance.
    if (table.methods.size() >= 2) {
        std::vector<double> raw;
        for (std::size_t i = 0; i < table.methods.size(); ++i) {
            for (std::size_t j = i + 1; j < table.methods.size(); ++j) {
                PairwiseComparison cmp;
                cmp.label_a = table.methods[i].label;
                cmp.label_b = table.methods[j].label;
                cmp.frechet_ranksum = ranksum_test(
                    table.methods[i].frechet_values,
                    table.methods[j].frechet_values);
                raw.push_back(cmp.frechet_ranksum.p);
                table.comparisons.push_back(std::move(cmp));
            }
        }
        const std::vector<double> adjusted = holm_adjust(raw);
        for (std::size_t i = 0; i < adjusted.size(); ++i) {
            table.comparisons[i].holm_p = adjusted[i];
        }
    }
    return table;
}

std::string ComparisonReport::to_text() const {
    std::ostringstream out;
    out << "frechet_distance: U=" << frechet.u << " p=" << std::scientific
        << std::setprecision(4) << frechet.p
        << (frechet.tie_warning ? " (ties)" : "") << "\n";
    out << "tvd:              U=" << std::defaultfloat << tvd.u << " p="
        << std::scientific << std::setprecision(4) << tvd.p
        << (tvd.tie_warning ? " (ties)" : "") << "\n";
    return out.str();
}

ComparisonReport compare_runs(const fs::path& run_a, const fs::path& run_b) {
    const RunSummary a = load_run(run_a);
    const RunSummary b = load_run(run_b);
    std::vector<double> fd_a, fd_b, tvd_a, tvd_b;
    for (const SeedOutcome& s : a.seeds) {
        if (s.completed) {
            fd_a.push_back(s.final_frechet);
            tvd_a.push_back(s.final_tvd);
        }
    }
    for (const SeedOutcome& s : b.seeds) {
        if (s.completed) {
            fd_b.push_back(s.final_frechet);
            tvd_b.push_back(s.final_tvd);
        }
    }
    ComparisonReport report;
    report.frechet = ranksum_test(fd_a, fd_b);
    report.tvd = ranksum_test(tvd_a, tvd_b);
    return report;
}

std::string inspect_checkpoint(const fs::path& checkpoint,
                               std::size_t sample_count,
                               const fs::path* csv_out) {
    const Genome g = load_genome(checkpoint);
    std::ostringstream out;
    out << "file = " << checkpoint.string() << "\n"
        << "role = " << to_string(g.role) << "\n"
        << "layer_dims = ";
    for (std::size_t i = 0; i < g.layer_dims.size(); ++i) {
        if (i > 0) out << "x";
        out << g.layer_dims[i];
    }
    out << "\n"
        << "parameters = " << g.param_count() << "\n"
        << "learning_rate = " << fmt_double_csv(g.learning_rate) << "\n";

    if (g.role == Role::Generator) {
        Rng rng = Rng::stream(0xC0FFEEull, 0);
        const Matrix z = latent_batch(sample_count, g.input_dim(), rng);
        const Matrix samples = forward(g, z);
        const fs::path scatter =
            csv_out != nullptr ? *csv_out
                               : fs::path(checkpoint.string() + ".scatter.csv");
        std::ofstream csv(scatter, std::ios::trunc);
        if (!csv) throw Error("cannot write " + scatter.string());
        csv << "x,y\n";
        for (std::size_t i = 0; i < samples.rows(); ++i) {
            csv << fmt_double_csv(samples(i, 0)) << ','
                << fmt_double_csv(samples(i, 1)) << '\n';
        }
        out << "scatter_csv = " << scatter.string() << " (" << sample_count
            << " samples)\n";
    }
    return out.str();
}

}  // namespace mustangs
