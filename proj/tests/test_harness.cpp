#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mustangs/harness.hpp"

using namespace mustangs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mustangs_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

ExperimentConfig tiny_config(const fs::path& out, Method method) {
    ExperimentConfig cfg;
    cfg.method = method;
    cfg.seeds = {1, 2};
    cfg.out = out.string();
    cfg.grid = method == Method::GanBce || method == Method::EganStyle
                   ? GridSpec{1, 1}
                   : GridSpec{2, 2};
    cfg.budget = 160;
    cfg.batch_size = 8;
    cfg.steps_per_mutation = 4;
    cfg.metrics_every = 2;
    cfg.metrics_samples = 200;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("run_experiment writes the documented artifact tree") {
    TempDir tmp;
    const RunSummary summary =
        run_experiment(tiny_config(tmp.path, Method::Mustangs));
    CHECK(summary.all_completed());
    CHECK(fs::exists(summary.run_dir / "config.txt"));
    CHECK(fs::exists(summary.run_dir / "manifest.txt"));
    CHECK(fs::exists(summary.run_dir / "final_report.txt"));
    for (const char* seed : {"seed_1", "seed_2"}) {
        CHECK(fs::exists(summary.run_dir / seed / "metrics.csv"));
        CHECK(fs::exists(summary.run_dir / seed / "epochs.csv"));
        CHECK(fs::exists(summary.run_dir / seed / "final_report.txt"));
        CHECK(fs::exists(summary.run_dir / seed / "checkpoints" / "final" /
                         "cell_0_0.gen.cgg"));
    }
    const std::string metrics = slurp(summary.run_dir / "seed_1/metrics.csv");
    CHECK(metrics.rfind("epoch,cell,frechet_distance,tvd,modes_covered,"
                        "hq_fraction\n", 0) == 0);
    const std::string epochs = slurp(summary.run_dir / "seed_1/epochs.csv");
    CHECK(epochs.find("gen_incumbent_fitness") != std::string::npos);
    CHECK(epochs.find("\r") == std::string::npos);
}

TEST_CASE("re-running an identical config never overwrites") {
    TempDir tmp;
    const ExperimentConfig cfg = tiny_config(tmp.path, Method::GanBce);
    const RunSummary first = run_experiment(cfg);
    const RunSummary second = run_experiment(cfg);
    CHECK(first.run_dir != second.run_dir);
    CHECK(fs::exists(first.run_dir / "seed_1/metrics.csv"));
    CHECK(fs::exists(second.run_dir / "seed_1/metrics.csv"));
    // Identical config + seed in sequential mode: byte-identical CSVs.
    CHECK(slurp(first.run_dir / "seed_1/metrics.csv") ==
          slurp(second.run_dir / "seed_1/metrics.csv"));
    CHECK(slurp(first.run_dir / "seed_1/epochs.csv") ==
          slurp(second.run_dir / "seed_1/epochs.csv"));
}

TEST_CASE("seed-parallel jobs produce the same artifacts as serial runs") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_config(tmp.path, Method::Mustangs);
    cfg.seeds = {1, 2, 3};
    const RunSummary serial = run_experiment(cfg, 1);
    const RunSummary parallel = run_experiment(cfg, 3);
    for (const char* seed : {"seed_1", "seed_2", "seed_3"}) {
        CHECK(slurp(serial.run_dir / seed / "metrics.csv") ==
              slurp(parallel.run_dir / seed / "metrics.csv"));
        CHECK(slurp(serial.run_dir / seed / "epochs.csv") ==
              slurp(parallel.run_dir / seed / "epochs.csv"));
    }
}

TEST_CASE("summarize produces the four statistic columns sorted by median") {
    TempDir tmp;
    ExperimentConfig mustangs = tiny_config(tmp.path, Method::Mustangs);
    mustangs.seeds = {1, 2, 3, 4, 5};
    ExperimentConfig gan = tiny_config(tmp.path, Method::GanBce);
    gan.seeds = {1, 2, 3, 4, 5};
    const RunSummary run_a = run_experiment(mustangs);
    const RunSummary run_b = run_experiment(gan);

    const SummaryTable table = summarize({run_a.run_dir, run_b.run_dir});
    REQUIRE(table.methods.size() == 2);
    CHECK(table.methods[0].frechet.median <= table.methods[1].frechet.median);

    const std::string csv = table.frechet_csv();
    CHECK(csv.rfind("method,mean,std_pct,median,iqr\n", 0) == 0);
    // exactly four statistic columns
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(std::count(header.begin(), header.end(), ',') == 4);

    REQUIRE(table.comparisons.size() == 1);
    CHECK(table.comparisons[0].holm_p >= table.comparisons[0].frechet_ranksum.p);

    const std::string text = table.to_text();
    CHECK(text.find("median") != std::string::npos);

    // Statistics match an independent recomputation from the per-seed data.
    const RunSummary reloaded = load_run(run_a.run_dir);
    std::vector<double> fds;
    for (const SeedOutcome& s : reloaded.seeds) fds.push_back(s.final_frechet);
    std::sort(fds.begin(), fds.end());
    const double expected_median = fds[2];
    const auto row = std::find_if(table.methods.begin(), table.methods.end(),
                                  [](const MethodSummary& m) {
                                      return m.label == "mustangs";
                                  });
    REQUIRE(row != table.methods.end());
    CHECK(row->frechet.median == doctest::Approx(expected_median).epsilon(1e-12));
}

TEST_CASE("summarize lists runs with too few completed seeds by name") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_config(tmp.path, Method::Mustangs);
    cfg.seeds = {1};
    const RunSummary run = run_experiment(cfg);
    try {
        summarize({run.run_dir});
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find(run.run_dir.string()) !=
              std::string::npos);
    }
}

TEST_CASE("compare runs a rank-sum over final metrics") {
    TempDir tmp;
    ExperimentConfig a = tiny_config(tmp.path, Method::Mustangs);
    a.seeds = {1, 2, 3, 4, 5};
    ExperimentConfig b = tiny_config(tmp.path, Method::GanBce);
    b.seeds = {6, 7, 8, 9, 10};
    const RunSummary run_a = run_experiment(a);
    const RunSummary run_b = run_experiment(b);
    const ComparisonReport report = compare_runs(run_a.run_dir, run_b.run_dir);
    CHECK(report.frechet.p > 0.0);
    CHECK(report.frechet.p <= 1.0);
    CHECK(report.to_text().find("frechet_distance") != std::string::npos);
}

TEST_CASE("inspect prints metadata and exports a scatter CSV") {
    TempDir tmp;
    ExperimentConfig cfg = tiny_config(tmp.path, Method::GanBce);
    cfg.seeds = {1};
    const RunSummary run = run_experiment(cfg);
    const fs::path checkpoint =
        run.run_dir / "seed_1/checkpoints/final/cell_0_0.gen.cgg";
    REQUIRE(fs::exists(checkpoint));

    const fs::path scatter = tmp.path / "scatter.csv";
    const std::string text = inspect_checkpoint(checkpoint, 1000, &scatter);
    CHECK(text.find("role = generator") != std::string::npos);
    CHECK(text.find("layer_dims = 5x32x32x2") != std::string::npos);
    const std::string csv = slurp(scatter);
    CHECK(csv.rfind("x,y\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1001);
}

TEST_CASE("MUSTANGS_OUT_ROOT reroutes relative output directories") {
    TempDir tmp;
    ::setenv("MUSTANGS_OUT_ROOT", tmp.path.c_str(), 1);
    const fs::path resolved = resolve_out_dir("runs/abc");
    ::unsetenv("MUSTANGS_OUT_ROOT");
    CHECK(resolved == tmp.path / "runs/abc");
    CHECK(resolve_out_dir("/abs/path") == fs::path("/abs/path"));
}

TEST_CASE("CLI exit codes: 0 success, 1 config error, 2 runtime failure") {
    TempDir tmp;
    const std::string cli = MUSTANGS_CLI_PATH;
    REQUIRE(fs::exists(cli));

    const fs::path good_cfg = tmp.path / "good.cfg";
    {
        std::ofstream out(good_cfg);
        out << "method = gan-bce\nseeds = 1\nout = " << (tmp.path / "runs").string()
            << "\nbudget = 16\ntrain.batch_size = 8\n"
            << "train.steps_per_mutation = 4\nmetrics.samples = 100\n";
    }
    const fs::path bad_cfg = tmp.path / "bad.cfg";
    {
        std::ofstream out(bad_cfg);
        out << "method = unknown-method\n";
    }

    const auto run = [](const std::string& cmd) {
        const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("'" + cli + "' train '" + good_cfg.string() + "'") == 0);
    CHECK(run("'" + cli + "' train '" + bad_cfg.string() + "'") == 1);
    CHECK(run("'" + cli + "' compare /nonexistent/a /nonexistent/b") == 2);
}
