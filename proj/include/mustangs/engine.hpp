#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mustangs/data.hpp"
#include "mustangs/genome.hpp"
#include "mustangs/grid.hpp"
#include "mustangs/metrics.hpp"
#include "mustangs/objectives.hpp"

namespace mustangs {

// Network shapes are fixed at desk scale: small enough for exhaustive
// finite-difference checks, expressive enough for 2D mixtures.
inline const std::vector<std::size_t> kGeneratorDims{kLatentDim, 32, 32, kDataDim};
inline const std::vector<std::size_t> kDiscriminatorDims{kDataDim, 32, 32, 1};

enum class ExecMode { Sequential, Parallel };

struct EngineConfig {
    GridSpec grid{1, 1};
    MixtureSpec data = MixtureSpec::ring8();
    std::uint64_t seed{1};
    std::uint64_t budget{0};          // total SGD steps across all cells
    std::uint32_t max_epochs{0};      // 0 = no epoch limit, budget governs
    double learning_rate{0.02};
    std::size_t batch_size{64};
    std::size_t steps_per_mutation{20};
    double lr_sigma{0.0};             // lr self-adaptation, 0 = off
    ObjectivePolicy policy = ObjectivePolicy::uniform_draw();
    std::uint32_t metrics_every{5};
    std::size_t metrics_samples{10000};
    double coverage_threshold{0.01};
    ExecMode mode{ExecMode::Sequential};
};

// One grid position: center genomes plus copies of the latest publications
// from the neighborhood, and a private RNG stream.
struct Cell {
    CellCoord coord;
    Genome center_generator;
    Genome center_discriminator;
    // Refreshed each epoch from the previous epoch's publications; entry 0
    // is the cell's own publication. Genomes carry the publication version
    // they were copied from.
    std::vector<std::pair<CellCoord, Genome>> gen_subpop;
    std::vector<std::pair<CellCoord, Genome>> disc_subpop;
    Rng rng;
};

struct FitnessValue {
    double value{0.0};  // lower is better
};

// Mean BCE loss of `g` against each adversary in turn, on a shared
// evaluation batch. Fitness always uses the BCE form regardless of which
// mutation was drawn, so offspring and incumbents stay comparable.
FitnessValue evaluate_fitness(const Genome& g,
                              std::span<const Genome* const> adversaries,
                              const Matrix& eval_real,
                              const Matrix& eval_latent);

// Per-cell, per-epoch observability record. Offspring fitness is NaN when
// the mutation was skipped (budget) or aborted (numeric failure).
struct EpochRow {
    std::uint32_t epoch{0};
    CellCoord cell;
    std::optional<ObjectiveKind> gen_kind;
    double gen_incumbent_fitness{0.0};
    double gen_offspring_fitness{0.0};
    bool gen_replaced{false};
    std::uint64_t gen_version{0};
    std::optional<ObjectiveKind> disc_kind;
    double disc_incumbent_fitness{0.0};
    double disc_offspring_fitness{0.0};
    bool disc_replaced{false};
    std::uint64_t disc_version{0};
};

struct MetricsRow {
    std::uint32_t epoch{0};
    std::string cell;  // "x:y" or "best"
    MetricsReport report;
};

struct TrainingObserver {
    virtual ~TrainingObserver() = default;
    virtual void on_epoch_row(const EpochRow&) {}
    virtual void on_metrics_row(const MetricsRow&) {}
    // Called at checkpoint epochs and once more after training finishes
    // (final = true).
    virtual void on_checkpoint(std::uint32_t, const std::vector<Cell>&, bool) {}
};

struct TrainingResult {
    std::vector<Cell> cells;
    std::vector<EpochRow> epoch_rows;
    std::vector<MetricsRow> metrics_rows;
    std::uint64_t steps_executed{0};
    std::uint32_t epochs_run{0};
};

// Runs the spatial coevolutionary loop. Sequential mode processes cells in
// row-major order; parallel mode runs the cells of one epoch concurrently.
// Both read neighbor publications from the previous epoch (bulk-synchronous,
// staleness exactly one), so they produce identical results. checkpoint_every
// of 0 means final checkpoint only.
TrainingResult run_training(const EngineConfig& config,
                            TrainingObserver* observer = nullptr,
                            std::uint32_t checkpoint_every = 0);

}  // namespace mustangs
