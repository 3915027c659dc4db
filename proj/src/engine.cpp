#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

#include "mustangs/engine.hpp"
#include "mustangs/errors.hpp"

namespace mustangs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinLearningRate = 1e-6;

// RNG stream ids per master seed. Cell streams start at kCellStreamBase +
// row-major index.
constexpr std::uint64_t kMetricsStream = 1;
constexpr std::uint64_t kReferenceStream = 2;
constexpr std::uint64_t kCellStreamBase = 100;

struct CellPublication {
    Genome generator;
    Genome discriminator;
};

struct MemberRef {
    const Genome* genome;
    CellCoord coord;
};

// Lower fitness wins; ties break toward lower row-major coordinate, then
// lower publication version.
bool better(double fit_a, const MemberRef& a, double fit_b, const MemberRef& b) {
    if (fit_a != fit_b) return fit_a < fit_b;
    if (a.coord != b.coord) return a.coord < b.coord;
    return a.genome->version < b.genome->version;
}

void validate(const EngineConfig& c) {
    std::string problems;
    auto flag = [&problems](const std::string& msg) {
        problems += problems.empty() ? msg : "; " + msg;
    };
    if (c.grid.width < 1 || c.grid.height < 1) flag("grid dims must be >= 1");
    if (c.batch_size < 1) flag("batch_size must be >= 1");
    if (!(c.learning_rate > 0.0) || c.learning_rate > 1.0) {
        flag("learning_rate must be in (0, 1]");
    }
    if (c.lr_sigma < 0.0) flag("lr_sigma must be >= 0");
    if (c.metrics_every < 1) flag("metrics_every must be >= 1");
    if (c.metrics_samples < 2) flag("metrics_samples must be >= 2");
    if (c.coverage_threshold < 0.0 || c.coverage_threshold > 1.0) {
        flag("coverage_threshold must be in [0, 1]");
    }
    if (c.data.centers.empty()) flag("mixture needs >= 1 center");
    if (!(c.data.sigma > 0.0)) flag("mixture sigma must be positive");
    if (c.steps_per_mutation == 0 && c.budget > 0 && c.max_epochs == 0) {
        flag("steps_per_mutation 0 with nonzero budget needs max_epochs as a "
             "stopping rule");
    }
    if (!problems.empty()) throw ConfigError(problems);
}

struct MutationPlan {
    bool generator{false};
    bool discriminator{false};
};

struct CellOutcome {
    EpochRow row;
    CellPublication publication;
    std::uint64_t steps{0};
};

class Engine {
public:
    explicit Engine(const EngineConfig& config, TrainingObserver* observer,
                    std::uint32_t checkpoint_every)
        : config_(config),
          observer_(observer),
          checkpoint_every_(checkpoint_every),
          coords_(all_cells(config.grid)),
          metrics_rng_(Rng::stream(config.seed, kMetricsStream)) {
        Rng ref_rng = Rng::stream(config_.seed, kReferenceStream);
        const Matrix reference =
            sample_real(config_.data, config_.metrics_samples, ref_rng);
        reference_fit_ = GaussianFit::from_samples(reference);
        reference_hist_ =
            assign_modes(reference, config_.data.centers, config_.data.sigma);

        cells_.reserve(coords_.size());
        publications_.reserve(coords_.size());
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            Cell cell;
            cell.coord = coords_[i];
            cell.rng = Rng::stream(config_.seed, kCellStreamBase + i);
            cell.center_generator =
                Genome::random_init(Role::Generator, kGeneratorDims,
                                    config_.learning_rate, 0.1, cell.rng);
            cell.center_discriminator =
                Genome::random_init(Role::Discriminator, kDiscriminatorDims,
                                    config_.learning_rate, 0.1, cell.rng);
            publications_.push_back(
                {cell.center_generator, cell.center_discriminator});
            cells_.push_back(std::move(cell));
        }
    }

    TrainingResult run() {
        TrainingResult result;
        emit_metrics(result, 0, /*fitness=*/initial_generator_fitness());

        std::uint32_t epoch = 0;
        std::uint32_t last_metrics_epoch = 0;
        while (result.steps_executed < config_.budget &&
               (config_.max_epochs == 0 || epoch < config_.max_epochs)) {
            ++epoch;
            const std::vector<MutationPlan> plan =
                budget_plan(result.steps_executed);
            const std::vector<CellPublication> snapshot = publications_;

            std::vector<CellOutcome> outcomes(cells_.size());
            if (config_.mode == ExecMode::Parallel && cells_.size() > 1) {
                run_epoch_parallel(epoch, snapshot, plan, outcomes);
            } else {
                for (std::size_t i = 0; i < cells_.size(); ++i) {
                    outcomes[i] = cell_epoch(epoch, i, snapshot, plan[i]);
                }
            }

            std::vector<double> published_gen_fitness(cells_.size());
            for (std::size_t i = 0; i < cells_.size(); ++i) {
                publications_[i] = outcomes[i].publication;
                result.steps_executed += outcomes[i].steps;
                const EpochRow& row = outcomes[i].row;
                published_gen_fitness[i] = row.gen_replaced
                                               ? row.gen_offspring_fitness
                                               : row.gen_incumbent_fitness;
                result.epoch_rows.push_back(row);
                if (observer_ != nullptr) observer_->on_epoch_row(row);
            }
            result.epochs_run = epoch;

            const bool done = result.steps_executed >= config_.budget ||
                              (config_.max_epochs != 0 &&
                               epoch >= config_.max_epochs);
            if (epoch % config_.metrics_every == 0 || done) {
                emit_metrics(result, epoch, published_gen_fitness);
                last_metrics_epoch = epoch;
            }
            if (checkpoint_every_ > 0 && epoch % checkpoint_every_ == 0 &&
                observer_ != nullptr) {
                observer_->on_checkpoint(epoch, cells_, false);
            }
        }
        (void)last_metrics_epoch;
        if (observer_ != nullptr) {
            observer_->on_checkpoint(epoch, cells_, true);
        }
        result.cells = cells_;
        return result;
    }

private:
    // Decides up front which mutations this epoch may run, charging
    // steps_per_mutation per mutation in row-major cell order. Precomputing
    // keeps budget gating identical between sequential and parallel modes.
    std::vector<MutationPlan> budget_plan(std::uint64_t steps_done) const {
        std::vector<MutationPlan> plan(cells_.size());
        std::uint64_t projected = steps_done;
        for (auto& p : plan) {
            if (projected < config_.budget) {
                p.generator = true;
                projected += config_.steps_per_mutation;
            }
            if (projected < config_.budget) {
                p.discriminator = true;
                projected += config_.steps_per_mutation;
            }
        }
        return plan;
    }

    void run_epoch_parallel(std::uint32_t epoch,
                            const std::vector<CellPublication>& snapshot,
                            const std::vector<MutationPlan>& plan,
                            std::vector<CellOutcome>& outcomes) {
        const std::size_t workers =
            std::min<std::size_t>(cells_.size(),
                                  std::max(1u, std::thread::hardware_concurrency()));
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells_.size()) return;
                    try {
                        outcomes[i] = cell_epoch(epoch, i, snapshot, plan[i]);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    // One coevolutionary step for one cell. RNG consumption order is fixed:
    // eval latent batch, eval real batch, generator tournament (2 draws),
    // discriminator tournament (2 draws), then per role: objective draw
    // (uniform policy only), optional lr perturbation, and one latent (plus
    // one real for discriminators) batch per SGD step.
    CellOutcome cell_epoch(std::uint32_t epoch, std::size_t index,
                           const std::vector<CellPublication>& snapshot,
                           const MutationPlan& plan) {
        Cell& cell = cells_[index];
        refresh_subpops(cell, snapshot);

        CellOutcome outcome;
        EpochRow& row = outcome.row;
        row.epoch = epoch;
        row.cell = cell.coord;
        try {
            cell_epoch_inner(cell, plan, row, outcome.steps);
        } catch (const NumericError&) {
            // Whole-cell fallback: the incumbents survive, the row logs the
            // event as NaN fitnesses with no mutation recorded.
            row.gen_kind.reset();
            row.disc_kind.reset();
            row.gen_incumbent_fitness = kNaN;
            row.disc_incumbent_fitness = kNaN;
            row.gen_offspring_fitness = kNaN;
            row.disc_offspring_fitness = kNaN;
            row.gen_replaced = false;
            row.disc_replaced = false;
        }

        // Publication happens every epoch, replaced or not.
        cell.center_generator.version = snapshot[index].generator.version + 1;
        cell.center_discriminator.version =
            snapshot[index].discriminator.version + 1;
        row.gen_version = cell.center_generator.version;
        row.disc_version = cell.center_discriminator.version;
        outcome.publication = {cell.center_generator, cell.center_discriminator};
        return outcome;
    }

    void cell_epoch_inner(Cell& cell, const MutationPlan& plan, EpochRow& row,
                          std::uint64_t& steps_used) {
        const Matrix eval_latent =
            latent_batch(config_.batch_size, kLatentDim, cell.rng);
        const Matrix eval_real =
            sample_real(config_.data, config_.batch_size, cell.rng);

        // All-pairs evaluation with shared forward passes. Loss order and
        // arithmetic match evaluate_fitness exactly; only redundant
        // forwards are removed.
        const std::size_t members = cell.gen_subpop.size();
        const auto as_span = [](const Matrix& m) {
            return std::span<const double>(m.data(), m.size());
        };
        std::vector<Matrix> fakes(members);
        std::vector<Matrix> d_real(members);
        for (std::size_t m = 0; m < members; ++m) {
            fakes[m] = forward(cell.gen_subpop[m].second, eval_latent);
            d_real[m] = forward(cell.disc_subpop[m].second, eval_real);
        }
        std::vector<std::vector<Matrix>> d_fake(members);
        for (std::size_t j = 0; j < members; ++j) {
            d_fake[j].reserve(members);
            for (std::size_t i = 0; i < members; ++i) {
                d_fake[j].push_back(
                    forward(cell.disc_subpop[j].second, fakes[i]));
            }
        }
        std::vector<double> gen_fitness(members);
        std::vector<double> disc_fitness(members);
        for (std::size_t i = 0; i < members; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < members; ++j) {
                acc += generator_loss(ObjectiveKind::Bce, as_span(d_fake[j][i]));
            }
            gen_fitness[i] = acc / static_cast<double>(members);
        }
        for (std::size_t j = 0; j < members; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < members; ++i) {
                acc += discriminator_loss(ObjectiveKind::Bce, as_span(d_real[j]),
                                          as_span(d_fake[j][i]));
            }
            disc_fitness[j] = acc / static_cast<double>(members);
        }
        row.gen_incumbent_fitness = gen_fitness[0];
        row.disc_incumbent_fitness = disc_fitness[0];

        const auto member_ref = [](const std::pair<CellCoord, Genome>& entry) {
            return MemberRef{&entry.second, entry.first};
        };
        const auto select = [&](const std::vector<std::pair<CellCoord, Genome>>&
                                    pop,
                                const std::vector<double>& fitness,
                                std::size_t i, std::size_t j) {
            const MemberRef a = member_ref(pop[i]);
            const MemberRef b = member_ref(pop[j]);
            return better(fitness[i], a, fitness[j], b) ? i : j;
        };
        const auto argbest = [&](const std::vector<std::pair<CellCoord, Genome>>&
                                     pop,
                                 const std::vector<double>& fitness) {
            std::size_t best = 0;
            for (std::size_t m = 1; m < pop.size(); ++m) {
                if (better(fitness[m], member_ref(pop[m]), fitness[best],
                           member_ref(pop[best]))) {
                    best = m;
                }
            }
            return best;
        };

        // Binary tournament picks the parent; the mutation adversary is the
        // outright fittest of the opposite role.
        const std::size_t gen_t1 = cell.rng.below(members);
        const std::size_t gen_t2 = cell.rng.below(members);
        const std::size_t gen_parent =
            select(cell.gen_subpop, gen_fitness, gen_t1, gen_t2);
        const std::size_t disc_t1 = cell.rng.below(members);
        const std::size_t disc_t2 = cell.rng.below(members);
        const std::size_t disc_parent =
            select(cell.disc_subpop, disc_fitness, disc_t1, disc_t2);
        const std::size_t best_gen = argbest(cell.gen_subpop, gen_fitness);
        const std::size_t best_disc = argbest(cell.disc_subpop, disc_fitness);

        row.gen_offspring_fitness = kNaN;
        row.disc_offspring_fitness = kNaN;

        // Offspring are re-evaluated against the same adversary snapshot and
        // evaluation batch as the incumbents.
        const auto gen_fitness_of = [&](const Genome& candidate) {
            const Matrix fake = forward(candidate, eval_latent);
            double acc = 0.0;
            for (std::size_t j = 0; j < members; ++j) {
                acc += generator_loss(
                    ObjectiveKind::Bce,
                    as_span(forward(cell.disc_subpop[j].second, fake)));
            }
            return acc / static_cast<double>(members);
        };
        const auto disc_fitness_of = [&](const Genome& candidate) {
            const Matrix d_real_off = forward(candidate, eval_real);
            double acc = 0.0;
            for (std::size_t i = 0; i < members; ++i) {
                acc += discriminator_loss(ObjectiveKind::Bce,
                                          as_span(d_real_off),
                                          as_span(forward(candidate, fakes[i])));
            }
            return acc / static_cast<double>(members);
        };

        Genome gen_offspring;
        bool gen_has_offspring = false;
        if (plan.generator) {
            const ObjectiveKind kind = config_.policy.draw(cell.rng);
            row.gen_kind = kind;
            auto [offspring, steps] =
                mutate(cell.gen_subpop[gen_parent].second,
                       cell.disc_subpop[best_disc].second, kind, cell.rng);
            steps_used += steps;
            if (offspring.has_value()) {
                gen_offspring = std::move(*offspring);
                gen_has_offspring = true;
                row.gen_offspring_fitness = gen_fitness_of(gen_offspring);
            }
        }
        Genome disc_offspring;
        bool disc_has_offspring = false;
        if (plan.discriminator) {
            const ObjectiveKind kind = config_.policy.draw(cell.rng);
            row.disc_kind = kind;
            auto [offspring, steps] =
                mutate(cell.disc_subpop[disc_parent].second,
                       cell.gen_subpop[best_gen].second, kind, cell.rng);
            steps_used += steps;
            if (offspring.has_value()) {
                disc_offspring = std::move(*offspring);
                disc_has_offspring = true;
                row.disc_offspring_fitness = disc_fitness_of(disc_offspring);
            }
        }

        // Replacement gate: strictly better fitness against the identical
        // adversary snapshot and evaluation batch.
        row.gen_replaced = gen_has_offspring &&
                           row.gen_offspring_fitness < row.gen_incumbent_fitness;
        row.disc_replaced =
            disc_has_offspring &&
            row.disc_offspring_fitness < row.disc_incumbent_fitness;

        if (row.gen_replaced) {
            cell.center_generator = std::move(gen_offspring);
        }
        if (row.disc_replaced) {
            cell.center_discriminator = std::move(disc_offspring);
        }
    }

    // steps_per_mutation SGD bursts on the drawn objective against a frozen
    // adversary. A numeric failure aborts the offspring (nullopt); steps
    // completed before the failure still count against the budget.
    std::pair<std::optional<Genome>, std::uint64_t> mutate(
        const Genome& parent, const Genome& adversary, ObjectiveKind kind,
        Rng& rng) {
        Genome offspring = clone_genome(parent);
        if (config_.lr_sigma > 0.0) {
            offspring.learning_rate =
                std::clamp(offspring.learning_rate +
                               config_.lr_sigma * rng.normal(),
                           kMinLearningRate, 1.0);
        }
        std::uint64_t steps = 0;
        try {
            for (std::size_t s = 0; s < config_.steps_per_mutation; ++s) {
                const Matrix z =
                    latent_batch(config_.batch_size, kLatentDim, rng);
                GradientSet grads;
                if (parent.role == Role::Generator) {
                    grads = generator_loss_gradient(kind, offspring, adversary, z);
                } else {
                    const Matrix real =
                        sample_real(config_.data, config_.batch_size, rng);
                    grads = discriminator_loss_gradient(kind, offspring,
                                                        adversary, real, z);
                }
                sgd_step(offspring, grads, offspring.learning_rate);
                ++steps;
            }
        } catch (const NumericError&) {
            return {std::nullopt, steps};
        }
        return {offspring, steps};
    }

    void refresh_subpops(Cell& cell,
                         const std::vector<CellPublication>& snapshot) {
        const Neighborhood hood = neighborhood_of(config_.grid, cell.coord);
        cell.gen_subpop.clear();
        cell.disc_subpop.clear();
        for (const CellCoord& member : hood.members) {
            const std::size_t idx = cell_index(config_.grid, member);
            cell.gen_subpop.emplace_back(member, snapshot[idx].generator);
            cell.disc_subpop.emplace_back(member, snapshot[idx].discriminator);
        }
    }

    // Fitness of the initial (version 0) publications, used only to pick the
    // epoch-0 "best" metrics row. Consumes the metrics stream, never the
    // cell streams.
    std::vector<double> initial_generator_fitness() {
        const Matrix eval_latent =
            latent_batch(config_.batch_size, kLatentDim, metrics_rng_);
        const Matrix eval_real =
            sample_real(config_.data, config_.batch_size, metrics_rng_);
        std::vector<double> fitness(cells_.size());
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const Neighborhood hood =
                neighborhood_of(config_.grid, coords_[i]);
            std::vector<const Genome*> adversaries;
            adversaries.reserve(hood.members.size());
            for (const CellCoord& member : hood.members) {
                adversaries.push_back(
                    &publications_[cell_index(config_.grid, member)]
                         .discriminator);
            }
            fitness[i] = evaluate_fitness(publications_[i].generator,
                                          adversaries, eval_real, eval_latent)
                             .value;
        }
        return fitness;
    }

    void emit_metrics(TrainingResult& result, std::uint32_t epoch,
                      const std::vector<double>& generator_fitness) {
        const Matrix z =
            latent_batch(config_.metrics_samples, kLatentDim, metrics_rng_);
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (!best.has_value() ||
                generator_fitness[i] < generator_fitness[*best]) {
                best = i;
            }
        }
        MetricsRow best_row;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const Matrix samples = forward(publications_[i].generator, z);
            const ModeHistogram hist =
                assign_modes(samples, config_.data.centers, config_.data.sigma);
            MetricsRow row;
            row.epoch = epoch;
            row.cell = std::to_string(coords_[i].x) + ":" +
                       std::to_string(coords_[i].y);
            row.report.frechet_distance = frechet_distance(
                reference_fit_, GaussianFit::from_samples(samples));
            row.report.tvd = tvd(reference_hist_, hist);
            row.report.modes_covered =
                modes_covered(hist, config_.coverage_threshold);
            row.report.high_quality_fraction = high_quality_fraction(hist);
            if (i == *best) {
                best_row = row;
                best_row.cell = "best";
            }
            result.metrics_rows.push_back(row);
            if (observer_ != nullptr) observer_->on_metrics_row(row);
        }
        result.metrics_rows.push_back(best_row);
        if (observer_ != nullptr) observer_->on_metrics_row(best_row);
    }

    EngineConfig config_;
    TrainingObserver* observer_;
    std::uint32_t checkpoint_every_;
    std::vector<CellCoord> coords_;
    std::vector<Cell> cells_;
    std::vector<CellPublication> publications_;
    Rng metrics_rng_;
    GaussianFit reference_fit_;
    ModeHistogram reference_hist_;
};

}  // namespace

FitnessValue evaluate_fitness(const Genome& g,
                              std::span<const Genome* const> adversaries,
                              const Matrix& eval_real,
                              const Matrix& eval_latent) {
    if (adversaries.empty()) {
        throw UsageError("evaluate_fitness: empty adversary set");
    }
    for (const Genome* adv : adversaries) {
        if (adv->role == g.role) {
            throw UsageError("evaluate_fitness: adversaries must have the "
                             "opposite role");
        }
    }
    double acc = 0.0;
    if (g.role == Role::Generator) {
        const Matrix fake = forward(g, eval_latent);
        for (const Genome* adv : adversaries) {
            const Matrix d_fake = forward(*adv, fake);
            acc += generator_loss(
                ObjectiveKind::Bce,
                std::span<const double>(d_fake.data(), d_fake.size()));
        }
    } else {
        const Matrix d_real = forward(g, eval_real);
        for (const Genome* adv : adversaries) {
            const Matrix fake = forward(*adv, eval_latent);
            const Matrix d_fake = forward(g, fake);
            acc += discriminator_loss(
                ObjectiveKind::Bce,
                std::span<const double>(d_real.data(), d_real.size()),
                std::span<const double>(d_fake.data(), d_fake.size()));
        }
    }
    return FitnessValue{acc / static_cast<double>(adversaries.size())};
}

TrainingResult run_training(const EngineConfig& config,
                            TrainingObserver* observer,
                            std::uint32_t checkpoint_every) {
    validate(config);
    Engine engine(config, observer, checkpoint_every);
    return engine.run();
}

}  // namespace mustangs
