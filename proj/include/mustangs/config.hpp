#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mustangs/engine.hpp"

namespace mustangs {

enum class Method { Mustangs, LipBce, LipLse, LipHeu, EganStyle, GanBce };

const char* to_string(Method method);
Method parse_method(std::string_view text);

// Experiment configuration parsed from a flat key=value file with dotted
// sections. '#' starts a comment; unknown keys are errors; all validation
// problems are reported together. Keys:
//
//   method                     mustangs|lip-bce|lip-lse|lip-heu|egan-style|gan-bce
//   seeds                      comma-separated distinct u64 list
//   out                        output directory (under MUSTANGS_OUT_ROOT if
//                              that is set and the path is relative)
//   budget                     total SGD steps across all cells
//   epochs                     max epochs, 0 = unlimited        [default 0]
//   grid.width, grid.height    >= 1; gan-bce and egan-style require 1x1
//   data.name                  ring8|grid25|custom              [default ring8]
//   data.sigma                 mode noise, > 0                  [default 0.05]
//   data.centers               "x:y, x:y, ..." (custom only)
//   train.lr                   SGD learning rate in (0,1]       [default 0.02]
//   train.batch_size           >= 1                             [default 64]
//   train.steps_per_mutation   SGD steps per mutation           [default 20]
//   train.lr_sigma             lr self-adaptation, 0 = off      [default 0]
//   objectives.pin             bce|lse|heu|none                 [default none]
//   metrics.every              epochs between metric reports    [default 5]
//   metrics.samples            generator samples per report     [default 10000]
//   metrics.coverage_threshold mode-coverage cutoff             [default 0.01]
//   engine.mode                sequential|parallel              [default sequential]
//   checkpoint.every           epochs between checkpoints, 0 = final only
//
// The budget is enforced at mutation granularity: mutations are issued in
// row-major cell order while executed steps < budget, and an issued
// mutation always completes, so a run ends within one mutation's worth of
// the configured budget.
struct ExperimentConfig {
    Method method{Method::Mustangs};
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::uint64_t budget{0};
    std::uint32_t epochs{0};
    GridSpec grid{1, 1};
    std::string data_name{"ring8"};
    double data_sigma{0.05};
    std::vector<std::array<double, 2>> data_centers;
    double lr{0.02};
    std::size_t batch_size{64};
    std::size_t steps_per_mutation{20};
    double lr_sigma{0.0};
    std::string pin{"none"};
    std::uint32_t metrics_every{5};
    std::size_t metrics_samples{10000};
    double coverage_threshold{0.01};
    ExecMode mode{ExecMode::Sequential};
    std::uint32_t checkpoint_every{0};

    // Objective-draw policy implied by method + pin. Fixing the draw turns
    // mustangs into the corresponding fixed-loss variant, bit for bit.
    ObjectivePolicy objective_policy() const;
    MixtureSpec mixture() const;
    EngineConfig engine_config(std::uint64_t seed) const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Config in canonical form: every key, fixed order, one per line. Two
// configs hash equal iff their canonical texts match.
std::string canonical_text(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace mustangs
