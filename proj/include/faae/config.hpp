#pragma once

// Training configuration and its `key = value` text form.
//
// Keys (defaults in brackets; "auto" picks a value from the dataset):
//   objective          faae | aae | gan | bigan                 [faae]
//   latent_dim         positive integer or auto                 [auto: 2 for 2D data, 32 for images]
//   batch_size                                                  [64]
//   epochs                                                      [50]
//   seed               64-bit integer                           [0]
//   alpha_schedule     start:alpha pairs, e.g. "0:30,200:100"   [0:100]
//   weight_adv                                                  [0.1]
//   lr_g, lr_d                                                  [3e-4, 1e-3]
//   lr_e               real or auto (= lr_g)                    [auto]
//   decay              inverse-time decay rate                  [1e-4]
//   decay_mode         step | epoch                             [step]
//   encoder_normalize  true | false                             [true]
//   loss_norm          l2sq | l2                                [l2sq]
//   dataset.kind       gauss8 | rings2d | sprites | image_dir   [gauss8]
//   dataset.count                                               [4096]
//   dataset.radius, dataset.sigma                               [2, 0.02]
//   dataset.size       sprite edge length                       [16]
//   dataset.path       directory of *.ppm files (image_dir)
//   dataset.seed       integer or auto (= seed + 1)             [auto]
//   model.arch         conv | mlp | auto                        [auto: mlp for 2D data, conv for images]
//   model.widths       comma list or auto                       [auto: 128,128 for mlp, 32,64 for conv]
//   model.critic_hidden comma list                              [64,64]

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faae/data.hpp"
#include "faae/models.hpp"
#include "faae/objectives.hpp"
#include "faae/optim.hpp"

namespace faae {

enum class Objective { faae, aae, gan, bigan };

std::string_view objective_name(Objective o);

struct AlphaPhase {
    std::size_t start_epoch = 0;
    double alpha = 100.0;

    bool operator==(const AlphaPhase&) const = default;
};

struct DatasetConfig {
    DatasetKind kind = DatasetKind::gauss8;
    std::size_t count = 4096;
    double radius = 2.0;
    double sigma = 0.02;
    std::size_t size = 16;
    std::string path;
    std::optional<std::uint64_t> seed;

    bool operator==(const DatasetConfig&) const = default;
};

struct ModelConfig {
    std::optional<Arch> arch;
    std::vector<std::size_t> widths;  // empty = auto
    std::vector<std::size_t> critic_hidden{64, 64};

    bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
    Objective objective = Objective::faae;
    std::optional<std::size_t> latent_dim;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
    std::vector<AlphaPhase> alpha_schedule{{0, 100.0}};
    double weight_adv = 0.1;
    double lr_g = 3e-4;
    double lr_d = 1e-3;
    std::optional<double> lr_e;
    double decay = 1e-4;
    DecayMode decay_mode = DecayMode::step;
    bool encoder_normalize = true;
    LossNorm loss_norm = LossNorm::l2sq;
    DatasetConfig dataset;
    ModelConfig model;

    bool operator==(const TrainConfig&) const = default;

    // Alpha in force during `epoch`.
    double alpha_at(std::size_t epoch) const;
    double encoder_lr() const { return lr_e.value_or(lr_g); }
    std::uint64_t dataset_seed() const { return dataset.seed.value_or(seed + 1); }

    // Throws ConfigError for values that cannot describe a run.
    void validate() const;
};

// Parses config text. Every failure is a ConfigError of the form
// "<source>:<line>: <key>: <reason>".
TrainConfig parse_config(std::string_view text, const std::string& source = "config");
// Throws IoError when the file cannot be read.
TrainConfig load_config(const std::filesystem::path& path);

// Canonical text listing every key; parse_config(to_text(c)) == c.
std::string to_text(const TrainConfig& config);

std::vector<AlphaPhase> parse_alpha_schedule(std::string_view text);
std::string format_alpha_schedule(const std::vector<AlphaPhase>& schedule);

Dataset build_dataset(const TrainConfig& config);
// Fills the auto fields from the dataset and validates the combination.
ModelSpec resolve_model(const TrainConfig& config, const Dataset& dataset);

}  // namespace faae
