#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "faae/checkpoint.hpp"
#include "faae/config.hpp"

namespace faae {

// Settings of a single training step.
struct StepSettings {
    double alpha = 100.0;
    double weight_adv = 0.1;
    LossNorm norm = LossNorm::l2sq;
    std::uint64_t step = 0;  // used in error messages
};

// The three optimizers of a run. `distance` (G and E) drives the re-encoding
// or reconstruction term, `disc` the discriminator, `gen` the adversarial
// update of the generator side (G for faae/gan, E for aae, G and E for bigan).
template <typename T>
struct Optimizers {
    Adam<T> distance;
    Adam<T> disc;
    Adam<T> gen;
};

template <typename T>
Optimizers<T> make_optimizers(const TrainConfig& config, Network<T>& G, Network<T>& E, Network<T>& D);

// (1) G and E on alpha * |z - E(G(z))|; (2) D on -adv_d with G(z) held fixed;
// (3) G on weight_adv * adv_g with D held fixed. Each phase runs its own
// forward pass over the same x and z.
template <typename T>
LossReport faae_step(Network<T>& G, Network<T>& E, Network<T>& D, const Tensor<T>& x, const Tensor<T>& z,
                     const StepSettings& settings, Optimizers<T>& opt);

// Phases (2) and (3) of faae_step.
template <typename T>
LossReport gan_step(Network<T>& G, Network<T>& D, const Tensor<T>& x, const Tensor<T>& z,
                    const StepSettings& settings, Optimizers<T>& opt);

// G and E on alpha * |x - G(E(x))|, the latent critic on z versus E(x), then E
// on the non-saturating loss against the critic.
template <typename T>
LossReport aae_step(Network<T>& G, Network<T>& E, Network<T>& D_latent, const Tensor<T>& x, const Tensor<T>& z,
                    const StepSettings& settings, Optimizers<T>& opt);

// Joint critic on (E(x), x) versus (z, G(z)), then G and E together on the
// flipped labels. The reported distance is the re-encoding error, untrained.
template <typename T>
LossReport bigan_step(Network<T>& G, Network<T>& E, Network<T>& D_joint, const Tensor<T>& x, const Tensor<T>& z,
                      const StepSettings& settings, Optimizers<T>& opt);

struct StepRecord {
    std::uint64_t step = 0;
    std::size_t epoch = 0;
    LossReport report;
    double lr_g = 0.0;
    double lr_d = 0.0;

    bool operator==(const StepRecord&) const = default;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double alpha = 0.0;
    std::size_t steps = 0;
    double adv_d = 0.0;
    double adv_g = 0.0;
    double distance = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const StepRecord& r);
std::string epochs_csv_header();
std::string epochs_csv_row(const EpochRecord& r);

class Trainer {
public:
    // Validates the configuration and builds dataset, networks and
    // optimizers; throws ConfigError before any step runs.
    explicit Trainer(TrainConfig config);

    const TrainConfig& config() const { return config_; }
    const Dataset& dataset() const { return dataset_; }
    const ModelSpec& model_spec() const { return spec_; }
    Network<float>& generator() { return G_; }
    Network<float>& encoder() { return E_; }
    Network<float>& discriminator() { return D_; }
    Optimizers<float>& optimizers() { return opt_; }
    Rng& rng() { return rng_; }

    std::size_t batches_per_epoch() const;
    std::size_t epoch() const { return epoch_; }
    std::uint64_t steps_done() const { return step_; }

    // One step of the configured objective at the current epoch's alpha.
    LossReport step(const Tensor<float>& x, const Tensor<float>& z);
    void run_epoch();
    // Runs the remaining epochs. `max_steps` stops early once reached.
    void train(std::optional<std::uint64_t> max_steps = std::nullopt);

    const std::vector<StepRecord>& trace() const { return trace_; }
    const std::vector<EpochRecord>& epochs() const { return epoch_records_; }
    std::function<void(const StepRecord&)> on_step;

    Checkpoint checkpoint() const;
    // checkpoint.faae, metrics.csv and epochs.csv.
    void write_outputs(const std::filesystem::path& dir) const;

private:
    TrainConfig config_;
    Dataset dataset_;
    ModelSpec spec_;
    Rng rng_;
    Network<float> G_;
    Network<float> E_;
    Network<float> D_;
    Optimizers<float> opt_;
    std::size_t epoch_ = 0;
    std::uint64_t step_ = 0;
    std::vector<StepRecord> trace_;
    std::vector<EpochRecord> epoch_records_;
};

}  // namespace faae
