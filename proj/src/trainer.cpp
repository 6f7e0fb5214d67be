#include "faae/trainer.hpp"

#include <cmath>
#include <fstream>

#include "faae/error.hpp"
#include "text.hpp"

namespace faae {

namespace {

template <typename T>
std::vector<NamedTensor<T>> prefixed(const Network<T>& net) {
    auto params = net.parameters();
    for (auto& p : params) p.name = net.name() + "." + p.name;
    return params;
}

template <typename T>
Tensor<T> rows(const Tensor<T>& t) {
    if (t.rank() == 2) return t;
    return reshape(t, {t.dim(0), t.dim(0) ? t.numel() / t.dim(0) : 0});
}

template <typename T>
void require_finite(const Tensor<T>& loss, const StepSettings& s, const char* phase) {
    if (!std::isfinite(static_cast<double>(loss.item()))) {
        throw NumericalError("step " + std::to_string(s.step) + ", phase " + phase + ": non-finite loss");
    }
}

template <typename T>
void run_phase(Adam<T>& opt, const Tensor<T>& loss, const StepSettings& s, const char* phase) {
    require_finite(loss, s, phase);
    opt.zero_grad();
    backward(loss);
    try {
        opt.step();
    } catch (const NumericalError& e) {
        throw NumericalError("step " + std::to_string(s.step) + ", phase " + phase + ": " + e.what());
    }
}

// D update on -adv_d with the generated batch held fixed; returns adv_d.
template <typename T>
double data_critic_phase(Network<T>& G, Network<T>& D, const Tensor<T>& x, const Tensor<T>& z,
                         const StepSettings& s, Optimizers<T>& opt) {
    Tensor<T> x_hat;
    {
        NoGradGuard guard;
        x_hat = G.forward(z, Mode::train);
    }
    const auto adv = gan_value(D.forward(x, Mode::train), D.forward(x_hat, Mode::train));
    run_phase(opt.disc, negate(adv.adv_d), s, "discriminator");
    return static_cast<double>(adv.adv_d.item());
}

// G update on weight_adv * (-mean log D(G(z))); returns the unweighted loss.
template <typename T>
double generator_phase(Network<T>& G, Network<T>& D, const Tensor<T>& z, const StepSettings& s,
                       Optimizers<T>& opt) {
    const Tensor<T> d_fake = D.forward(G.forward(z, Mode::train), Mode::train);
    const Tensor<T> adv_g = negate(mean(log_clamped(d_fake)));
    run_phase(opt.gen, scale(adv_g, s.weight_adv), s, "generator");
    return static_cast<double>(adv_g.item());
}

LossReport finish(double adv_d, double adv_g, double distance, const StepSettings& s) {
    LossReport r;
    r.adv_d = adv_d;
    r.adv_g = adv_g;
    r.recon_or_reenc = distance;
    r.alpha = s.alpha;
    r.total_weighted = s.weight_adv * adv_g + s.alpha * distance;
    return r;
}

}  // namespace

template <typename T>
Optimizers<T> make_optimizers(const TrainConfig& c, Network<T>& G, Network<T>& E, Network<T>& D) {
    const auto mode = c.decay_mode;
    Optimizers<T> opt;
    opt.distance = Adam<T>("distance", {{prefixed(G), c.lr_g}, {prefixed(E), c.encoder_lr()}}, c.decay, mode);
    opt.disc = Adam<T>("disc", {{prefixed(D), c.lr_d}}, c.decay, mode);
    switch (c.objective) {
        case Objective::faae:
        case Objective::gan: opt.gen = Adam<T>("gen", {{prefixed(G), c.lr_g}}, c.decay, mode); break;
        case Objective::aae: opt.gen = Adam<T>("gen", {{prefixed(E), c.encoder_lr()}}, c.decay, mode); break;
        case Objective::bigan:
            opt.gen = Adam<T>("gen", {{prefixed(G), c.lr_g}, {prefixed(E), c.encoder_lr()}}, c.decay, mode);
            break;
    }
    return opt;
}

template <typename T>
LossReport faae_step(Network<T>& G, Network<T>& E, Network<T>& D, const Tensor<T>& x, const Tensor<T>& z,
                     const StepSettings& s, Optimizers<T>& opt) {
    const Tensor<T> reenc = reencoding_loss(z, rows(E.forward(G.forward(z, Mode::train), Mode::train)), s.norm);
    require_finite(reenc, s, "re-encoding");
    run_phase(opt.distance, scale(reenc, s.alpha), s, "re-encoding");
    const double adv_d = data_critic_phase(G, D, x, z, s, opt);
    const double adv_g = generator_phase(G, D, z, s, opt);
    return finish(adv_d, adv_g, static_cast<double>(reenc.item()), s);
}

template <typename T>
LossReport gan_step(Network<T>& G, Network<T>& D, const Tensor<T>& x, const Tensor<T>& z, const StepSettings& s,
                    Optimizers<T>& opt) {
    const double adv_d = data_critic_phase(G, D, x, z, s, opt);
    const double adv_g = generator_phase(G, D, z, s, opt);
    return finish(adv_d, adv_g, 0.0, s);
}

template <typename T>
LossReport aae_step(Network<T>& G, Network<T>& E, Network<T>& D_latent, const Tensor<T>& x, const Tensor<T>& z,
                    const StepSettings& s, Optimizers<T>& opt) {
    const Tensor<T> recon = reconstruction_loss(x, G.forward(rows(E.forward(x, Mode::train)), Mode::train));
    require_finite(recon, s, "reconstruction");
    run_phase(opt.distance, scale(recon, s.alpha), s, "reconstruction");

    Tensor<T> code;
    {
        NoGradGuard guard;
        code = rows(E.forward(x, Mode::train));
    }
    const auto adv = gan_value(D_latent.forward(z, Mode::train), D_latent.forward(code, Mode::train));
    run_phase(opt.disc, negate(adv.adv_d), s, "discriminator");

    const Tensor<T> d_code = D_latent.forward(rows(E.forward(x, Mode::train)), Mode::train);
    const Tensor<T> adv_g = negate(mean(log_clamped(d_code)));
    run_phase(opt.gen, scale(adv_g, s.weight_adv), s, "encoder");
    return finish(static_cast<double>(adv.adv_d.item()), static_cast<double>(adv_g.item()),
                  static_cast<double>(recon.item()), s);
}

template <typename T>
LossReport bigan_step(Network<T>& G, Network<T>& E, Network<T>& D_joint, const Tensor<T>& x, const Tensor<T>& z,
                      const StepSettings& s, Optimizers<T>& opt) {
    Tensor<T> code, x_hat;
    {
        NoGradGuard guard;
        code = rows(E.forward(x, Mode::train));
        x_hat = G.forward(z, Mode::train);
    }
    const Tensor<T> d_enc = D_joint.forward(joint_input(code, x), Mode::train);
    const Tensor<T> d_gen = D_joint.forward(joint_input(z, x_hat), Mode::train);
    const Tensor<T> adv_d = add(mean(log_clamped(d_enc)), mean(log_clamped(subtract_from(1.0, d_gen))));
    run_phase(opt.disc, negate(adv_d), s, "discriminator");

    const Tensor<T> d_enc2 = D_joint.forward(joint_input(rows(E.forward(x, Mode::train)), x), Mode::train);
    const Tensor<T> d_gen2 = D_joint.forward(joint_input(z, G.forward(z, Mode::train)), Mode::train);
    const Tensor<T> adv_g = negate(add(mean(log_clamped(subtract_from(1.0, d_enc2))), mean(log_clamped(d_gen2))));
    run_phase(opt.gen, scale(adv_g, s.weight_adv), s, "generator-encoder");

    double diagnostic = 0.0;
    {
        NoGradGuard guard;
        diagnostic = static_cast<double>(
            reencoding_loss(z, rows(E.forward(G.forward(z, Mode::eval), Mode::eval)), s.norm).item());
    }
    return finish(static_cast<double>(adv_d.item()), static_cast<double>(adv_g.item()), diagnostic, s);
}

std::string metrics_csv_header() { return "step,epoch,adv_d,adv_g,reenc,alpha,lr_g_t,lr_d_t"; }

std::string metrics_csv_row(const StepRecord& r) {
    using text::format_double;
    return std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + format_double(r.report.adv_d) + "," +
           format_double(r.report.adv_g) + "," + format_double(r.report.recon_or_reenc) + "," +
           format_double(r.report.alpha) + "," + format_double(r.lr_g) + "," + format_double(r.lr_d);
}

std::string epochs_csv_header() { return "epoch,alpha,steps,adv_d,adv_g,reenc"; }

std::string epochs_csv_row(const EpochRecord& r) {
    using text::format_double;
    return std::to_string(r.epoch) + "," + format_double(r.alpha) + "," + std::to_string(r.steps) + "," +
           format_double(r.adv_d) + "," + format_double(r.adv_g) + "," + format_double(r.distance);
}

namespace {

ModelSpec checked_spec(const TrainConfig& c, const Dataset& d) {
    c.validate();
    return resolve_model(c, d);
}

Network<float> build_critic(const TrainConfig& c, const ModelSpec& spec, Rng& rng) {
    switch (c.objective) {
        case Objective::aae: return build_latent_discriminator<float>(spec, rng);
        case Objective::bigan: return build_joint_discriminator<float>(spec, rng);
        default: return build_discriminator<float>(spec, rng);
    }
}

}  // namespace

Trainer::Trainer(TrainConfig config)
    : config_(std::move(config)),
      dataset_(build_dataset(config_)),
      spec_(checked_spec(config_, dataset_)),
      rng_(config_.seed),
      G_(build_generator<float>(spec_, rng_)),
      E_(build_encoder<float>(spec_, rng_)),
      D_(build_critic(config_, spec_, rng_)),
      opt_(make_optimizers(config_, G_, E_, D_)) {}

std::size_t Trainer::batches_per_epoch() const {
    return (dataset_.size() + config_.batch_size - 1) / config_.batch_size;
}

LossReport Trainer::step(const Tensor<float>& x, const Tensor<float>& z) {
    StepSettings s;
    s.alpha = config_.alpha_at(epoch_);
    s.weight_adv = config_.weight_adv;
    s.norm = config_.loss_norm;
    s.step = step_;
    switch (config_.objective) {
        case Objective::faae: return faae_step(G_, E_, D_, x, z, s, opt_);
        case Objective::gan: return gan_step(G_, D_, x, z, s, opt_);
        case Objective::aae: return aae_step(G_, E_, D_, x, z, s, opt_);
        case Objective::bigan: return bigan_step(G_, E_, D_, x, z, s, opt_);
    }
    throw ContractError("unknown objective");
}

void Trainer::run_epoch() {
    for (Adam<float>* opt : {&opt_.distance, &opt_.disc, &opt_.gen}) opt->set_epoch(epoch_);
    EpochRecord rec;
    rec.epoch = epoch_;
    rec.alpha = config_.alpha_at(epoch_);
    for (const auto& indices : epoch_batches(dataset_.size(), config_.batch_size, rng_)) {
        const Tensor<float> x = dataset_.batch<float>(indices);
        const Tensor<float> z = sample_unit_sphere_batch<float>(indices.size(), spec_.latent_dim, rng_);
        StepRecord r;
        r.step = step_;
        r.epoch = epoch_;
        r.lr_g = config_.objective == Objective::aae ? opt_.distance.current_lr(0) : opt_.gen.current_lr(0);
        r.lr_d = opt_.disc.current_lr(0);
        r.report = step(x, z);
        ++step_;
        rec.steps += 1;
        rec.adv_d += r.report.adv_d;
        rec.adv_g += r.report.adv_g;
        rec.distance += r.report.recon_or_reenc;
        trace_.push_back(r);
        if (on_step) on_step(r);
    }
    if (rec.steps) {
        const double n = static_cast<double>(rec.steps);
        rec.adv_d /= n;
        rec.adv_g /= n;
        rec.distance /= n;
    }
    epoch_records_.push_back(rec);
    ++epoch_;
}

void Trainer::train(std::optional<std::uint64_t> max_steps) {
    while (epoch_ < config_.epochs) {
        if (max_steps && step_ >= *max_steps) break;
        run_epoch();
    }
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint c;
    c.config_text = to_text(config_);
    c.networks.push_back(G_.clone());
    c.networks.push_back(E_.clone());
    c.networks.push_back(D_.clone());
    for (const Adam<float>* opt : {&opt_.distance, &opt_.disc, &opt_.gen}) c.optimizers.push_back({opt->name(), opt->state()});
    c.rng = rng_.state();
    return c;
}

void Trainer::write_outputs(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    save_checkpoint(dir / "checkpoint.faae", checkpoint());
    auto write_lines = [](const std::filesystem::path& path, const std::string& header, const auto& records,
                          auto row) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << header << '\n';
        for (const auto& r : records) out << row(r) << '\n';
        if (!out) throw IoError("write failed for " + path.string());
    };
    write_lines(dir / "metrics.csv", metrics_csv_header(), trace_, metrics_csv_row);
    write_lines(dir / "epochs.csv", epochs_csv_header(), epoch_records_, epochs_csv_row);
}

#define FAAE_INSTANTIATE_TRAINER(T)                                                                              \
    template Optimizers<T> make_optimizers(const TrainConfig&, Network<T>&, Network<T>&, Network<T>&);          \
    template LossReport faae_step(Network<T>&, Network<T>&, Network<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                  const StepSettings&, Optimizers<T>&);                                         \
    template LossReport gan_step(Network<T>&, Network<T>&, const Tensor<T>&, const Tensor<T>&,                  \
                                 const StepSettings&, Optimizers<T>&);                                          \
    template LossReport aae_step(Network<T>&, Network<T>&, Network<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                 const StepSettings&, Optimizers<T>&);                                          \
    template LossReport bigan_step(Network<T>&, Network<T>&, Network<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                   const StepSettings&, Optimizers<T>&);

FAAE_INSTANTIATE_TRAINER(float)
FAAE_INSTANTIATE_TRAINER(double)

#undef FAAE_INSTANTIATE_TRAINER

}  // namespace faae
