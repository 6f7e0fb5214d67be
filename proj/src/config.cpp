#include "faae/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "faae/error.hpp"
#include "text.hpp"

namespace faae {

std::string_view objective_name(Objective o) {
    switch (o) {
        case Objective::faae: return "faae";
        case Objective::aae: return "aae";
        case Objective::gan: return "gan";
        case Objective::bigan: return "bigan";
    }
    return "?";
}

double TrainConfig::alpha_at(std::size_t epoch) const {
    double alpha = alpha_schedule.empty() ? 0.0 : alpha_schedule.front().alpha;
    for (const auto& phase : alpha_schedule) {
        if (phase.start_epoch > epoch) break;
        alpha = phase.alpha;
    }
    return alpha;
}

std::vector<AlphaPhase> parse_alpha_schedule(std::string_view text) {
    std::vector<AlphaPhase> out;
    for (auto item : text::split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw ConfigError("expected start_epoch:alpha, got '" + std::string(item) + "'");
        }
        out.push_back({text::parse_size(item.substr(0, colon)), text::parse_double(item.substr(colon + 1))});
    }
    return out;
}

std::string format_alpha_schedule(const std::vector<AlphaPhase>& schedule) {
    std::string out;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(schedule[i].start_epoch) + ":" + text::format_double(schedule[i].alpha);
    }
    return out;
}

void TrainConfig::validate() const {
    if (latent_dim && *latent_dim == 0) throw ConfigError("latent_dim: must be positive");
    if (batch_size == 0) throw ConfigError("batch_size: must be positive");
    if (alpha_schedule.empty()) throw ConfigError("alpha_schedule: needs at least one entry");
    if (alpha_schedule.front().start_epoch != 0) throw ConfigError("alpha_schedule: must start at epoch 0");
    for (std::size_t i = 0; i < alpha_schedule.size(); ++i) {
        if (!std::isfinite(alpha_schedule[i].alpha) || alpha_schedule[i].alpha < 0.0) {
            throw ConfigError("alpha_schedule: alpha must be finite and non-negative");
        }
        if (i && alpha_schedule[i].start_epoch <= alpha_schedule[i - 1].start_epoch) {
            throw ConfigError("alpha_schedule: start epochs must be strictly increasing");
        }
    }
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + ": must be positive");
    };
    positive(lr_g, "lr_g");
    positive(lr_d, "lr_d");
    if (lr_e) positive(*lr_e, "lr_e");
    if (!(decay >= 0.0) || !std::isfinite(decay)) throw ConfigError("decay: must be non-negative");
    if (!(weight_adv >= 0.0) || !std::isfinite(weight_adv)) throw ConfigError("weight_adv: must be non-negative");
    if (dataset.count == 0) throw ConfigError("dataset.count: must be positive");
    switch (dataset.kind) {
        case DatasetKind::gauss8:
        case DatasetKind::rings2d:
            if (dataset.kind == DatasetKind::gauss8 && dataset.count < 8) {
                throw ConfigError("dataset.count: gauss8 needs at least 8 samples");
            }
            if (!(dataset.sigma > 0.0)) throw ConfigError("dataset.sigma: must be positive");
            if (!(dataset.radius > 0.0)) throw ConfigError("dataset.radius: must be positive");
            break;
        case DatasetKind::sprites:
            if (dataset.size != 8 && dataset.size != 16 && dataset.size != 32) {
                throw ConfigError("dataset.size: sprites come in 8, 16 or 32 pixels");
            }
            break;
        case DatasetKind::image_dir:
            if (dataset.path.empty()) throw ConfigError("dataset.path: required for image_dir");
            break;
    }
    for (std::size_t w : model.widths)
        if (w == 0) throw ConfigError("model.widths: must be positive");
    for (std::size_t w : model.critic_hidden)
        if (w == 0) throw ConfigError("model.critic_hidden: must be positive");
}

namespace {

std::vector<std::size_t> parse_list(std::string_view v) {
    std::vector<std::size_t> out;
    for (auto part : text::split(v, ',')) out.push_back(text::parse_size(part));
    return out;
}

std::string format_list(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

bool parse_bool(std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

[[noreturn]] void bad_choice(std::string_view v, std::string_view choices) {
    throw ConfigError("expected one of " + std::string(choices) + ", got '" + std::string(v) + "'");
}

struct Key {
    std::string_view name;
    std::function<void(TrainConfig&, std::string_view)> set;
    std::function<std::string(const TrainConfig&)> get;
};

template <typename V>
std::string auto_or(const std::optional<V>& v, std::function<std::string(const V&)> f) {
    return v ? f(*v) : std::string("auto");
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"objective",
         [](TrainConfig& c, std::string_view v) {
             if (v == "faae") c.objective = Objective::faae;
             else if (v == "aae") c.objective = Objective::aae;
             else if (v == "gan") c.objective = Objective::gan;
             else if (v == "bigan") c.objective = Objective::bigan;
             else bad_choice(v, "faae, aae, gan, bigan");
         },
         [](const TrainConfig& c) { return std::string(objective_name(c.objective)); }},
        {"latent_dim",
         [](TrainConfig& c, std::string_view v) {
             c.latent_dim = v == "auto" ? std::nullopt : std::optional<std::size_t>(text::parse_size(v));
         },
         [](const TrainConfig& c) {
             return auto_or<std::size_t>(c.latent_dim, [](const std::size_t& n) { return std::to_string(n); });
         }},
        {"batch_size", [](TrainConfig& c, std::string_view v) { c.batch_size = text::parse_size(v); },
         [](const TrainConfig& c) { return std::to_string(c.batch_size); }},
        {"epochs", [](TrainConfig& c, std::string_view v) { c.epochs = text::parse_size(v); },
         [](const TrainConfig& c) { return std::to_string(c.epochs); }},
        {"seed", [](TrainConfig& c, std::string_view v) { c.seed = text::parse_unsigned(v); },
         [](const TrainConfig& c) { return std::to_string(c.seed); }},
        {"alpha_schedule", [](TrainConfig& c, std::string_view v) { c.alpha_schedule = parse_alpha_schedule(v); },
         [](const TrainConfig& c) { return format_alpha_schedule(c.alpha_schedule); }},
        {"weight_adv", [](TrainConfig& c, std::string_view v) { c.weight_adv = text::parse_double(v); },
         [](const TrainConfig& c) { return text::format_double(c.weight_adv); }},
        {"lr_g", [](TrainConfig& c, std::string_view v) { c.lr_g = text::parse_double(v); },
         [](const TrainConfig& c) { return text::format_double(c.lr_g); }},
        {"lr_d", [](TrainConfig& c, std::string_view v) { c.lr_d = text::parse_double(v); },
         [](const TrainConfig& c) { return text::format_double(c.lr_d); }},
        {"lr_e",
         [](TrainConfig& c, std::string_view v) {
             c.lr_e = v == "auto" ? std::nullopt : std::optional<double>(text::parse_double(v));
         },
         [](const TrainConfig& c) {
             return auto_or<double>(c.lr_e, [](const double& x) { return text::format_double(x); });
         }},
        {"decay", [](TrainConfig& c, std::string_view v) { c.decay = text::parse_double(v); },
         [](const TrainConfig& c) { return text::format_double(c.decay); }},
        {"decay_mode",
         [](TrainConfig& c, std::string_view v) {
             if (v == "step") c.decay_mode = DecayMode::step;
             else if (v == "epoch") c.decay_mode = DecayMode::epoch;
             else bad_choice(v, "step, epoch");
         },
         [](const TrainConfig& c) { return std::string(c.decay_mode == DecayMode::step ? "step" : "epoch"); }},
        {"encoder_normalize", [](TrainConfig& c, std::string_view v) { c.encoder_normalize = parse_bool(v); },
         [](const TrainConfig& c) { return std::string(c.encoder_normalize ? "true" : "false"); }},
        {"loss_norm",
         [](TrainConfig& c, std::string_view v) {
             if (v == "l2sq") c.loss_norm = LossNorm::l2sq;
             else if (v == "l2") c.loss_norm = LossNorm::l2;
             else bad_choice(v, "l2sq, l2");
         },
         [](const TrainConfig& c) { return std::string(c.loss_norm == LossNorm::l2sq ? "l2sq" : "l2"); }},
        {"dataset.kind",
         [](TrainConfig& c, std::string_view v) {
             if (v == "gauss8") c.dataset.kind = DatasetKind::gauss8;
             else if (v == "rings2d") c.dataset.kind = DatasetKind::rings2d;
             else if (v == "sprites") c.dataset.kind = DatasetKind::sprites;
             else if (v == "image_dir") c.dataset.kind = DatasetKind::image_dir;
             else bad_choice(v, "gauss8, rings2d, sprites, image_dir");
         },
         [](const TrainConfig& c) { return std::string(dataset_kind_name(c.dataset.kind)); }},
        {"dataset.count", [](TrainConfig& c, std::string_view v) { c.dataset.count = text::parse_size(v); },
         [](const TrainConfig& c) { return std::to_string(c.dataset.count); }},
        {"dataset.radius", [](TrainConfig& c, std::string_view v) { c.dataset.radius = text::parse_double(v); },
         [](const TrainConfig& c) { return text::format_double(c.dataset.radius); }},
        {"dataset.sigma", [](TrainConfig& c, std::string_view v) { c.dataset.sigma = text::parse_double(v); },
         [](const TrainConfig& c) { return text::format_double(c.dataset.sigma); }},
        {"dataset.size", [](TrainConfig& c, std::string_view v) { c.dataset.size = text::parse_size(v); },
         [](const TrainConfig& c) { return std::to_string(c.dataset.size); }},
        {"dataset.path", [](TrainConfig& c, std::string_view v) { c.dataset.path = std::string(v); },
         [](const TrainConfig& c) { return c.dataset.path; }},
        {"dataset.seed",
         [](TrainConfig& c, std::string_view v) {
             c.dataset.seed = v == "auto" ? std::nullopt : std::optional<std::uint64_t>(text::parse_unsigned(v));
         },
         [](const TrainConfig& c) {
             return auto_or<std::uint64_t>(c.dataset.seed, [](const std::uint64_t& s) { return std::to_string(s); });
         }},
        {"model.arch",
         [](TrainConfig& c, std::string_view v) {
             if (v == "auto") c.model.arch.reset();
             else if (v == "conv") c.model.arch = Arch::conv;
             else if (v == "mlp") c.model.arch = Arch::mlp;
             else bad_choice(v, "conv, mlp, auto");
         },
         [](const TrainConfig& c) {
             return auto_or<Arch>(c.model.arch, [](const Arch& a) { return std::string(a == Arch::conv ? "conv" : "mlp"); });
         }},
        {"model.widths",
         [](TrainConfig& c, std::string_view v) {
             c.model.widths = v == "auto" ? std::vector<std::size_t>{} : parse_list(v);
         },
         [](const TrainConfig& c) { return c.model.widths.empty() ? std::string("auto") : format_list(c.model.widths); }},
        {"model.critic_hidden",
         [](TrainConfig& c, std::string_view v) { c.model.critic_hidden = parse_list(v); },
         [](const TrainConfig& c) { return format_list(c.model.critic_hidden); }},
    };
    return table;
}

}  // namespace

TrainConfig parse_config(std::string_view text, const std::string& source) {
    TrainConfig config;
    std::set<std::string_view> seen;
    std::size_t line_no = 0;
    for (auto raw : text::split(text, '\n')) {
        ++line_no;
        const auto hash = raw.find('#');
        const auto line = text::trim(raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
        }
        const auto key = text::trim(line.substr(0, eq));
        const auto value = text::trim(line.substr(eq + 1));
        const Key* entry = nullptr;
        for (const auto& k : keys())
            if (k.name == key) entry = &k;
        if (!entry) throw ConfigError(where + std::string(key) + ": unknown key");
        if (!seen.insert(entry->name).second) throw ConfigError(where + std::string(key) + ": duplicate key");
        try {
            entry->set(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + std::string(key) + ": " + e.what());
        }
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

std::string to_text(const TrainConfig& config) {
    std::string out;
    for (const auto& k : keys()) {
        out += k.name;
        out += " = ";
        out += k.get(config);
        out += '\n';
    }
    return out;
}

Dataset build_dataset(const TrainConfig& config) {
    config.validate();
    const auto& d = config.dataset;
    Rng rng(config.dataset_seed());
    switch (d.kind) {
        case DatasetKind::gauss8: return make_gauss8(d.count, d.radius, d.sigma, rng);
        case DatasetKind::rings2d: return make_rings2d(d.count, d.radius, d.sigma, rng);
        case DatasetKind::sprites: return make_sprites(d.count, d.size, rng);
        case DatasetKind::image_dir: return load_image_dir(d.path);
    }
    throw ConfigError("dataset.kind: unsupported");
}

ModelSpec resolve_model(const TrainConfig& config, const Dataset& dataset) {
    ModelSpec spec;
    spec.data_shape = dataset.sample_shape;
    const bool image = dataset.is_image();
    spec.latent_dim = config.latent_dim.value_or(image ? 32 : 2);
    spec.arch = config.model.arch.value_or(image ? Arch::conv : Arch::mlp);
    spec.widths = config.model.widths;
    if (spec.widths.empty()) {
        spec.widths = spec.arch == Arch::mlp ? std::vector<std::size_t>{128, 128} : std::vector<std::size_t>{32, 64};
    }
    spec.encoder_normalize = config.encoder_normalize;
    spec.critic_hidden = config.model.critic_hidden;
    spec.validate();
    if (spec.arch == Arch::conv) {
        if (config.batch_size < 2) throw ConfigError("batch_size: batchnorm layers need batches of at least 2");
        if (dataset.size() % config.batch_size == 1) {
            throw ConfigError("batch_size: " + std::to_string(dataset.size()) + " samples leave a final batch of 1, which batchnorm cannot normalise");
        }
    }
    if (dataset.size() == 0) throw ConfigError("dataset: no samples");
    return spec;
}

}  // namespace faae
