#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "faae/config.hpp"
#include "faae/error.hpp"

using namespace faae;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "run.cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, Defaults) {
    const TrainConfig c = parse_config("");
    EXPECT_EQ(c.objective, Objective::faae);
    EXPECT_EQ(c.batch_size, 64u);
    EXPECT_EQ(c.lr_g, 3e-4);
    EXPECT_EQ(c.lr_d, 1e-3);
    EXPECT_EQ(c.encoder_lr(), 3e-4);
    EXPECT_EQ(c.decay, 1e-4);
    EXPECT_EQ(c.weight_adv, 0.1);
    EXPECT_EQ(c.alpha_at(0), 100.0);
    EXPECT_EQ(c.loss_norm, LossNorm::l2sq);
    EXPECT_TRUE(c.encoder_normalize);
    EXPECT_EQ(c.dataset_seed(), 1u);
}

TEST(Config, ParsesKeysCommentsAndWhitespace) {
    const TrainConfig c = parse_config(
        "# toy run\n"
        "objective = aae\n"
        "  batch_size=32   # trailing\n"
        "\n"
        "alpha_schedule = 0:30,200:100\n"
        "lr_e = 5e-4\n"
        "dataset.kind = sprites\n"
        "dataset.size = 8\n"
        "model.widths = 8,16\n"
        "seed = 18446744073709551615\n");
    EXPECT_EQ(c.objective, Objective::aae);
    EXPECT_EQ(c.batch_size, 32u);
    EXPECT_EQ(c.alpha_schedule, (std::vector<AlphaPhase>{{0, 30.0}, {200, 100.0}}));
    EXPECT_EQ(c.encoder_lr(), 5e-4);
    EXPECT_EQ(c.dataset.kind, DatasetKind::sprites);
    EXPECT_EQ(c.model.widths, (std::vector<std::size_t>{8, 16}));
    EXPECT_EQ(c.seed, 18446744073709551615ull);
}

TEST(Config, ErrorsNameLineAndKey) {
    EXPECT_EQ(error_of("epochs = 3\nbogus = 1\n"), "run.cfg:2: bogus: unknown key");
    EXPECT_EQ(error_of("epochs = 3\nepochs = 4\n"), "run.cfg:2: epochs: duplicate key");
    EXPECT_NE(error_of("\n\nbatch_size = many\n").find("run.cfg:3: batch_size:"), std::string::npos);
    EXPECT_NE(error_of("objective = vae\n").find("run.cfg:1: objective:"), std::string::npos);
    EXPECT_NE(error_of("just text\n").find("run.cfg:1:"), std::string::npos);
    EXPECT_NE(error_of("lr_g = 0\n").find("lr_g"), std::string::npos);
}

TEST(Config, AlphaScheduleChecks) {
    EXPECT_NE(error_of("alpha_schedule = 5:30\n").find("epoch 0"), std::string::npos);
    EXPECT_NE(error_of("alpha_schedule = 0:30,10:1,10:2\n").find("increasing"), std::string::npos);
    EXPECT_NE(error_of("alpha_schedule = 0-30\n").find("alpha_schedule"), std::string::npos);
    TrainConfig c;
    c.alpha_schedule = {{0, 30.0}, {200, 100.0}};
    EXPECT_EQ(c.alpha_at(0), 30.0);
    EXPECT_EQ(c.alpha_at(199), 30.0);
    EXPECT_EQ(c.alpha_at(200), 100.0);
    EXPECT_EQ(c.alpha_at(5000), 100.0);
    EXPECT_EQ(format_alpha_schedule(c.alpha_schedule), "0:30,200:100");
    EXPECT_EQ(parse_alpha_schedule("0:30,200:100"), c.alpha_schedule);
}

TEST(Config, CanonicalTextRoundTrip) {
    TrainConfig c;
    c.objective = Objective::bigan;
    c.latent_dim = 7;
    c.seed = 42;
    c.alpha_schedule = {{0, 0.5}, {3, 1e-3}};
    c.lr_e = 1.25e-4;
    c.decay_mode = DecayMode::epoch;
    c.encoder_normalize = false;
    c.loss_norm = LossNorm::l2;
    c.dataset.kind = DatasetKind::rings2d;
    c.dataset.seed = 9;
    c.dataset.sigma = 0.1;
    c.model.arch = Arch::mlp;
    c.model.widths = {3, 5};
    c.model.critic_hidden = {4};
    const std::string text = to_text(c);
    EXPECT_EQ(parse_config(text), c);
    EXPECT_EQ(to_text(parse_config(text)), text);
    EXPECT_EQ(parse_config(to_text(TrainConfig{})), TrainConfig{});
    EXPECT_NE(text.find("lr_e = 0.000125\n"), std::string::npos);
}

TEST(Config, EveryKeyListed) {
    const std::string text = to_text(TrainConfig{});
    for (const char* key : {"objective", "latent_dim", "batch_size", "epochs", "seed", "alpha_schedule", "weight_adv",
                            "lr_g", "lr_d", "lr_e", "decay", "decay_mode", "encoder_normalize", "loss_norm",
                            "dataset.kind", "dataset.count", "dataset.radius", "dataset.sigma", "dataset.size",
                            "dataset.path", "dataset.seed", "model.arch", "model.widths", "model.critic_hidden"}) {
        EXPECT_NE(text.find(std::string(key) + " = "), std::string::npos) << key;
    }
}

TEST(Config, LoadFile) {
    const auto path = std::filesystem::temp_directory_path() / "faae_test_config.cfg";
    std::ofstream(path) << "epochs = 2\nfoo = 1\n";
    try {
        load_config(path);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()), path.string() + ":2: foo: unknown key");
    }
    EXPECT_THROW(load_config("/nonexistent/faae.cfg"), IoError);
}

TEST(Config, ResolveModelAutoValues) {
    TrainConfig c;
    c.dataset.count = 64;
    const Dataset toy = build_dataset(c);
    const ModelSpec m = resolve_model(c, toy);
    EXPECT_EQ(m.latent_dim, 2u);
    EXPECT_EQ(m.arch, Arch::mlp);
    EXPECT_EQ(m.widths, (std::vector<std::size_t>{128, 128}));

    c.dataset.kind = DatasetKind::sprites;
    c.dataset.count = 10;
    c.batch_size = 4;
    const Dataset sprites = build_dataset(c);
    const ModelSpec s = resolve_model(c, sprites);
    EXPECT_EQ(s.latent_dim, 32u);
    EXPECT_EQ(s.arch, Arch::conv);
    EXPECT_EQ(s.widths, (std::vector<std::size_t>{32, 64}));
    EXPECT_EQ(s.data_shape, (Shape{3, 16, 16}));
}

TEST(Config, ResolveModelRejectsBadCombinations) {
    TrainConfig c;
    c.dataset.kind = DatasetKind::sprites;
    c.dataset.count = 9;
    c.batch_size = 4;
    const Dataset sprites = build_dataset(c);
    EXPECT_THROW(resolve_model(c, sprites), ConfigError);

    TrainConfig d;
    d.model.arch = Arch::conv;
    d.dataset.count = 64;
    EXPECT_THROW(resolve_model(d, build_dataset(d)), ConfigError);
}

TEST(Config, DatasetSeedAndDeterminism) {
    TrainConfig c;
    c.dataset.count = 32;
    c.seed = 5;
    EXPECT_EQ(c.dataset_seed(), 6u);
    EXPECT_EQ(build_dataset(c).values, build_dataset(c).values);
    TrainConfig other = c;
    other.dataset.seed = 6;
    EXPECT_EQ(build_dataset(other).values, build_dataset(c).values);
    other.dataset.seed = 7;
    EXPECT_NE(build_dataset(other).values, build_dataset(c).values);
}
