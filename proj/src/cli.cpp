#include "faae/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "faae/checkpoint.hpp"
#include "faae/config.hpp"
#include "faae/error.hpp"
#include "faae/evaluation.hpp"
#include "faae/gradcheck_suite.hpp"
#include "faae/ppm.hpp"
#include "faae/trainer.hpp"
#include "text.hpp"

namespace faae {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
public:
    using Error::Error;
};

struct Loaded {
    TrainConfig config;
    Checkpoint checkpoint;
};

Loaded load_run(const fs::path& path) {
    Loaded run;
    run.checkpoint = load_checkpoint(path);
    run.config = parse_config(run.checkpoint.config_text, path.string() + " (config)");
    return run;
}

CriticSpace critic_space(Objective o) {
    switch (o) {
        case Objective::aae: return CriticSpace::latent;
        case Objective::bigan: return CriticSpace::joint;
        default: return CriticSpace::data;
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string numbered(std::size_t i) {
    std::ostringstream s;
    s << "sample_" << std::setw(5) << std::setfill('0') << i << ".ppm";
    return s.str();
}

std::size_t panel_cols(std::size_t count) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count)))));
}

void write_points_csv(const fs::path& path, const Tensor<float>& points) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const std::size_t d = points.dim(0) ? points.numel() / points.dim(0) : 0;
    for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << "x" << j;
    out << '\n';
    for (std::size_t i = 0; i < points.dim(0); ++i) {
        for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << text::format_double(points.at(i * d + j));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

int cmd_train(const fs::path& config_path, const fs::path& out_dir, std::ostream& out) {
    Trainer trainer(load_config(config_path));
    trainer.train();
    trainer.write_outputs(out_dir);
    out << "trained " << objective_name(trainer.config().objective) << " for " << trainer.steps_done()
        << " steps; outputs in " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_reconstruct(const fs::path& ckpt, const fs::path& in_dir, const fs::path& out_dir, std::ostream& out) {
    Loaded run = load_run(ckpt);
    Network<float>& E = run.checkpoint.network("E");
    Network<float>& G = run.checkpoint.network("G");
    if (E.input_shape().size() != 3) throw IoError("reconstruct: the checkpoint does not model images");
    const Dataset data = load_image_dir(in_dir, E.input_shape());
    const Tensor<float> x = data.range<float>(0, data.size());
    const auto images = images_from_batch(reconstruct(E, G, x));
    ensure_dir(out_dir);
    for (std::size_t i = 0; i < images.size(); ++i) write_ppm(out_dir / fs::path(data.names[i]).filename(), images[i]);
    write_panel(out_dir / "panel.ppm", images, (images.size() + panel_cols(images.size()) - 1) / panel_cols(images.size()),
                panel_cols(images.size()), 2);
    out << "reconstructed " << images.size() << " images into " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_generate(const fs::path& ckpt, std::size_t count, const fs::path& out_dir, std::uint64_t seed,
                 std::ostream& out) {
    Loaded run = load_run(ckpt);
    Network<float>& G = run.checkpoint.network("G");
    Rng rng(seed);
    const Tensor<float> samples = generate(G, count, rng);
    ensure_dir(out_dir);
    if (G.output_shape().size() == 3) {
        const auto images = images_from_batch(samples);
        for (std::size_t i = 0; i < images.size(); ++i) write_ppm(out_dir / numbered(i), images[i]);
        if (!images.empty()) {
            const std::size_t cols = panel_cols(images.size());
            write_panel(out_dir / "panel.ppm", images, (images.size() + cols - 1) / cols, cols, 2);
        }
    } else {
        write_points_csv(out_dir / "samples.csv", samples);
    }
    out << "generated " << count << " samples into " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_morph(const fs::path& ckpt, const std::vector<std::string>& corners, std::size_t grid, const fs::path& out_path,
              std::ostream& out) {
    if (grid < 2) throw UsageError("morph: --grid must be at least 2");
    if (corners.size() != 4) throw UsageError("morph: --corners takes exactly four images");
    Loaded run = load_run(ckpt);
    Network<float>& E = run.checkpoint.network("E");
    Network<float>& G = run.checkpoint.network("G");
    if (E.input_shape().size() != 3) throw IoError("morph: the checkpoint does not model images");
    std::vector<float> values;
    for (const auto& c : corners) {
        const Image img = read_ppm(c);
        if (img.height != E.input_shape()[1] || img.width != E.input_shape()[2]) {
            throw IoError(c + ": image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                          ", the model expects " + std::to_string(E.input_shape()[2]) + "x" +
                          std::to_string(E.input_shape()[1]));
        }
        const auto chw = image_to_chw(img);
        values.insert(values.end(), chw.begin(), chw.end());
    }
    Shape shape = E.input_shape();
    shape.insert(shape.begin(), 4);
    const Tensor<float> cells = morph_grid(E, G, Tensor<float>(shape, std::move(values)), grid);
    write_panel(out_path, images_from_batch(cells), grid, grid, 2);
    out << "wrote " << grid << "x" << grid << " morph panel to " << out_path.string() << "\n";
    return kExitOk;
}

int cmd_eval(const fs::path& ckpt, const std::string& dataset_dir, std::size_t count, std::uint64_t seed,
             const fs::path& out_path, std::ostream& out) {
    Loaded run = load_run(ckpt);
    Network<float>& E = run.checkpoint.network("E");
    Network<float>& G = run.checkpoint.network("G");
    Network<float>& D = run.checkpoint.network("D");
    const Dataset data = dataset_dir.empty() ? build_dataset(run.config) : load_image_dir(dataset_dir, E.input_shape());
    Rng rng(seed);
    const MetricReport report = evaluate(E, G, D, critic_space(run.config.objective), data, count, rng);
    std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write " + out_path.string());
    file << metric_csv_header() << '\n' << metric_csv_row(report) << '\n';
    if (!file) throw IoError("write failed for " + out_path.string());
    out << metric_csv_header() << '\n' << metric_csv_row(report) << '\n';
    return kExitOk;
}

int cmd_gradcheck(const std::string& ops_list, std::size_t instances, std::uint64_t seed, std::ostream& out) {
    std::vector<std::string> ops;
    if (ops_list.empty()) {
        ops = gradcheck_ops();
    } else {
        for (auto op : text::split(ops_list, ',')) {
            const auto& known = gradcheck_ops();
            if (std::find(known.begin(), known.end(), op) == known.end()) {
                throw UsageError("gradcheck: unknown op '" + std::string(op) + "'");
            }
            ops.emplace_back(op);
        }
    }
    bool ok = true;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const OpCheck r = check_op(ops[i], instances, seed + i);
        const bool pass = r.max_error < 1e-4;
        ok = ok && pass;
        out << std::left << std::setw(20) << r.op << " max_rel_error=" << std::scientific << std::setprecision(3)
            << r.max_error << std::defaultfloat << " instances=" << r.instances << " rejected=" << r.rejected
            << (pass ? " ok" : " FAIL") << "\n";
    }
    return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"f-AAE: flipped adversarial autoencoders and baselines"};
    app.require_subcommand(1);

    fs::path config_path, out_dir = "run";
    auto* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "config file")->required();
    train->add_option("--out", out_dir, "output directory")->capture_default_str();

    fs::path ckpt, in_dir, rec_out;
    auto* rec = app.add_subcommand("reconstruct", "reconstruct every image in a directory");
    rec->add_option("--ckpt", ckpt, "checkpoint")->required();
    rec->add_option("--in", in_dir, "directory of .ppm images")->required();
    rec->add_option("--out", rec_out, "output directory")->required();

    std::size_t count = 64;
    std::uint64_t seed = 0;
    fs::path gen_out;
    auto* gen = app.add_subcommand("generate", "sample from the generator");
    gen->add_option("--ckpt", ckpt, "checkpoint")->required();
    gen->add_option("--count", count, "number of samples")->required();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", seed, "prior seed")->capture_default_str();

    std::vector<std::string> corners;
    std::size_t grid = 0;
    fs::path morph_out;
    auto* morph_cmd = app.add_subcommand("morph", "latent interpolation panel between four images");
    morph_cmd->add_option("--ckpt", ckpt, "checkpoint")->required();
    morph_cmd->add_option("--corners", corners, "four .ppm images")->required()->expected(4);
    morph_cmd->add_option("--grid", grid, "cells per side (>= 2)")->required();
    morph_cmd->add_option("--out", morph_out, "output panel .ppm")->required();

    std::string dataset_dir;
    std::size_t eval_count = 1000;
    fs::path eval_out;
    auto* eval = app.add_subcommand("eval", "compute metrics for a checkpoint");
    eval->add_option("--ckpt", ckpt, "checkpoint")->required();
    eval->add_option("--dataset", dataset_dir, "directory of .ppm images (default: the training dataset)");
    eval->add_option("--count", eval_count, "samples per metric")->capture_default_str();
    eval->add_option("--seed", seed, "evaluation seed")->capture_default_str();
    eval->add_option("--out", eval_out, "metrics CSV")->required();

    std::string ops;
    std::size_t instances = 100;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every op");
    gc->add_option("--ops", ops, "comma-separated op names (default: all)");
    gc->add_option("--instances", instances, "random instances per op")->capture_default_str();
    gc->add_option("--seed", seed, "seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*train) return cmd_train(config_path, out_dir, out);
        if (*rec) return cmd_reconstruct(ckpt, in_dir, rec_out, out);
        if (*gen) return cmd_generate(ckpt, count, gen_out, seed, out);
        if (*morph_cmd) return cmd_morph(ckpt, corners, grid, morph_out, out);
        if (*eval) return cmd_eval(ckpt, dataset_dir, eval_count, seed, eval_out, out);
        if (*gc) return cmd_gradcheck(ops, instances, seed, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DegeneracyError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace faae
