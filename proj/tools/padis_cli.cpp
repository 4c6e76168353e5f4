#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "padis/config.hpp"
#include "padis/denoiser.hpp"
#include "padis/experiment.hpp"
#include "padis/image_io.hpp"
#include "padis/metrics.hpp"
#include "padis/samplers.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

// shared flags layered on top of the config file; only explicitly-passed
// options override file values
struct CommonArgs {
    std::string config;
    std::string out;
    std::string checkpoint;
    std::string seed;
    std::string threads;
    bool oracle = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "key=value config file");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--checkpoint", args.checkpoint, "denoiser checkpoint path");
    cmd->add_option("--seed", args.seed, "top-level seed");
    cmd->add_option("--threads", args.threads, "worker threads");
    cmd->add_flag("--oracle", args.oracle, "use the analytic dataset prior instead of a checkpoint");
}

padis::ExperimentConfig load_config(const CommonArgs& args) {
    padis::ExperimentConfig cfg;
    if (!args.config.empty()) cfg = padis::ExperimentConfig::from_file(args.config);
    if (const char* root = std::getenv("PADIS_OUT_ROOT"); root && *root)
        cfg.out = (std::filesystem::path(root) / cfg.out).string();
    if (!args.out.empty()) cfg.out = args.out;
    if (!args.checkpoint.empty()) cfg.checkpoint = args.checkpoint;
    if (!args.seed.empty()) cfg.apply_override("seed", args.seed);
    if (!args.threads.empty()) cfg.apply_override("threads", args.threads);
    if (args.oracle) cfg.oracle = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patch diffusion inverse solver"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_kind = "ct_phantom";
    int synth_count = 200, synth_n = 64;
    synth->add_option("--kind", synth_kind, "ct_phantom or texture");
    synth->add_option("--count", synth_count, "number of images");
    synth->add_option("--n", synth_n, "image side");
    add_common(synth, args);

    auto* train_cmd = app.add_subcommand("train", "train the patch denoiser");
    add_common(train_cmd, args);

    auto* recon = app.add_subcommand("reconstruct", "solve an inverse problem on a test set");
    add_common(recon, args);

    auto* gen = app.add_subcommand("generate", "unconditional generation");
    add_common(gen, args);

    auto* abl = app.add_subcommand("ablate", "run a comparison grid");
    std::string axis = "sampler";
    abl->add_option("--axis", axis, "patch_size | positional_encoding | sampler | dataset_size");
    add_common(abl, args);

    auto* met = app.add_subcommand("metrics", "psnr/ssim between two images");
    std::string ref_path, test_path;
    met->add_option("--ref", ref_path, "reference image")->required();
    met->add_option("--test", test_path, "image to score")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            padis::ExperimentConfig cfg = load_config(args);
            padis::run_synth(synth_kind, synth_count, synth_n, cfg.seed,
                             cfg.out.empty() ? "dataset" : cfg.out);
        } else if (train_cmd->parsed()) {
            padis::ExperimentConfig cfg = load_config(args);
            if (cfg.checkpoint.empty()) cfg.checkpoint = "checkpoint.bin";
            padis::run_train(cfg, cfg.checkpoint);
        } else if (recon->parsed()) {
            padis::ExperimentConfig cfg = load_config(args);
            padis::ExperimentResult res = padis::run_reconstruct(cfg);
            std::cout << "mean " << padis::sampler_to_string(cfg.sampler) << " psnr " << res.mean_psnr
                      << " ssim " << res.mean_ssim << "\n";
        } else if (gen->parsed()) {
            padis::ExperimentConfig cfg = load_config(args);
            padis::run_generate(cfg);
        } else if (abl->parsed()) {
            padis::ExperimentConfig cfg = load_config(args);
            padis::run_ablate(cfg, axis);
        } else if (met->parsed()) {
            padis::Image ref = padis::read_pnm(ref_path);
            padis::Image test = padis::read_pnm(test_path);
            std::cout << "psnr " << padis::psnr_csv_cap(padis::psnr(test, ref)) << "\n"
                      << "ssim " << padis::ssim(test, ref) << "\n";
        }
    } catch (const padis::NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const padis::TrainingAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
