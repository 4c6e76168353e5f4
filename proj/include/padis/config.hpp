#pragma once

#include <map>
#include <string>
#include <vector>

#include "padis/assemble.hpp"
#include "padis/denoiser.hpp"

namespace padis {

// Flat UTF-8 key=value files; '#' starts a comment, `include <path>` pulls in
// another file (relative to the including file), later keys win.
std::map<std::string, std::string> parse_config_file(const std::string& path);

enum class ProblemKind { Ct8, Ct20, Ct60, Deblur9, Deblur17, Sr4, Generate };
enum class SamplerKind { Padis, Langevin, Pc, Ddnm };

ProblemKind problem_from_string(const std::string& s);
const char* problem_to_string(ProblemKind p);
SamplerKind sampler_from_string(const std::string& s);
const char* sampler_to_string(SamplerKind s);
AssembleMode assemble_mode_from_string(const std::string& s);

struct ExperimentConfig {
    ProblemKind problem = ProblemKind::Ct20;
    int n = 64;
    int patch = 16;
    double sigma_min = 0.0;  // 0 = per-problem default
    double sigma_max = 0.0;
    int steps = 200;
    SamplerKind sampler = SamplerKind::Padis;
    AssembleMode assembler = AssembleMode::PadisStochastic;
    int overlap = 8;
    uint64_t seed = 0;
    double zeta = -1.0;  // <0 = per-problem default
    double epsilon = 1.0;
    double corrector_r = 0.16;
    bool clamp_border = false;
    std::string checkpoint;
    bool oracle = false;
    std::string dataset;        // test images
    std::string train_dataset;  // training images
    int count = 4;              // test images / generated samples
    std::string out = "out";
    int threads = 1;
    bool baselines = true;
    double admm_lambda = 0.0;  // 0 = per-problem default
    double admm_rho = 1.0;
    int admm_iters = 100;
    int ct_detectors = 0;  // 0 = default 3n/2

    // training
    int train_iters = 5000;
    int train_batch = 16;
    double lr = 2e-4;
    double ema_halflife = 50000.0;
    std::string patch_sizes = "16:0.7,12:0.3";
    int net_hidden = 32;
    int net_layers = 4;
    std::string net_act = "silu";
    bool positional = true;
    double train_sigma_min = 0.002;
    double train_sigma_max = 40.0;

    // ablation grids
    std::string ablate_patch_sizes = "12,16,24,32";
    std::string ablate_dataset_sizes = "25,50,100,200";

    static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);
    static ExperimentConfig from_file(const std::string& path);
    void apply_override(const std::string& key, const std::string& value);

    double effective_sigma_min() const;
    double effective_sigma_max() const;
    double effective_zeta() const;
    double effective_admm_lambda() const;
    double measurement_noise() const;  // per problem

    NetConfig net_config() const;
    TrainConfig train_config() const;
};

std::vector<std::pair<int, double>> parse_patch_sizes(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);

}  // namespace padis
