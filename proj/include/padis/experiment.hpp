#pragma once

#include <memory>
#include <string>

#include "padis/config.hpp"
#include "padis/operators.hpp"
#include "padis/phantoms.hpp"

namespace padis {

// Forward operator + measurement synthesis for one problem binding.
struct Problem {
    std::unique_ptr<LinearOperator> op;
    double meas_noise = 0.0;
    std::string name;
};

Problem make_problem(const ExperimentConfig& cfg);

// Per-pixel Gaussian prior estimated from a dataset of padded canvases
// (mean/variance across images, variance floored); the analytic stand-in used
// by --oracle runs.
GaussianPrior estimate_canvas_prior(const std::vector<Image>& canvases, double var_floor = 1e-4);

std::vector<Image> pad_dataset(const std::vector<Image>& images, int margin);

// Reconstruction experiment: per-image measurement synthesis, sampler run,
// optional baselines, metrics CSV (image_id, method, psnr, ssim) with a mean
// row per method, per-run trace CSVs, reconstructed images. Returns the mean
// PSNR of the diffusion method.
struct ExperimentResult {
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::string metrics_csv;
};

ExperimentResult run_reconstruct(const ExperimentConfig& cfg);

// ct_phantom/texture synthesis into out dir
void run_synth(const std::string& kind, int count, int n, uint64_t seed, const std::string& out_dir);

// trains a checkpoint on cfg.train_dataset and writes it to `path`
void run_train(const ExperimentConfig& cfg, const std::string& path);

// unconditional generation; oracle mode also writes a moment report
void run_generate(const ExperimentConfig& cfg);

// one comparison CSV row per grid setting
void run_ablate(const ExperimentConfig& cfg, const std::string& axis);

}  // namespace padis
