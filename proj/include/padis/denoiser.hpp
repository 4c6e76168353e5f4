#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "padis/grid.hpp"
#include "padis/rng.hpp"
#include "padis/scoremodel.hpp"
#include "padis/tensor.hpp"

namespace padis {

enum class Act : uint8_t { ReLU = 0, SiLU = 1 };

// Fully-convolutional stack of 3x3 zero-padded convolutions. Input channels =
// image channels + 2 positional + 1 noise-level map; output = image channels.
// Accepts any spatial size; output spatial shape equals input spatial shape.
struct NetConfig {
    int image_channels = 1;
    int hidden = 32;
    int layers = 4;  // conv count; all but the last are followed by the nonlinearity
    Act act = Act::SiLU;
    bool use_positional = true;

    int in_channels() const { return image_channels + 3; }
    int receptive_field() const { return 2 * layers + 1; }
    void validate() const;
};

struct ConvStack {
    NetConfig cfg;
    std::vector<double> params;

    explicit ConvStack(NetConfig cfg_);

    int layer_in(int l) const { return l == 0 ? cfg.in_channels() : cfg.hidden; }
    int layer_out(int l) const { return l == cfg.layers - 1 ? cfg.image_channels : cfg.hidden; }
    size_t param_count() const;
    void init_params(RandomStream& rng);

    struct Cache {
        std::vector<Image> act_in;  // input of each layer
        std::vector<Image> pre;     // pre-activation of each layer
    };

    Image forward(const Image& input, Cache* cache) const;
    // dL/dinput; accumulates parameter gradients into *grads when non-null
    Image backward(const Cache& cache, const Image& dout, std::vector<double>* grads) const;
};

// [noisy image | pos x | pos y | log sigma]; positional planes zeroed when the
// config disables them or no location is supplied
Image build_denoiser_input(const NetConfig& cfg, const Image& x, double sigma, const Image* pos);

// ScoreModel wrapper around the conv stack.
struct PatchDenoiser : ScoreModel {
    ConvStack net;

    explicit PatchDenoiser(NetConfig cfg) : net(cfg) {}
    explicit PatchDenoiser(ConvStack net_) : net(std::move(net_)) {}
    int channels() const override { return net.cfg.image_channels; }
    Image denoise(const Image& x, double sigma, const Image* pos) const override;
    Image vjp(const Image& x, double sigma, const Image* pos, const Image& v) const override;
};

// divergence or repeated non-finite losses
struct TrainingAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainSample {
    Image clean;  // image channels only
    Image pos;    // 2 channels
    double sigma = 1.0;
    Image noise;  // same shape as clean, standard normal draws
};

// loss = mean over batch of ||D(clean + sigma*noise) - clean||^2 / sigma^2,
// the annealed score-matching weighting (per-sigma terms stay plain
// sums of squares, so fixed-noise-level identities are unaffected)
struct DsmLossResult {
    double loss = 0.0;
    std::vector<double> grads;
};
DsmLossResult dsm_loss(const ConvStack& net, const std::vector<TrainSample>& batch, int threads = 1);

struct TrainConfig {
    double sigma_min = 0.002;
    double sigma_max = 40.0;
    std::vector<std::pair<int, double>> patch_sizes = {{16, 0.7}, {12, 0.3}};
    int batch = 16;
    double lr = 2e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double ema_halflife_patches = 50000.0;
    int iters = 5000;
    uint64_t seed = 0;
    int threads = 1;
    int log_every = 10;

    void validate(const NetConfig& net) const;  // rejects sizes below the receptive field
};

// size drawn from the configured distribution, location uniform over placements
// fully inside the canvas (border included)
TrainSample sample_training_patch(const std::vector<Image>& canvases, const PositionalGrid& grid,
                                  const TrainConfig& cfg, RandomStream& rng, int* size_out = nullptr);

struct Checkpoint {
    NetConfig net;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    uint64_t seed = 0;
    uint32_t iters = 0;
    std::vector<float> raw;
    std::vector<float> ema;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

// checkpoint -> runnable denoiser (EMA weights by default)
PatchDenoiser make_denoiser(const Checkpoint& ckpt, bool use_ema = true);

// Trains on zero-padded canvases (all the same side). Training log CSV columns:
// step,loss,sigma_mean,wall_ms. Throws on divergence (loss > 1e3 x initial).
Checkpoint train(const std::vector<Image>& canvases, const NetConfig& netcfg,
                 const TrainConfig& cfg, const std::string& log_path = "");

}  // namespace padis
