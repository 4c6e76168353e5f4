#include "padis/denoiser.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace padis {

void NetConfig::validate() const {
    if (image_channels < 1 || hidden < 1 || layers < 1)
        throw std::invalid_argument("NetConfig: need >= 1 channel, hidden width, layer");
}

ConvStack::ConvStack(NetConfig cfg_) : cfg(cfg_) {
    cfg.validate();
    params.assign(param_count(), 0.0);
}

size_t ConvStack::param_count() const {
    size_t n = 0;
    for (int l = 0; l < cfg.layers; ++l)
        n += static_cast<size_t>(layer_out(l)) * layer_in(l) * 9 + layer_out(l);
    return n;
}

void ConvStack::init_params(RandomStream& rng) {
    size_t off = 0;
    for (int l = 0; l < cfg.layers; ++l) {
        int ic = layer_in(l), oc = layer_out(l);
        // zero-initialized last layer: the denoiser starts as the identity
        double scale = (l == cfg.layers - 1) ? 0.0 : std::sqrt(2.0 / (ic * 9.0));
        for (int i = 0; i < oc * ic * 9; ++i) params[off++] = scale * rng.normal();
        for (int i = 0; i < oc; ++i) params[off++] = 0.0;
    }
}

namespace {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double silu_deriv(double x) {
    double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

void apply_act(Image& img, Act act) {
    if (act == Act::SiLU)
        for (double& v : img.v) v = silu(v);
    else
        for (double& v : img.v) v = v > 0.0 ? v : 0.0;
}

// zero-padded 3x3 convolution; accumulates into out (caller pre-fills bias)
void conv3x3_forward(const Image& in, const double* w, Image& out) {
    int h = in.h, wd = in.w;
    for (int oc = 0; oc < out.c; ++oc)
        for (int ic = 0; ic < in.c; ++ic) {
            const double* wk = w + (static_cast<size_t>(oc) * in.c + ic) * 9;
            for (int dr = -1; dr <= 1; ++dr) {
                const double w0 = wk[(dr + 1) * 3 + 0];
                const double w1 = wk[(dr + 1) * 3 + 1];
                const double w2 = wk[(dr + 1) * 3 + 2];
                for (int r = 0; r < h; ++r) {
                    int rr = r + dr;
                    if (rr < 0 || rr >= h) continue;
                    const double* irow = &in.v[(static_cast<size_t>(ic) * h + rr) * wd];
                    double* orow = &out.v[(static_cast<size_t>(oc) * h + r) * wd];
                    if (wd == 1) {
                        orow[0] += w1 * irow[0];
                        continue;
                    }
                    orow[0] += w1 * irow[0] + w2 * irow[1];
                    for (int c = 1; c + 1 < wd; ++c)
                        orow[c] += w0 * irow[c - 1] + w1 * irow[c] + w2 * irow[c + 1];
                    orow[wd - 1] += w0 * irow[wd - 2] + w1 * irow[wd - 1];
                }
            }
        }
}

// dL/din accumulation: transposed convolution with the flipped kernel
void conv3x3_backward_input(const Image& dout, const double* w, int in_c, Image& din) {
    int h = dout.h, wd = dout.w;
    for (int oc = 0; oc < dout.c; ++oc)
        for (int ic = 0; ic < in_c; ++ic) {
            const double* wk = w + (static_cast<size_t>(oc) * in_c + ic) * 9;
            for (int dr = -1; dr <= 1; ++dr) {
                const double w0 = wk[(dr + 1) * 3 + 0];
                const double w1 = wk[(dr + 1) * 3 + 1];
                const double w2 = wk[(dr + 1) * 3 + 2];
                for (int r = 0; r < h; ++r) {
                    int rr = r + dr;
                    if (rr < 0 || rr >= h) continue;
                    const double* drow = &dout.v[(static_cast<size_t>(oc) * h + r) * wd];
                    double* irow = &din.v[(static_cast<size_t>(ic) * h + rr) * wd];
                    // contribution of dout(r,c) lands on din(rr, c+dc-1)
                    for (int c = 0; c < wd; ++c) {
                        double g = drow[c];
                        if (g == 0.0) continue;
                        if (c - 1 >= 0) irow[c - 1] += w0 * g;
                        irow[c] += w1 * g;
                        if (c + 1 < wd) irow[c + 1] += w2 * g;
                    }
                }
            }
        }
}

void conv3x3_backward_params(const Image& in, const Image& dout, double* gw, double* gb) {
    int h = in.h, wd = in.w;
    for (int oc = 0; oc < dout.c; ++oc) {
        double acc_b = 0.0;
        const double* dplane = &dout.v[static_cast<size_t>(oc) * h * wd];
        for (int i = 0; i < h * wd; ++i) acc_b += dplane[i];
        gb[oc] += acc_b;
        for (int ic = 0; ic < in.c; ++ic) {
            double* gwk = gw + (static_cast<size_t>(oc) * in.c + ic) * 9;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    double acc = 0.0;
                    for (int r = 0; r < h; ++r) {
                        int rr = r + dr;
                        if (rr < 0 || rr >= h) continue;
                        const double* drow = &dout.v[(static_cast<size_t>(oc) * h + r) * wd];
                        const double* irow = &in.v[(static_cast<size_t>(ic) * h + rr) * wd];
                        int c0 = std::max(0, -dc), c1 = std::min(wd, wd - dc);
                        for (int c = c0; c < c1; ++c) acc += drow[c] * irow[c + dc];
                    }
                    gwk[(dr + 1) * 3 + (dc + 1)] += acc;
                }
        }
    }
}

}  // namespace

Image ConvStack::forward(const Image& input, Cache* cache) const {
    if (input.c != cfg.in_channels())
        throw std::invalid_argument("ConvStack: input channel count mismatch");
    if (cache) {
        cache->act_in.clear();
        cache->pre.clear();
    }
    Image cur = input;
    size_t off = 0;
    for (int l = 0; l < cfg.layers; ++l) {
        int ic = layer_in(l), oc = layer_out(l);
        const double* w = params.data() + off;
        const double* b = params.data() + off + static_cast<size_t>(oc) * ic * 9;
        off += static_cast<size_t>(oc) * ic * 9 + oc;

        Image out(cur.h, cur.w, oc);
        for (int j = 0; j < oc; ++j)
            for (int i = 0; i < cur.h * cur.w; ++i) out.v[static_cast<size_t>(j) * cur.h * cur.w + i] = b[j];
        conv3x3_forward(cur, w, out);

        if (cache) {
            cache->act_in.push_back(cur);
            cache->pre.push_back(out);
        }
        if (l + 1 < cfg.layers) apply_act(out, cfg.act);
        cur = std::move(out);
    }
    return cur;
}

Image ConvStack::backward(const Cache& cache, const Image& dout, std::vector<double>* grads) const {
    if (static_cast<int>(cache.pre.size()) != cfg.layers)
        throw std::invalid_argument("ConvStack::backward: bad cache");
    Image cur = dout;
    // parameter offsets per layer
    std::vector<size_t> off(cfg.layers);
    size_t acc = 0;
    for (int l = 0; l < cfg.layers; ++l) {
        off[l] = acc;
        acc += static_cast<size_t>(layer_out(l)) * layer_in(l) * 9 + layer_out(l);
    }
    for (int l = cfg.layers - 1; l >= 0; --l) {
        int ic = layer_in(l), oc = layer_out(l);
        if (l + 1 < cfg.layers) {
            const Image& pre = cache.pre[l];
            if (cfg.act == Act::SiLU)
                for (size_t i = 0; i < cur.v.size(); ++i) cur.v[i] *= silu_deriv(pre.v[i]);
            else
                for (size_t i = 0; i < cur.v.size(); ++i) cur.v[i] *= pre.v[i] > 0.0 ? 1.0 : 0.0;
        }
        if (grads) {
            double* gw = grads->data() + off[l];
            double* gb = grads->data() + off[l] + static_cast<size_t>(oc) * ic * 9;
            conv3x3_backward_params(cache.act_in[l], cur, gw, gb);
        }
        Image din(cur.h, cur.w, ic);
        conv3x3_backward_input(cur, params.data() + off[l], ic, din);
        cur = std::move(din);
    }
    return cur;
}

Image build_denoiser_input(const NetConfig& cfg, const Image& x, double sigma, const Image* pos) {
    if (x.c != cfg.image_channels)
        throw std::invalid_argument("denoiser input: image channel mismatch");
    if (sigma <= 0.0) throw std::invalid_argument("denoiser input: sigma must be > 0");
    Image in(x.h, x.w, cfg.in_channels());
    int plane = x.h * x.w;
    for (int ch = 0; ch < x.c; ++ch)
        std::memcpy(&in.v[static_cast<size_t>(ch) * plane], &x.v[static_cast<size_t>(ch) * plane],
                    sizeof(double) * plane);
    if (cfg.use_positional && pos) {
        if (pos->h != x.h || pos->w != x.w || pos->c != 2)
            throw std::invalid_argument("denoiser input: positional patch shape mismatch");
        std::memcpy(&in.v[static_cast<size_t>(x.c) * plane], pos->v.data(), sizeof(double) * 2 * plane);
    }
    double ls = std::log(sigma);
    for (int i = 0; i < plane; ++i) in.v[(static_cast<size_t>(x.c) + 2) * plane + i] = ls;
    return in;
}

// The stack learns the correction on top of a skip connection: D = x + F(x).
// Reproducing nearly-clean inputs then costs nothing, which raw regression
// cannot do at this network size.
Image PatchDenoiser::denoise(const Image& x, double sigma, const Image* pos) const {
    Image out = net.forward(build_denoiser_input(net.cfg, x, sigma, pos), nullptr);
    out += x;
    return out;
}

Image PatchDenoiser::vjp(const Image& x, double sigma, const Image* pos, const Image& v) const {
    ConvStack::Cache cache;
    net.forward(build_denoiser_input(net.cfg, x, sigma, pos), &cache);
    Image din = net.backward(cache, v, nullptr);
    // only the image-channel block of the input is a true variable; the skip
    // contributes v itself
    Image out(x.h, x.w, x.c);
    std::memcpy(out.v.data(), din.v.data(), sizeof(double) * out.v.size());
    out += v;
    return out;
}

namespace {

// per-sample loss + gradient contribution (un-normalized); the denoiser is
// x + F(x), so the regression target for the stack is clean - noisy. Each
// sample is weighted by 1/sigma^2 (the annealed score-matching weighting) so
// every noise level contributes at the same scale.
double dsm_sample(const ConvStack& net, const TrainSample& s, std::vector<double>* grads) {
    Image noisy = s.clean;
    axpy(noisy, s.sigma, s.noise);
    Image input = build_denoiser_input(net.cfg, noisy, s.sigma, &s.pos);
    ConvStack::Cache cache;
    Image out = net.forward(input, &cache);
    out += noisy;
    Image res = out - s.clean;
    double w = 1.0 / (s.sigma * s.sigma);
    double loss = w * dot(res, res);
    if (grads) {
        res *= 2.0 * w;
        net.backward(cache, res, grads);
    }
    return loss;
}

}  // namespace

DsmLossResult dsm_loss(const ConvStack& net, const std::vector<TrainSample>& batch, int threads) {
    if (batch.empty()) throw std::invalid_argument("dsm_loss: empty batch");
    DsmLossResult res;
    res.grads.assign(net.param_count(), 0.0);
    size_t b = batch.size();

    if (threads <= 1) {
        for (const TrainSample& s : batch) res.loss += dsm_sample(net, s, &res.grads);
    } else {
        // per-sample gradient buffers merged in sample order: result is
        // independent of the thread count
        std::vector<std::vector<double>> gbuf(b);
        std::vector<double> losses(b, 0.0);
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        int nt = std::min<size_t>(threads, b);
        for (int t = 0; t < nt; ++t)
            pool.emplace_back([&]() {
                size_t i;
                while ((i = next.fetch_add(1)) < b) {
                    gbuf[i].assign(net.param_count(), 0.0);
                    losses[i] = dsm_sample(net, batch[i], &gbuf[i]);
                }
            });
        for (auto& th : pool) th.join();
        for (size_t i = 0; i < b; ++i) {
            res.loss += losses[i];
            for (size_t j = 0; j < res.grads.size(); ++j) res.grads[j] += gbuf[i][j];
        }
    }
    res.loss /= static_cast<double>(b);
    for (double& g : res.grads) g /= static_cast<double>(b);
    return res;
}

void TrainConfig::validate(const NetConfig& net) const {
    if (!(sigma_min > 0.0 && sigma_min < sigma_max))
        throw std::invalid_argument("TrainConfig: need 0 < sigma_min < sigma_max");
    if (patch_sizes.empty()) throw std::invalid_argument("TrainConfig: no patch sizes");
    double psum = 0.0;
    for (auto [size, prob] : patch_sizes) {
        if (size < net.receptive_field())
            throw std::invalid_argument("TrainConfig: patch size " + std::to_string(size) +
                                        " below receptive field " +
                                        std::to_string(net.receptive_field()));
        if (prob <= 0.0) throw std::invalid_argument("TrainConfig: probabilities must be > 0");
        psum += prob;
    }
    if (std::abs(psum - 1.0) > 1e-9)
        throw std::invalid_argument("TrainConfig: probabilities must sum to 1");
    if (batch < 1 || iters < 0) throw std::invalid_argument("TrainConfig: bad batch/iters");
}

namespace {

int draw_patch_size(const TrainConfig& cfg, RandomStream& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    for (auto [size, prob] : cfg.patch_sizes) {
        acc += prob;
        if (u < acc) return size;
    }
    return cfg.patch_sizes.back().first;
}

}  // namespace

TrainSample sample_training_patch(const std::vector<Image>& canvases, const PositionalGrid& grid,
                                  const TrainConfig& cfg, RandomStream& rng, int* size_out) {
    if (canvases.empty()) throw std::invalid_argument("sample_training_patch: empty dataset");
    int size = draw_patch_size(cfg, rng);
    int side = canvases.front().h;
    if (size > side) throw std::invalid_argument("sample_training_patch: patch larger than canvas");
    int idx = rng.uniform_int(0, static_cast<int>(canvases.size()) - 1);
    int r0 = rng.uniform_int(0, side - size);
    int c0 = rng.uniform_int(0, side - size);
    TrainSample s;
    s.clean = extract_patch(canvases[idx], r0, c0, size);
    s.pos = positional_patch(grid, r0, c0, size);
    if (size_out) *size_out = size;
    return s;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    const char magic[8] = {'P', 'D', 'C', 'K', 'P', 'T', '0', '1'};
    out.write(magic, 8);
    auto w32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto w64 = [&](uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    auto wf64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    w32(static_cast<uint32_t>(net.image_channels));
    w32(static_cast<uint32_t>(net.hidden));
    w32(static_cast<uint32_t>(net.layers));
    w32(static_cast<uint32_t>(net.act));
    w32(net.use_positional ? 1u : 0u);
    wf64(sigma_min);
    wf64(sigma_max);
    w64(seed);
    w32(iters);
    w64(raw.size());
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(ema.data()),
              static_cast<std::streamsize>(ema.size() * sizeof(float)));
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "PDCKPT01", 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    auto r32 = [&]() { uint32_t v; in.read(reinterpret_cast<char*>(&v), 4); return v; };
    auto r64 = [&]() { uint64_t v; in.read(reinterpret_cast<char*>(&v), 8); return v; };
    auto rf64 = [&]() { double v; in.read(reinterpret_cast<char*>(&v), 8); return v; };
    Checkpoint c;
    c.net.image_channels = static_cast<int>(r32());
    c.net.hidden = static_cast<int>(r32());
    c.net.layers = static_cast<int>(r32());
    c.net.act = static_cast<Act>(r32());
    c.net.use_positional = r32() != 0;
    c.sigma_min = rf64();
    c.sigma_max = rf64();
    c.seed = r64();
    c.iters = r32();
    uint64_t count = r64();
    c.raw.resize(count);
    c.ema.resize(count);
    in.read(reinterpret_cast<char*>(c.raw.data()), static_cast<std::streamsize>(count * sizeof(float)));
    in.read(reinterpret_cast<char*>(c.ema.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
    c.net.validate();
    ConvStack probe(c.net);
    if (probe.param_count() != count) throw std::runtime_error("checkpoint: parameter count mismatch");
    return c;
}

PatchDenoiser make_denoiser(const Checkpoint& ckpt, bool use_ema) {
    ConvStack stack(ckpt.net);
    const std::vector<float>& src = use_ema ? ckpt.ema : ckpt.raw;
    for (size_t i = 0; i < src.size(); ++i) stack.params[i] = static_cast<double>(src[i]);
    return PatchDenoiser(std::move(stack));
}

Checkpoint train(const std::vector<Image>& canvases, const NetConfig& netcfg, const TrainConfig& cfg,
                 const std::string& log_path) {
    cfg.validate(netcfg);
    if (canvases.empty()) throw std::invalid_argument("train: empty dataset");
    int side = canvases.front().h;
    for (const Image& c : canvases)
        if (c.h != side || c.w != side || c.c != netcfg.image_channels)
            throw std::invalid_argument("train: canvases must share shape and channel count");
    PositionalGrid grid = make_positional_grid(side);

    ConvStack net(netcfg);
    RandomStream init_rng(mix_seed(cfg.seed, 0xA11CE));
    net.init_params(init_rng);

    std::vector<double> ema = net.params;
    std::vector<double> m(net.param_count(), 0.0), v(net.param_count(), 0.0);
    // the effective half-life ramps up with patches seen so the random init
    // washes out of the average early in training
    constexpr double kEmaRampRatio = 0.05;

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw std::runtime_error("train: cannot write log " + log_path);
        log << "step,loss,sigma_mean,wall_ms\n";
    }

    auto t0 = std::chrono::steady_clock::now();
    double initial_loss = -1.0;
    int nonfinite_streak = 0;
    double log_smin = std::log(cfg.sigma_min), log_smax = std::log(cfg.sigma_max);

    for (int step = 1; step <= cfg.iters; ++step) {
        RandomStream step_rng(mix_seed(cfg.seed, static_cast<uint64_t>(step)));
        int size = draw_patch_size(cfg, step_rng);
        std::vector<TrainSample> batch(cfg.batch);
        double sigma_mean = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            RandomStream srng(mix_seed(step_rng.eng(), static_cast<uint64_t>(b)));
            int idx = srng.uniform_int(0, static_cast<int>(canvases.size()) - 1);
            int r0 = srng.uniform_int(0, side - size);
            int c0 = srng.uniform_int(0, side - size);
            TrainSample& s = batch[b];
            s.clean = extract_patch(canvases[idx], r0, c0, size);
            s.pos = positional_patch(grid, r0, c0, size);
            s.sigma = std::exp(log_smin + (log_smax - log_smin) * srng.uniform());
            s.noise = srng.normal_image(size, size, netcfg.image_channels);
            sigma_mean += s.sigma;
        }
        sigma_mean /= cfg.batch;

        DsmLossResult res = dsm_loss(net, batch, cfg.threads);
        if (!std::isfinite(res.loss)) {
            // step aborted, parameters untouched
            if (log.is_open())
                log << step << ",nan," << sigma_mean << ","
                    << std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0).count()
                    << "\n";
            if (++nonfinite_streak >= 5) throw TrainingAbort("train: repeated non-finite loss");
            continue;
        }
        nonfinite_streak = 0;
        if (initial_loss < 0.0) initial_loss = res.loss;
        if (res.loss > 1e3 * initial_loss)
            throw TrainingAbort("train: diverged at step " + std::to_string(step) + " (loss " +
                                     std::to_string(res.loss) + ", initial " +
                                     std::to_string(initial_loss) + ")");

        double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
        double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
        bool finite = true;
        for (size_t i = 0; i < net.params.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * res.grads[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * res.grads[i] * res.grads[i];
            net.params[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
            finite &= std::isfinite(net.params[i]);
        }
        if (!finite)
            throw TrainingAbort("train: non-finite parameters after step " + std::to_string(step));
        double patches_seen = static_cast<double>(step) * cfg.batch;
        double halflife = std::min(cfg.ema_halflife_patches,
                                   std::max(1.0, kEmaRampRatio * patches_seen));
        double ema_decay = std::pow(0.5, static_cast<double>(cfg.batch) / halflife);
        for (size_t i = 0; i < ema.size(); ++i)
            ema[i] = ema_decay * ema[i] + (1.0 - ema_decay) * net.params[i];

        if (log.is_open() && (step % cfg.log_every == 0 || step == 1 || step == cfg.iters)) {
            auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0).count();
            log << step << "," << res.loss << "," << sigma_mean << "," << ms << "\n";
        }
    }

    Checkpoint ckpt;
    ckpt.net = netcfg;
    ckpt.sigma_min = cfg.sigma_min;
    ckpt.sigma_max = cfg.sigma_max;
    ckpt.seed = cfg.seed;
    ckpt.iters = static_cast<uint32_t>(cfg.iters);
    ckpt.raw.resize(net.params.size());
    ckpt.ema.resize(ema.size());
    for (size_t i = 0; i < net.params.size(); ++i) ckpt.raw[i] = static_cast<float>(net.params[i]);
    for (size_t i = 0; i < ema.size(); ++i) ckpt.ema[i] = static_cast<float>(ema[i]);
    return ckpt;
}

}  // namespace padis
