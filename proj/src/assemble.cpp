#include "padis/assemble.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace padis {

namespace {

// Runs fn(i) for i in [0,count) on up to `threads` workers. Outputs must go to
// disjoint slots so the merge is order-independent.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    int nt = std::min(threads, count);
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&]() {
            int i;
            while ((i = next.fetch_add(1)) < count) fn(i);
        });
    for (auto& th : pool) th.join();
}

void check_patch_shape(const Image& got, int p, int c, const char* what) {
    if (got.h != p || got.w != p || got.c != c)
        throw std::runtime_error(std::string(what) + ": model output shape mismatch");
}

}  // namespace

Image assembled_denoise(const Image& canvas, double sigma, const ScoreModel& model,
                        const PartitionSpec& spec, const PositionalGrid& grid, int threads) {
    if (canvas.h != spec.canvas_side() || canvas.w != spec.canvas_side())
        throw std::invalid_argument("assembled_denoise: canvas does not match spec");
    std::vector<PatchLocation> locs = patch_locations(spec);
    std::vector<Image> outs(locs.size());
    parallel_for(static_cast<int>(locs.size()), threads, [&](int r) {
        Image patch = extract_patch(canvas, locs[r].r0, locs[r].c0, spec.p);
        Image pos = positional_patch(grid, locs[r].r0, locs[r].c0, spec.p);
        outs[r] = model.denoise(patch, sigma, &pos);
        check_patch_shape(outs[r], spec.p, canvas.c, "assembled_denoise");
    });
    // border denoises to zero; patch writes are disjoint
    Image d(canvas.h, canvas.w, canvas.c);
    for (size_t r = 0; r < locs.size(); ++r) scatter_patch(d, outs[r], locs[r].r0, locs[r].c0);
    return d;
}

Image assembled_score(const Image& canvas, double sigma, const ScoreModel& model,
                      const PartitionSpec& spec, const PositionalGrid& grid, int threads) {
    return tweedie_score(assembled_denoise(canvas, sigma, model, spec, grid, threads), canvas, sigma);
}

Image assembled_denoise_vjp(const Image& canvas, double sigma, const ScoreModel& model,
                            const PartitionSpec& spec, const PositionalGrid& grid, const Image& v,
                            int threads) {
    require_same_shape(canvas, v, "assembled_denoise_vjp");
    std::vector<PatchLocation> locs = patch_locations(spec);
    std::vector<Image> outs(locs.size());
    parallel_for(static_cast<int>(locs.size()), threads, [&](int r) {
        Image patch = extract_patch(canvas, locs[r].r0, locs[r].c0, spec.p);
        Image pos = positional_patch(grid, locs[r].r0, locs[r].c0, spec.p);
        Image vp = extract_patch(v, locs[r].r0, locs[r].c0, spec.p);
        outs[r] = model.vjp(patch, sigma, &pos, vp);
        check_patch_shape(outs[r], spec.p, canvas.c, "assembled_denoise_vjp");
    });
    Image g(canvas.h, canvas.w, canvas.c);  // border jacobian is zero
    for (size_t r = 0; r < locs.size(); ++r) scatter_patch(g, outs[r], locs[r].r0, locs[r].c0);
    return g;
}

StochasticScore stochastic_partition_score(const Image& canvas, double sigma, const ScoreModel& model,
                                           int n, int p, const PositionalGrid& grid, RandomStream& rng,
                                           int threads) {
    Partition part = make_partition(n, p);
    StochasticScore out;
    out.i = rng.uniform_int(1, part.m);
    out.j = rng.uniform_int(1, part.m);
    out.score = assembled_score(canvas, sigma, model, make_spec(n, p, out.i, out.j), grid, threads);
    return out;
}

Image full_average_score(const Image& canvas, double sigma, const ScoreModel& model, int n, int p,
                         const PositionalGrid& grid, int threads) {
    Partition part = make_partition(n, p);
    Image acc(canvas.h, canvas.w, canvas.c);
    for (int i = 1; i <= part.m; ++i)
        for (int j = 1; j <= part.m; ++j)
            acc += assembled_score(canvas, sigma, model, make_spec(n, p, i, j), grid, threads);
    acc *= 1.0 / (static_cast<double>(part.m) * part.m);
    return acc;
}

std::vector<PatchLocation> overlap_grid(int side, int p, int overlap) {
    if (overlap < 0 || overlap >= p) throw std::invalid_argument("overlap_grid: need 0 <= overlap < p");
    if (p > side) throw std::invalid_argument("overlap_grid: patch larger than canvas");
    int stride = p - overlap;
    std::vector<int> starts;
    for (int s = 0;; s += stride) {
        if (s + p >= side) {
            if (starts.empty() || starts.back() != side - p) starts.push_back(side - p);
            break;
        }
        starts.push_back(s);
    }
    std::vector<PatchLocation> locs;
    for (int r : starts)
        for (int c : starts) locs.push_back({r, c});
    return locs;
}

namespace {

Image overlap_denoise_impl(const Image& canvas, double sigma, const ScoreModel& model, int p,
                           int overlap, const PositionalGrid& grid, int threads, bool average) {
    std::vector<PatchLocation> locs = overlap_grid(canvas.h, p, overlap);
    std::vector<Image> outs(locs.size());
    parallel_for(static_cast<int>(locs.size()), threads, [&](int r) {
        Image patch = extract_patch(canvas, locs[r].r0, locs[r].c0, p);
        Image pos = positional_patch(grid, locs[r].r0, locs[r].c0, p);
        outs[r] = model.denoise(patch, sigma, &pos);
        check_patch_shape(outs[r], p, canvas.c, "overlap denoise");
    });
    Image d(canvas.h, canvas.w, canvas.c);
    if (average) {
        Image count(canvas.h, canvas.w, canvas.c);
        for (size_t r = 0; r < locs.size(); ++r)
            for (int ch = 0; ch < canvas.c; ++ch)
                for (int pr = 0; pr < p; ++pr)
                    for (int pc = 0; pc < p; ++pc) {
                        d.at(locs[r].r0 + pr, locs[r].c0 + pc, ch) += outs[r].at(pr, pc, ch);
                        count.at(locs[r].r0 + pr, locs[r].c0 + pc, ch) += 1.0;
                    }
        for (size_t i = 0; i < d.v.size(); ++i) {
            if (count.v[i] == 0.0) throw std::runtime_error("overlap denoise: grid does not cover canvas");
            d.v[i] /= count.v[i];
        }
    } else {
        // fixed raster order, later patches override
        for (size_t r = 0; r < locs.size(); ++r) scatter_patch(d, outs[r], locs[r].r0, locs[r].c0);
    }
    return d;
}

}  // namespace

Image overlap_average_denoise(const Image& canvas, double sigma, const ScoreModel& model, int p,
                              int overlap, const PositionalGrid& grid, int threads) {
    return overlap_denoise_impl(canvas, sigma, model, p, overlap, grid, threads, true);
}

Image overlap_stitch_denoise(const Image& canvas, double sigma, const ScoreModel& model, int p,
                             int overlap, const PositionalGrid& grid, int threads) {
    return overlap_denoise_impl(canvas, sigma, model, p, overlap, grid, threads, false);
}

PatchAssembler::PatchAssembler(AssemblerConfig cfg_, const ScoreModel* model_)
    : cfg(cfg_), model(model_), part(make_partition(cfg_.n, cfg_.p)),
      grid(make_positional_grid(cfg_.n + 2 * part.m)) {
    if (cfg.mode == AssembleMode::OverlapAverage || cfg.mode == AssembleMode::OverlapStitch)
        if (cfg.overlap < 0 || cfg.overlap >= cfg.p)
            throw std::invalid_argument("PatchAssembler: overlap must be in [0, p)");
}

SweepResult PatchAssembler::sweep(const Image& canvas, double sigma, RandomStream& rng) const {
    SweepResult res;
    const ScoreModel* m = model;
    int threads = cfg.threads;
    switch (cfg.mode) {
        case AssembleMode::PadisStochastic: {
            PartitionSpec spec;
            spec.n = cfg.n;
            spec.p = cfg.p;
            spec.k = part.k;
            spec.i = rng.uniform_int(1, part.m);
            spec.j = rng.uniform_int(1, part.m);
            res.part_i = spec.i;
            res.part_j = spec.j;
            res.denoised = assembled_denoise(canvas, sigma, *m, spec, grid, threads);
            res.score = tweedie_score(res.denoised, canvas, sigma);
            const PositionalGrid* g = &grid;
            res.vjp = [m, spec, g, canvas, sigma, threads](const Image& v) {
                return assembled_denoise_vjp(canvas, sigma, *m, spec, *g, v, threads);
            };
            break;
        }
        case AssembleMode::PadisFullAverage: {
            // average the per-partition denoised canvases; the score of the
            // average equals the average of the per-partition scores since x
            // is shared
            Image acc(canvas.h, canvas.w, canvas.c);
            for (int i = 1; i <= part.m; ++i)
                for (int j = 1; j <= part.m; ++j)
                    acc += assembled_denoise(canvas, sigma, *m, make_spec(cfg.n, cfg.p, i, j), grid,
                                             threads);
            acc *= 1.0 / (static_cast<double>(part.m) * part.m);
            res.denoised = std::move(acc);
            res.score = tweedie_score(res.denoised, canvas, sigma);
            const PositionalGrid* g = &grid;
            int n = cfg.n, p = cfg.p, mm = part.m;
            res.vjp = [m, g, canvas, sigma, threads, n, p, mm](const Image& v) {
                Image acc2(canvas.h, canvas.w, canvas.c);
                for (int i = 1; i <= mm; ++i)
                    for (int j = 1; j <= mm; ++j)
                        acc2 += assembled_denoise_vjp(canvas, sigma, *m, make_spec(n, p, i, j), *g, v,
                                                      threads);
                acc2 *= 1.0 / (static_cast<double>(mm) * mm);
                return acc2;
            };
            break;
        }
        case AssembleMode::OverlapAverage:
        case AssembleMode::OverlapStitch: {
            bool average = cfg.mode == AssembleMode::OverlapAverage;
            res.denoised = overlap_denoise_impl(canvas, sigma, *m, cfg.p, cfg.overlap, grid, threads,
                                                average);
            res.score = tweedie_score(res.denoised, canvas, sigma);
            const PositionalGrid* g = &grid;
            int p = cfg.p, ov = cfg.overlap;
            res.vjp = [m, g, canvas, sigma, threads, p, ov, average](const Image& v) {
                // adjoint of the blend: averaging weights each patch cotangent
                // by 1/count; stitching routes it through the winning pixels
                std::vector<PatchLocation> locs = overlap_grid(canvas.h, p, ov);
                Image weight(canvas.h, canvas.w, canvas.c);
                std::vector<int> winner(canvas.v.size(), -1);
                for (size_t r = 0; r < locs.size(); ++r)
                    for (int ch = 0; ch < canvas.c; ++ch)
                        for (int pr = 0; pr < p; ++pr)
                            for (int pc = 0; pc < p; ++pc) {
                                size_t idx = (static_cast<size_t>(ch) * canvas.h + locs[r].r0 + pr) *
                                                 canvas.w + locs[r].c0 + pc;
                                weight.v[idx] += 1.0;
                                winner[idx] = static_cast<int>(r);
                            }
                Image g_out(canvas.h, canvas.w, canvas.c);
                std::vector<Image> parts(locs.size());
                parallel_for(static_cast<int>(locs.size()), threads, [&](int r) {
                    Image patch = extract_patch(canvas, locs[r].r0, locs[r].c0, p);
                    Image pos = positional_patch(*g, locs[r].r0, locs[r].c0, p);
                    Image vp(p, p, canvas.c);
                    for (int ch = 0; ch < canvas.c; ++ch)
                        for (int pr = 0; pr < p; ++pr)
                            for (int pc = 0; pc < p; ++pc) {
                                size_t idx = (static_cast<size_t>(ch) * canvas.h + locs[r].r0 + pr) *
                                                 canvas.w + locs[r].c0 + pc;
                                double wgt = average ? 1.0 / weight.v[idx]
                                                     : (winner[idx] == r ? 1.0 : 0.0);
                                vp.at(pr, pc, ch) = v.v[idx] * wgt;
                            }
                    parts[r] = m->vjp(patch, sigma, &pos, vp);
                });
                for (size_t r = 0; r < locs.size(); ++r)
                    for (int ch = 0; ch < canvas.c; ++ch)
                        for (int pr = 0; pr < p; ++pr)
                            for (int pc = 0; pc < p; ++pc)
                                g_out.at(locs[r].r0 + pr, locs[r].c0 + pc, ch) +=
                                    parts[r].at(pr, pc, ch);
                return g_out;
            };
            break;
        }
    }
    return res;
}

SweepResult WholeCanvasAssembler::sweep(const Image& canvas, double sigma, RandomStream&) const {
    SweepResult res;
    res.denoised = model->denoise(canvas, sigma, nullptr);
    res.score = tweedie_score(res.denoised, canvas, sigma);
    const ScoreModel* m = model;
    res.vjp = [m, canvas, sigma](const Image& v) { return m->vjp(canvas, sigma, nullptr, v); };
    return res;
}

}  // namespace padis
