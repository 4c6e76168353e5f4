#pragma once

#include <functional>
#include <memory>

#include "padis/grid.hpp"
#include "padis/rng.hpp"
#include "padis/scoremodel.hpp"
#include "padis/tensor.hpp"

namespace padis {

enum class AssembleMode {
    PadisStochastic,   // one random (i,j) per sweep, single-partition estimate
    PadisFullAverage,  // normalized double sum over all M^2 partitions
    OverlapAverage,    // fixed overlapping grid, overlapped pixels averaged
    OverlapStitch,     // fixed overlapping grid, later raster patches override
};

// Whole-canvas denoise from patch-level model calls; the border region of a
// partition denoises to zero. Score is (denoised - x)/sigma^2 by construction.
Image assembled_denoise(const Image& canvas, double sigma, const ScoreModel& model,
                        const PartitionSpec& spec, const PositionalGrid& grid, int threads = 1);
Image assembled_score(const Image& canvas, double sigma, const ScoreModel& model,
                      const PartitionSpec& spec, const PositionalGrid& grid, int threads = 1);
// block-diagonal jacobian across non-overlapping patches; border contributes 0
Image assembled_denoise_vjp(const Image& canvas, double sigma, const ScoreModel& model,
                            const PartitionSpec& spec, const PositionalGrid& grid, const Image& v,
                            int threads = 1);

struct StochasticScore {
    Image score;
    int i = 1;
    int j = 1;
};
// (i,j) drawn uniformly from [1,M]^2
StochasticScore stochastic_partition_score(const Image& canvas, double sigma, const ScoreModel& model,
                                           int n, int p, const PositionalGrid& grid, RandomStream& rng,
                                           int threads = 1);
// the normalized double sum of patch scores over all partitions
Image full_average_score(const Image& canvas, double sigma, const ScoreModel& model, int n, int p,
                         const PositionalGrid& grid, int threads = 1);

// Fixed overlapping grid covering the whole canvas; start positions step by
// p - overlap with the last start clamped to side - p.
std::vector<PatchLocation> overlap_grid(int side, int p, int overlap);
Image overlap_average_denoise(const Image& canvas, double sigma, const ScoreModel& model, int p,
                              int overlap, const PositionalGrid& grid, int threads = 1);
Image overlap_stitch_denoise(const Image& canvas, double sigma, const ScoreModel& model, int p,
                             int overlap, const PositionalGrid& grid, int threads = 1);

// One model sweep per sampler iteration: denoised canvas, its Tweedie score,
// and a VJP bound to the same partition so DPS reuses the sweep's patch set.
struct SweepResult {
    Image denoised;
    Image score;
    int part_i = 0;
    int part_j = 0;
    std::function<Image(const Image&)> vjp;
};

// The only surface samplers touch; patch-based assembly and whole-canvas
// oracles are interchangeable behind it.
struct CanvasAssembler {
    virtual ~CanvasAssembler() = default;
    virtual SweepResult sweep(const Image& canvas, double sigma, RandomStream& rng) const = 0;
    virtual int side() const = 0;
    virtual int channels() const = 0;
};

struct AssemblerConfig {
    AssembleMode mode = AssembleMode::PadisStochastic;
    int n = 0;
    int p = 0;
    int overlap = 8;  // overlap_* modes only; must be < p
    int threads = 1;
};

struct PatchAssembler : CanvasAssembler {
    AssemblerConfig cfg;
    const ScoreModel* model;
    Partition part;
    PositionalGrid grid;

    PatchAssembler(AssemblerConfig cfg_, const ScoreModel* model_);

    SweepResult sweep(const Image& canvas, double sigma, RandomStream& rng) const override;
    int side() const override { return cfg.n + 2 * part.m; }
    int channels() const override { return model->channels(); }
};

// Whole-canvas oracle binding: one model call over the full canvas.
struct WholeCanvasAssembler : CanvasAssembler {
    const ScoreModel* model;
    int canvas_side;

    WholeCanvasAssembler(const ScoreModel* model_, int canvas_side_)
        : model(model_), canvas_side(canvas_side_) {}

    SweepResult sweep(const Image& canvas, double sigma, RandomStream& rng) const override;
    int side() const override { return canvas_side; }
    int channels() const override { return model->channels(); }
};

}  // namespace padis
