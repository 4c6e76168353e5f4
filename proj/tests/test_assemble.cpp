#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "padis/assemble.hpp"
#include "padis/denoiser.hpp"

using namespace padis;

namespace {

PatchProductPrior random_product_prior(const PartitionSpec& spec, RandomStream& rng,
                                       bool identical_factors = false) {
    std::vector<GaussianPrior> factors;
    Image shared_mean = rng.normal_image(spec.p, spec.p, 1);
    Image shared_var(spec.p, spec.p, 1);
    for (double& v : shared_var.v) v = 0.1 + rng.uniform();
    for (int r = 0; r < spec.patch_count(); ++r) {
        if (identical_factors) {
            factors.emplace_back(shared_mean, shared_var);
        } else {
            Image mean = rng.normal_image(spec.p, spec.p, 1);
            Image var(spec.p, spec.p, 1);
            for (double& v : var.v) v = 0.1 + rng.uniform();
            factors.emplace_back(std::move(mean), std::move(var));
        }
    }
    return PatchProductPrior(spec, std::move(factors));
}

struct ConstantModel : ScoreModel {
    double value;
    explicit ConstantModel(double v) : value(v) {}
    int channels() const override { return 1; }
    Image denoise(const Image& x, double, const Image*) const override {
        return Image(x.h, x.w, x.c, value);
    }
    Image vjp(const Image& x, double, const Image*, const Image&) const override {
        return Image(x.h, x.w, x.c);
    }
};

struct WrongShapeModel : ScoreModel {
    int channels() const override { return 1; }
    Image denoise(const Image& x, double, const Image*) const override {
        return Image(x.h + 1, x.w, x.c);
    }
    Image vjp(const Image& x, double, const Image*, const Image&) const override { return x; }
};

}  // namespace

TEST_CASE("assembled score equals the analytic whole-canvas score on the product prior") {
    RandomStream rng(2001);
    PartitionSpec spec = make_spec(10, 4, 2, 1);
    PatchProductPrior prior = random_product_prior(spec, rng);
    GaussianPrior whole = prior.canvas_prior();
    auto patch_model = prior.make_patch_model();
    PositionalGrid grid = make_positional_grid(spec.canvas_side());

    for (int trial = 0; trial < 20; ++trial) {
        double sigma = std::exp(-3.0 + 5.0 * rng.uniform());
        Image x = rng.normal_image(spec.canvas_side(), spec.canvas_side(), 1, 1.5);
        Image got = assembled_score(x, sigma, *patch_model, spec, grid);
        Image want = whole.score(x, sigma);
        CHECK(oracles::rel_err(got, want) < 1e-10);
    }

    // at x = prior mean (zero border) the score vanishes
    Image at_mean = whole.mean;
    Image s0 = assembled_score(at_mean, 0.8, *patch_model, spec, grid);
    for (double v : s0.v) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("swapping equal-factor patches commutes with the assembled score") {
    RandomStream rng(2002);
    PartitionSpec spec = make_spec(8, 3, 1, 1);
    PatchProductPrior prior = random_product_prior(spec, rng, /*identical_factors=*/true);
    auto model = prior.make_patch_model();
    PositionalGrid grid = make_positional_grid(spec.canvas_side());

    Image x = rng.normal_image(spec.canvas_side(), spec.canvas_side(), 1);
    std::vector<PatchLocation> locs = patch_locations(spec);

    Image swapped = x;
    Image p0 = extract_patch(x, locs[0].r0, locs[0].c0, spec.p);
    Image p4 = extract_patch(x, locs[4].r0, locs[4].c0, spec.p);
    scatter_patch(swapped, p4, locs[0].r0, locs[0].c0);
    scatter_patch(swapped, p0, locs[4].r0, locs[4].c0);

    Image s = assembled_score(x, 0.6, *model, spec, grid);
    Image s_swapped = assembled_score(swapped, 0.6, *model, spec, grid);

    Image expect = s;
    Image q0 = extract_patch(s, locs[0].r0, locs[0].c0, spec.p);
    Image q4 = extract_patch(s, locs[4].r0, locs[4].c0, spec.p);
    scatter_patch(expect, q4, locs[0].r0, locs[0].c0);
    scatter_patch(expect, q0, locs[4].r0, locs[4].c0);
    CHECK(oracles::rel_err(s_swapped, expect) < 1e-14);
}

TEST_CASE("stochastic partition score: m=1 determinism and uniform draw reproducibility") {
    RandomStream rng(2003);
    // n=9, p=5 gives k=1, m=1: the only partition
    PartitionSpec spec = make_spec(9, 5, 1, 1);
    PatchProductPrior prior = random_product_prior(spec, rng);
    auto model = prior.make_patch_model();
    PositionalGrid grid = make_positional_grid(spec.canvas_side());
    Image x = rng.normal_image(spec.canvas_side(), spec.canvas_side(), 1);

    RandomStream draw(5);
    StochasticScore st = stochastic_partition_score(x, 0.5, *model, 9, 5, grid, draw);
    CHECK(st.i == 1);
    CHECK(st.j == 1);
    Image direct = assembled_score(x, 0.5, *model, spec, grid);
    CHECK(oracles::rel_err(st.score, direct) < 1e-15);

    RandomStream d1(42), d2(42);
    // m=3 case: n=9, p=4 -> k=2, m=3
    Partition part = make_partition(9, 4);
    CHECK(part.m == 3);
    GaussianPrior canvas_prior(Image(15, 15, 1), Image(15, 15, 1, 0.5));
    GaussianPatchOracle oracle(canvas_prior);
    PositionalGrid grid2 = make_positional_grid(15);
    Image x2 = rng.normal_image(15, 15, 1);
    for (int rep = 0; rep < 10; ++rep) {
        StochasticScore a = stochastic_partition_score(x2, 0.5, oracle, 9, 4, grid2, d1);
        StochasticScore b = stochastic_partition_score(x2, 0.5, oracle, 9, 4, grid2, d2);
        CHECK(a.i == b.i);
        CHECK(a.j == b.j);
    }
}

TEST_CASE("enumerated mean of the stochastic estimate equals the full average") {
    RandomStream rng(2004);
    for (auto [n, p] : {std::pair{9, 4}, std::pair{12, 4}, std::pair{10, 4}}) {
        Partition part = make_partition(n, p);
        REQUIRE(part.m <= 4);
        int side = n + 2 * part.m;
        GaussianPrior canvas_prior(rng.normal_image(side, side, 1), Image(side, side, 1, 0.3));
        GaussianPatchOracle oracle(canvas_prior);
        PositionalGrid grid = make_positional_grid(side);
        Image x = rng.normal_image(side, side, 1);
        double sigma = 0.4;

        Image acc(side, side, 1);
        for (int i = 1; i <= part.m; ++i)
            for (int j = 1; j <= part.m; ++j)
                acc += assembled_score(x, sigma, oracle, make_spec(n, p, i, j), grid);
        acc *= 1.0 / (static_cast<double>(part.m) * part.m);

        Image full = full_average_score(x, sigma, oracle, n, p, grid);
        CHECK(oracles::rel_err(acc, full) < 1e-12);
    }
}

TEST_CASE("assembled denoise: oracle equality, sigma=0 passthrough, tweedie consistency") {
    RandomStream rng(2005);
    PartitionSpec spec = make_spec(10, 4, 2, 2);
    PatchProductPrior prior = random_product_prior(spec, rng);
    GaussianPrior whole = prior.canvas_prior();
    auto model = prior.make_patch_model();
    PositionalGrid grid = make_positional_grid(spec.canvas_side());
    Image x = rng.normal_image(spec.canvas_side(), spec.canvas_side(), 1);

    Image got = assembled_denoise(x, 0.7, *model, spec, grid);
    Image want = whole.denoise(x, 0.7, nullptr);
    // border of the analytic prior (var 0) also denoises to its mean 0
    CHECK(oracles::rel_err(got, want) < 1e-10);

    Image same = assembled_denoise(x, 0.0, *model, spec, grid);
    std::vector<uint8_t> mask = border_mask(spec);
    int side = spec.canvas_side();
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            if (mask[static_cast<size_t>(r) * side + c])
                CHECK(same.at(r, c) == 0.0);
            else
                CHECK(same.at(r, c) == x.at(r, c));
        }

    // bit-level tweedie consistency: the score is derived from the denoised
    // canvas through the same conversion
    Image d = assembled_denoise(x, 0.7, *model, spec, grid);
    Image s = assembled_score(x, 0.7, *model, spec, grid);
    Image via = tweedie_score(d, x, 0.7);
    for (size_t i = 0; i < s.v.size(); ++i) CHECK(s.v[i] == via.v[i]);
}

TEST_CASE("assembled vjp: zero input, oracle blocks, finite differences on a conv net") {
    RandomStream rng(2006);
    PartitionSpec spec = make_spec(10, 4, 1, 2);
    PatchProductPrior prior = random_product_prior(spec, rng);
    auto model = prior.make_patch_model();
    PositionalGrid grid = make_positional_grid(spec.canvas_side());
    int side = spec.canvas_side();
    Image x = rng.normal_image(side, side, 1);
    double sigma = 0.5;

    Image zero(side, side, 1);
    Image vz = assembled_denoise_vjp(x, sigma, *model, spec, grid, zero);
    for (double v : vz.v) CHECK(v == 0.0);

    // oracle: diagonal gain var/(var+sigma^2) on patches, zero on border
    Image v = rng.normal_image(side, side, 1);
    Image got = assembled_denoise_vjp(x, sigma, *model, spec, grid, v);
    GaussianPrior whole = prior.canvas_prior();
    std::vector<uint8_t> mask = border_mask(spec);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            if (mask[static_cast<size_t>(r) * side + c]) {
                CHECK(got.at(r, c) == 0.0);
            } else {
                double gain = whole.var.at(r, c) / (whole.var.at(r, c) + sigma * sigma);
                CHECK(got.at(r, c) == doctest::Approx(gain * v.at(r, c)).epsilon(1e-12));
            }
        }

    // trained-net path: directional finite-difference check through the assembly
    NetConfig ncfg;
    ncfg.hidden = 5;
    ncfg.layers = 2;
    ConvStack net(ncfg);
    net.init_params(rng);
    PatchDenoiser den(net);
    Image u = rng.normal_image(side, side, 1);
    Image jv = oracles::directional_jvp(
        [&](const Image& q) { return assembled_denoise(q, sigma, den, spec, grid); }, x, u, 1e-5);
    double lhs = dot(u, assembled_denoise_vjp(x, sigma, den, spec, grid, v));
    CHECK(oracles::rel_err(lhs, dot(jv, v)) < 1e-3);
}

TEST_CASE("overlap assemblers: zero-overlap equality, constant model, coverage counts") {
    RandomStream rng(2007);
    // canvas side 12 divides by p=4: zero-overlap grid is a plain tiling
    GaussianPrior canvas_prior(rng.normal_image(12, 12, 1), Image(12, 12, 1, 0.4));
    GaussianPatchOracle oracle(canvas_prior);
    PositionalGrid grid = make_positional_grid(12);
    Image x = rng.normal_image(12, 12, 1);

    Image avg = overlap_average_denoise(x, 0.6, oracle, 4, 0, grid);
    Image stitch = overlap_stitch_denoise(x, 0.6, oracle, 4, 0, grid);
    Image direct(12, 12, 1);
    for (const PatchLocation& loc : overlap_grid(12, 4, 0)) {
        Image patch = extract_patch(x, loc.r0, loc.c0, 4);
        Image pos = positional_patch(grid, loc.r0, loc.c0, 4);
        scatter_patch(direct, oracle.denoise(patch, 0.6, &pos), loc.r0, loc.c0);
    }
    CHECK(oracles::rel_err(avg, direct) < 1e-14);
    CHECK(oracles::rel_err(stitch, direct) < 1e-14);

    ConstantModel constant(0.7);
    Image ca = overlap_average_denoise(x, 0.6, constant, 4, 1, grid);
    Image cs = overlap_stitch_denoise(x, 0.6, constant, 4, 1, grid);
    for (double t : ca.v) CHECK(t == doctest::Approx(0.7).epsilon(1e-12));
    for (double t : cs.v) CHECK(t == doctest::Approx(0.7).epsilon(1e-12));

    // P=56 with overlap 8 on a 256 canvas: per-pixel counts are 1, 2, or 4
    std::vector<int> count(256 * 256, 0);
    for (const PatchLocation& loc : overlap_grid(256, 56, 8))
        for (int r = 0; r < 56; ++r)
            for (int c = 0; c < 56; ++c) count[(loc.r0 + r) * 256 + loc.c0 + c]++;
    for (int t : count) CHECK((t == 1 || t == 2 || t == 4));
}

TEST_CASE("loss splitting: whole-canvas dsm loss equals per-patch losses plus the border term") {
    RandomStream rng(2008);
    PartitionSpec spec = make_spec(10, 4, 2, 1);
    int side = spec.canvas_side();
    PositionalGrid grid = make_positional_grid(side);

    NetConfig ncfg;
    ncfg.hidden = 6;
    ncfg.layers = 3;
    ConvStack net(ncfg);
    net.init_params(rng);
    PatchDenoiser den(net);

    double sigma = 0.4;
    // zero-padded clean canvas (zero border) and a general canvas
    Image padded(side, side, 1);
    embed_center(padded, rng.normal_image(10, 10, 1));
    Image general = rng.normal_image(side, side, 1);

    for (const Image& clean : {padded, general}) {
        Image noise = rng.normal_image(side, side, 1, sigma);
        Image noisy = clean + noise;
        Image d = assembled_denoise(noisy, sigma, den, spec, grid);
        Image res = d - clean;
        double whole_loss = dot(res, res);

        double split = 0.0;
        for (const PatchLocation& loc : patch_locations(spec)) {
            Image np = extract_patch(noisy, loc.r0, loc.c0, spec.p);
            Image cp = extract_patch(clean, loc.r0, loc.c0, spec.p);
            Image pos = positional_patch(grid, loc.r0, loc.c0, spec.p);
            Image out = den.denoise(np, sigma, &pos);
            split += dot(out - cp, out - cp);
        }
        BorderRegion border = extract_border(clean, spec);
        for (double v : border.values) split += v * v;  // border denoises to zero

        CHECK(oracles::rel_err(whole_loss, split) < 1e-10);
    }
}

TEST_CASE("patch assembler sweep: reproducible draws, zero border, vjp binding") {
    RandomStream rng(2009);
    AssemblerConfig acfg;
    acfg.n = 9;
    acfg.p = 4;  // m = 3
    GaussianPrior canvas_prior(rng.normal_image(15, 15, 1), Image(15, 15, 1, 0.25));
    GaussianPatchOracle oracle(canvas_prior);
    PatchAssembler assembler(acfg, &oracle);
    CHECK(assembler.side() == 15);

    Image x = rng.normal_image(15, 15, 1);
    RandomStream s1(9), s2(9);
    SweepResult a = assembler.sweep(x, 0.5, s1);
    SweepResult b = assembler.sweep(x, 0.5, s2);
    CHECK(a.part_i == b.part_i);
    CHECK(a.part_j == b.part_j);
    CHECK(oracles::rel_err(a.denoised, b.denoised) == 0.0);

    PartitionSpec spec = make_spec(9, 4, a.part_i, a.part_j);
    std::vector<uint8_t> mask = border_mask(spec);
    for (int r = 0; r < 15; ++r)
        for (int c = 0; c < 15; ++c)
            if (mask[static_cast<size_t>(r) * 15 + c]) CHECK(a.denoised.at(r, c) == 0.0);

    Image v = rng.normal_image(15, 15, 1);
    Image via_sweep = a.vjp(v);
    Image direct = assembled_denoise_vjp(x, 0.5, oracle, spec, assembler.grid, v);
    CHECK(oracles::rel_err(via_sweep, direct) == 0.0);

    WrongShapeModel bad;
    PatchAssembler broken(acfg, &bad);
    RandomStream s3(1);
    CHECK_THROWS_AS(broken.sweep(x, 0.5, s3), std::runtime_error);
}
