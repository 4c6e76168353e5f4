#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "padis/config.hpp"
#include "padis/experiment.hpp"
#include "padis/image_io.hpp"

using namespace padis;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.is_open());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config files: key=value, comments, include directive, overrides") {
    TempDir dir("padis_cfg_test");
    {
        std::ofstream base(dir.path / "base.cfg");
        base << "# base settings\n"
             << "problem = ct20\n"
             << "n = 32\n"
             << "steps = 50   # inline comment\n";
        std::ofstream top(dir.path / "top.cfg");
        top << "include base.cfg\n"
            << "steps = 75\n"
            << "sampler = langevin\n";
    }
    ExperimentConfig cfg = ExperimentConfig::from_file((dir.path / "top.cfg").string());
    CHECK(cfg.problem == ProblemKind::Ct20);
    CHECK(cfg.n == 32);
    CHECK(cfg.steps == 75);  // later key wins over the include
    CHECK(cfg.sampler == SamplerKind::Langevin);

    cfg.apply_override("steps", "99");
    CHECK(cfg.steps == 99);
    CHECK_THROWS_AS(cfg.apply_override("no_such_key", "1"), std::invalid_argument);
    CHECK_THROWS_AS(cfg.apply_override("oracle", "maybe"), std::invalid_argument);

    {
        std::ofstream bad(dir.path / "bad.cfg");
        bad << "steps\n";
    }
    CHECK_THROWS_AS(ExperimentConfig::from_file((dir.path / "bad.cfg").string()),
                    std::invalid_argument);
}

TEST_CASE("per-problem defaults: schedule endpoints, admm lambda, measurement noise") {
    ExperimentConfig cfg;
    cfg.problem = ProblemKind::Ct20;
    CHECK(cfg.effective_sigma_max() == 10.0);
    CHECK(cfg.effective_sigma_min() == 0.002);
    CHECK(cfg.effective_admm_lambda() == 0.001);
    CHECK(cfg.measurement_noise() == 0.0);

    cfg.problem = ProblemKind::Ct8;
    CHECK(cfg.effective_sigma_min() == 0.003);
    CHECK(cfg.effective_sigma_max() == 10.0);

    cfg.problem = ProblemKind::Deblur9;
    CHECK(cfg.effective_sigma_max() == 40.0);
    CHECK(cfg.effective_sigma_min() == 0.005);
    CHECK(cfg.effective_admm_lambda() == 0.002);
    CHECK(cfg.measurement_noise() == 0.01);

    cfg.problem = ProblemKind::Sr4;
    CHECK(cfg.effective_sigma_min() == 0.01);
    CHECK(cfg.effective_admm_lambda() == 0.006);
    CHECK(cfg.measurement_noise() == 0.01);

    cfg.sigma_min = 0.1;
    CHECK(cfg.effective_sigma_min() == 0.1);  // explicit value wins

    CHECK(parse_patch_sizes("16:0.7,12:0.3") ==
          std::vector<std::pair<int, double>>{{16, 0.7}, {12, 0.3}});
    CHECK(parse_int_list("8,16,32") == std::vector<int>{8, 16, 32});
    CHECK_THROWS_AS(parse_patch_sizes("16"), std::invalid_argument);
}

TEST_CASE("phantom synthesis: determinism, range, ellipse count distribution") {
    TempDir dir("padis_synth_test");
    run_synth("ct_phantom", 6, 32, 9, (dir.path / "a").string());
    run_synth("ct_phantom", 6, 32, 9, (dir.path / "b").string());
    for (int i = 0; i < 6; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05d.pgm", i);
        CHECK(slurp(dir.path / "a" / name) == slurp(dir.path / "b" / name));
    }
    CHECK(fs::exists(dir.path / "a" / "manifest.txt"));

    std::vector<Image> imgs = load_dataset((dir.path / "a").string());
    REQUIRE(imgs.size() == 6);
    for (const Image& img : imgs)
        for (double v : img.v) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }

    // drawn ellipse counts are uniform over [min,max]
    PhantomConfig pcfg;
    pcfg.n = 16;
    pcfg.min_ellipses = 3;
    pcfg.max_ellipses = 8;
    std::map<int, int> counts;
    int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        RandomStream rng(mix_seed(3030, i));
        PhantomInfo info;
        make_phantom(pcfg, rng, &info);
        counts[info.ellipses]++;
    }
    for (int k = 3; k <= 8; ++k)
        CHECK(std::abs(counts[k] / double(draws) - 1.0 / 6) < 0.02);

    // texture kind round-trips too
    run_synth("texture", 2, 32, 1, (dir.path / "t").string());
    CHECK(load_dataset((dir.path / "t").string()).size() == 2);
    CHECK_THROWS_AS(run_synth("nope", 1, 32, 1, (dir.path / "x").string()), std::invalid_argument);
}

TEST_CASE("canvas prior estimation") {
    std::vector<Image> canvases;
    for (double v : {0.2, 0.4, 0.6}) canvases.push_back(Image(6, 6, 1, v));
    GaussianPrior prior = estimate_canvas_prior(canvases, 1e-6);
    for (double v : prior.mean.v) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));
    double want_var = ((0.2 - 0.4) * (0.2 - 0.4) + 0.0 + (0.6 - 0.4) * (0.6 - 0.4)) / 3.0;
    for (double v : prior.var.v) CHECK(v == doctest::Approx(want_var).epsilon(1e-12));
}

TEST_CASE("oracle reconstruction experiment: schema, determinism, problem errors") {
    TempDir dir("padis_exp_test");
    run_synth("ct_phantom", 8, 16, 4, (dir.path / "data").string());

    ExperimentConfig cfg;
    cfg.problem = ProblemKind::Ct20;
    cfg.n = 16;
    cfg.patch = 8;
    cfg.steps = 60;
    cfg.sigma_max = 3.0;  // smoke-test schedule
    cfg.sigma_min = 0.01;
    cfg.count = 2;
    cfg.oracle = true;
    cfg.dataset = (dir.path / "data").string();
    cfg.train_dataset = cfg.dataset;
    cfg.out = (dir.path / "out1").string();
    cfg.admm_iters = 10;
    cfg.seed = 31;

    ExperimentResult res = run_reconstruct(cfg);
    CHECK(res.mean_psnr > 5.0);

    std::string csv = slurp(dir.path / "out1" / "metrics.csv");
    CHECK(csv.rfind("image_id,method,psnr,ssim\n", 0) == 0);
    // 2 images x 3 methods + 3 mean rows
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + 2 * 3 + 3);
    CHECK(csv.find("mean,padis,") != std::string::npos);
    CHECK(csv.find(",naive,") != std::string::npos);
    CHECK(csv.find(",admm_tv,") != std::string::npos);
    CHECK(fs::exists(dir.path / "out1" / "recon_000_padis.pgm"));
    CHECK(fs::exists(dir.path / "out1" / "trace_001_padis.csv"));

    // byte-identical rerun
    cfg.out = (dir.path / "out2").string();
    run_reconstruct(cfg);
    CHECK(slurp(dir.path / "out1" / "metrics.csv") == slurp(dir.path / "out2" / "metrics.csv"));
    CHECK(slurp(dir.path / "out1" / "recon_000_padis.pgm") ==
          slurp(dir.path / "out2" / "recon_000_padis.pgm"));
    CHECK(slurp(dir.path / "out1" / "trace_000_padis.csv") ==
          slurp(dir.path / "out2" / "trace_000_padis.csv"));

    // ddnm on deblurring has no pseudo-inverse: config error
    cfg.problem = ProblemKind::Deblur9;
    cfg.sampler = SamplerKind::Ddnm;
    cfg.out = (dir.path / "out3").string();
    CHECK_THROWS_AS(run_reconstruct(cfg), std::invalid_argument);

    // generation smoke with moment report
    ExperimentConfig gen = cfg;
    gen.problem = ProblemKind::Generate;
    gen.sampler = SamplerKind::Padis;
    gen.count = 3;
    gen.steps = 12;
    gen.out = (dir.path / "gen").string();
    run_generate(gen);
    CHECK(fs::exists(dir.path / "gen" / "gen_002.pgm"));
    CHECK(fs::exists(dir.path / "gen" / "moments.csv"));
}

TEST_CASE("sampler-axis ablation produces one row per sampler") {
    TempDir dir("padis_ablate_test");
    run_synth("ct_phantom", 4, 16, 6, (dir.path / "data").string());

    ExperimentConfig cfg;
    cfg.problem = ProblemKind::Ct20;
    cfg.n = 16;
    cfg.patch = 8;
    cfg.steps = 8;
    cfg.count = 1;
    cfg.oracle = true;
    cfg.dataset = (dir.path / "data").string();
    cfg.train_dataset = cfg.dataset;
    cfg.out = (dir.path / "out").string();
    cfg.baselines = false;
    cfg.seed = 77;

    run_ablate(cfg, "sampler");
    std::string csv = slurp(dir.path / "out" / "ablate_sampler.csv");
    CHECK(csv.find("sampler,padis,") != std::string::npos);
    CHECK(csv.find("sampler,langevin,") != std::string::npos);
    CHECK(csv.find("sampler,pc,") != std::string::npos);
    CHECK(csv.find("sampler,ddnm,") != std::string::npos);

    CHECK_THROWS_AS(run_ablate(cfg, "bogus"), std::invalid_argument);
}
