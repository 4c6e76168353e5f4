#include "padis/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace padis {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void parse_into(const std::string& path, std::map<std::string, std::string>& kv, int depth) {
    if (depth > 8) throw std::invalid_argument("config: include nesting too deep at " + path);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.rfind("include ", 0) == 0) {
            std::filesystem::path inc = trim(line.substr(8));
            if (inc.is_relative()) inc = std::filesystem::path(path).parent_path() / inc;
            parse_into(inc.string(), kv, depth + 1);
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key=value, got '" + line + "'");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw std::invalid_argument("config: bad boolean '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::map<std::string, std::string> kv;
    parse_into(path, kv, 0);
    return kv;
}

ProblemKind problem_from_string(const std::string& s) {
    if (s == "ct8") return ProblemKind::Ct8;
    if (s == "ct20") return ProblemKind::Ct20;
    if (s == "ct60") return ProblemKind::Ct60;
    if (s == "deblur9") return ProblemKind::Deblur9;
    if (s == "deblur17") return ProblemKind::Deblur17;
    if (s == "sr4") return ProblemKind::Sr4;
    if (s == "generate") return ProblemKind::Generate;
    throw std::invalid_argument("config: unknown problem '" + s + "'");
}

const char* problem_to_string(ProblemKind p) {
    switch (p) {
        case ProblemKind::Ct8: return "ct8";
        case ProblemKind::Ct20: return "ct20";
        case ProblemKind::Ct60: return "ct60";
        case ProblemKind::Deblur9: return "deblur9";
        case ProblemKind::Deblur17: return "deblur17";
        case ProblemKind::Sr4: return "sr4";
        case ProblemKind::Generate: return "generate";
    }
    return "?";
}

SamplerKind sampler_from_string(const std::string& s) {
    if (s == "padis") return SamplerKind::Padis;
    if (s == "langevin") return SamplerKind::Langevin;
    if (s == "pc") return SamplerKind::Pc;
    if (s == "ddnm") return SamplerKind::Ddnm;
    throw std::invalid_argument("config: unknown sampler '" + s + "'");
}

const char* sampler_to_string(SamplerKind s) {
    switch (s) {
        case SamplerKind::Padis: return "padis";
        case SamplerKind::Langevin: return "langevin";
        case SamplerKind::Pc: return "pc";
        case SamplerKind::Ddnm: return "ddnm";
    }
    return "?";
}

AssembleMode assemble_mode_from_string(const std::string& s) {
    if (s == "padis_stochastic") return AssembleMode::PadisStochastic;
    if (s == "padis_full_average") return AssembleMode::PadisFullAverage;
    if (s == "overlap_average") return AssembleMode::OverlapAverage;
    if (s == "overlap_stitch") return AssembleMode::OverlapStitch;
    throw std::invalid_argument("config: unknown assembler '" + s + "'");
}

void ExperimentConfig::apply_override(const std::string& key, const std::string& value) {
    if (key == "problem") problem = problem_from_string(value);
    else if (key == "n") n = std::stoi(value);
    else if (key == "patch") patch = std::stoi(value);
    else if (key == "sigma_min") sigma_min = std::stod(value);
    else if (key == "sigma_max") sigma_max = std::stod(value);
    else if (key == "steps") steps = std::stoi(value);
    else if (key == "sampler") sampler = sampler_from_string(value);
    else if (key == "assembler") assembler = assemble_mode_from_string(value);
    else if (key == "overlap") overlap = std::stoi(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "zeta") zeta = std::stod(value);
    else if (key == "epsilon") epsilon = std::stod(value);
    else if (key == "corrector_r") corrector_r = std::stod(value);
    else if (key == "clamp_border") clamp_border = parse_bool(value);
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "oracle") oracle = parse_bool(value);
    else if (key == "dataset") dataset = value;
    else if (key == "train_dataset") train_dataset = value;
    else if (key == "count") count = std::stoi(value);
    else if (key == "out") out = value;
    else if (key == "threads") threads = std::stoi(value);
    else if (key == "baselines") baselines = parse_bool(value);
    else if (key == "admm_lambda") admm_lambda = std::stod(value);
    else if (key == "admm_rho") admm_rho = std::stod(value);
    else if (key == "admm_iters") admm_iters = std::stoi(value);
    else if (key == "ct_detectors") ct_detectors = std::stoi(value);
    else if (key == "train_iters") train_iters = std::stoi(value);
    else if (key == "train_batch") train_batch = std::stoi(value);
    else if (key == "lr") lr = std::stod(value);
    else if (key == "ema_halflife") ema_halflife = std::stod(value);
    else if (key == "patch_sizes") patch_sizes = value;
    else if (key == "net_hidden") net_hidden = std::stoi(value);
    else if (key == "net_layers") net_layers = std::stoi(value);
    else if (key == "net_act") net_act = value;
    else if (key == "positional") positional = parse_bool(value);
    else if (key == "train_sigma_min") train_sigma_min = std::stod(value);
    else if (key == "train_sigma_max") train_sigma_max = std::stod(value);
    else if (key == "ablate_patch_sizes") ablate_patch_sizes = value;
    else if (key == "ablate_dataset_sizes") ablate_dataset_sizes = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
    ExperimentConfig cfg;
    for (const auto& [k, v] : kv) cfg.apply_override(k, v);
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_map(parse_config_file(path));
}

double ExperimentConfig::effective_sigma_min() const {
    if (sigma_min > 0.0) return sigma_min;
    switch (problem) {
        case ProblemKind::Ct8: return 0.003;
        case ProblemKind::Ct20:
        case ProblemKind::Ct60: return 0.002;
        case ProblemKind::Deblur9:
        case ProblemKind::Deblur17: return 0.005;
        case ProblemKind::Sr4: return 0.01;
        case ProblemKind::Generate: return 0.002;
    }
    return 0.002;
}

double ExperimentConfig::effective_sigma_max() const {
    if (sigma_max > 0.0) return sigma_max;
    switch (problem) {
        case ProblemKind::Ct8:
        case ProblemKind::Ct20:
        case ProblemKind::Ct60: return 10.0;
        default: return 40.0;
    }
}

double ExperimentConfig::effective_zeta() const {
    if (zeta >= 0.0) return zeta;
    switch (problem) {
        // the CT forward operator is an unnormalized line integral with a
        // spectral norm in the tens; the data step scales with it
        case ProblemKind::Ct8:
        case ProblemKind::Ct20:
        case ProblemKind::Ct60: return 0.03;
        default: return 0.3;
    }
}

double ExperimentConfig::effective_admm_lambda() const {
    if (admm_lambda > 0.0) return admm_lambda;
    switch (problem) {
        case ProblemKind::Deblur9:
        case ProblemKind::Deblur17: return 0.002;
        case ProblemKind::Sr4: return 0.006;
        default: return 0.001;
    }
}

double ExperimentConfig::measurement_noise() const {
    switch (problem) {
        case ProblemKind::Deblur9:
        case ProblemKind::Deblur17:
        case ProblemKind::Sr4: return 0.01;
        default: return 0.0;  // CT corruption is view sparsity, not noise
    }
}

NetConfig ExperimentConfig::net_config() const {
    NetConfig nc;
    nc.image_channels = 1;
    nc.hidden = net_hidden;
    nc.layers = net_layers;
    if (net_act == "silu") nc.act = Act::SiLU;
    else if (net_act == "relu") nc.act = Act::ReLU;
    else throw std::invalid_argument("config: unknown net_act '" + net_act + "'");
    nc.use_positional = positional;
    return nc;
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig tc;
    tc.sigma_min = train_sigma_min;
    tc.sigma_max = train_sigma_max;
    tc.patch_sizes = parse_patch_sizes(patch_sizes);
    tc.batch = train_batch;
    tc.lr = lr;
    tc.ema_halflife_patches = ema_halflife;
    tc.iters = train_iters;
    tc.seed = seed;
    tc.threads = threads;
    return tc;
}

std::vector<std::pair<int, double>> parse_patch_sizes(const std::string& s) {
    std::vector<std::pair<int, double>> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("config: patch_sizes entries must be size:prob");
        out.emplace_back(std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
    if (out.empty()) throw std::invalid_argument("config: empty patch_sizes");
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw std::invalid_argument("config: empty list");
    return out;
}

}  // namespace padis
