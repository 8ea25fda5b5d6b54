#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmix/initial.hpp"
#include "qmix/kernels.hpp"
#include "qmix/linear.hpp"
#include "qmix/nonlinear.hpp"
#include "qmix/penrose.hpp"

namespace qmix {

struct PenroseSettings {
    double K = 8.0;
    double Lambda = 8.0;
    ScanResolution resolution;
    std::vector<double> nyquist_k;  // |k| values for curve output; empty: argmin and nonzero windings
};

struct LinearSettings {
    double dt = 0.01;
    double T = 20.0;
    GreenOptions green;
};

struct RunConfig {
    int schema = 1;
    int dim = 1;
    VelocityProfile profile = VelocityProfile::gaussian(1, 1.0);
    InteractionKernel kernel = InteractionKernel::zero(1);
    double hbar = 1.0;
    std::vector<double> hbar_set{0.0, 0.25, 0.5, 1.0};
    std::vector<double> hbar_sweep;
    PenroseSettings penrose;
    std::optional<InitialWigner> initial;
    std::vector<Vec> traced;
    LinearSettings linear;
    std::optional<SimConfig> simulation;
    std::string output_dir = "qmix_out";
    std::uint64_t seed = 0;
    std::string canonical;  // sorted compact dump of the input
    std::uint64_t hash = 0;
};

// Parses and validates; throws ConfigError naming the offending field path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

std::uint64_t fnv1a(const std::string& s);
std::string hash_hex(std::uint64_t h);

}  // namespace qmix
