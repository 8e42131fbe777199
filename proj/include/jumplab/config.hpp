#pragma once

#include "jumplab/convergence.hpp"
#include "jumplab/montecarlo.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jumplab {

struct SpaceConfig {
    int dim = 4;
    /// gamma_k = gamma_scale * k^gamma_power.
    double gamma_scale = 1.0;
    double gamma_power = 1.0;
    /// Fractional link q_k = gamma_k^{-delta}; when absent `q` is used.
    std::optional<double> frac_delta = 0.25;
    std::vector<double> q;

    bool operator==(const SpaceConfig&) const = default;
};

struct NoiseConfig {
    /// "constant" or "tilted_sine".
    std::string density = "tilted_sine";
    double lambda0 = 2.0;
    double eps = 0.5;
    /// Tilt direction; padded with zeros up to dim.
    std::vector<double> b{1.0, 0.5};
    /// "none" or "compound_poisson".
    std::string secondary = "none";
    double secondary_rate = 1.0;
    double secondary_mark_scale = 1.0;

    bool operator==(const NoiseConfig&) const = default;
};

struct DriftConfig {
    /// "zero" or "tanh".
    std::string kind = "tanh";
    double lipschitz = 0.3;
    std::uint64_t weights_seed = 7;

    bool operator==(const DriftConfig&) const = default;
};

struct SimConfig {
    /// 0 selects 1e-3 * min(1, 1 / gamma_d).
    double dt = 1e-3;
    double t = 1.0;
    double fd_eps = 1e-2;
    /// |x - y| for the coupling experiments.
    double separation = 1.0;
    std::vector<double> tv_checkpoints{1.0, 2.0, 4.0, 6.0, 8.0};
    std::vector<double> contraction_checkpoints{0.5, 1.0, 2.0, 4.0};
    std::vector<double> gradient_times{1.0, 2.0, 4.0};

    bool operator==(const SimConfig&) const = default;
};

struct McConfig {
    std::uint64_t samples = 200000;
    std::uint64_t seed = 42;
    unsigned workers = 0;
    std::uint64_t tv_samples = 100000;
    std::uint64_t contraction_samples = 20000;
    std::uint64_t gradient_bound_samples = 20000;
    std::uint64_t jacobian_paths = 10000;
    int probes = 8;
    /// "coupled" or "independent".
    std::string tv_coupling = "coupled";

    bool operator==(const McConfig&) const = default;
};

struct FlagsConfig {
    bool paper_sign = false;

    bool operator==(const FlagsConfig&) const = default;
};

struct ExperimentConfig {
    SpaceConfig space;
    NoiseConfig noise;
    DriftConfig drift;
    SimConfig sim;
    McConfig mc;
    FlagsConfig flags;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Every violated hypothesis, each prefixed with its label, e.g. "(H3) ...".
std::vector<std::string> config_violations(const ExperimentConfig& cfg);

/// Throws DomainError listing all violations, one per line.
void validate_config(const ExperimentConfig& cfg);

/// Parses TOML text; missing keys keep their defaults, unknown keys are errors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// Caps every sample count at n (the TV count is kept at 1e4 or more).
void override_samples(ExperimentConfig& cfg, std::uint64_t n);

SpectralModel build_model(const ExperimentConfig& cfg);
HVector build_tilt(const ExperimentConfig& cfg);
JumpDensity build_density(const ExperimentConfig& cfg);
JumpDensity build_constant_density(const ExperimentConfig& cfg);
JumpDensity build_tilted_density(const ExperimentConfig& cfg);
DriftField build_drift(const ExperimentConfig& cfg, const SpectralModel& model);
Dynamics build_dynamics(const ExperimentConfig& cfg);
McOptions build_mc(const ExperimentConfig& cfg, std::uint64_t samples);
TvOptions build_tv_options(const ExperimentConfig& cfg);

/// The same configuration at another truncation dimension.
ExperimentConfig with_dim(const ExperimentConfig& cfg, int dim);

}  // namespace jumplab
