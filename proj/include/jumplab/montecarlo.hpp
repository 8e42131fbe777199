#pragma once

#include "jumplab/drift.hpp"
#include "jumplab/jump_noise.hpp"
#include "jumplab/parallel.hpp"
#include "jumplab/rng.hpp"
#include "jumplab/spectral.hpp"
#include "jumplab/stats.hpp"

#include <cstdint>
#include <string_view>

namespace jumplab {

/// Everything that defines the law of X: space, jump measure, drift,
/// secondary noise, the integrator step and the Cameron-Martin sign.
struct Dynamics {
    SpectralModel model;
    JumpDensity density;
    DriftField drift;
    SecondaryNoiseSpec secondary = NoSecondaryNoise{};
    double dt = 1e-3;
    CmSign sign = CmSign::Corrected;
};

struct McOptions {
    std::uint64_t samples = 200000;
    RngPolicy rng;
    unsigned workers = 0;
};

/// Runs `body(stream, out)` once per sample, where `out` is a zeroed vector of
/// `channels` values to fill, and reduces deterministically.
/// The stream of sample i is (seed, experiment_id(experiment), i, primary).
template <class Body>
EstimatorResult monte_carlo(const McOptions& opts, std::string_view experiment, int channels, Body&& body) {
    const std::uint32_t id = experiment_id(experiment);
    const MomentAccumulator identity(channels);
    const MomentAccumulator acc =
        parallel_reduce(static_cast<std::size_t>(opts.samples), opts.workers, identity,
                        [&](std::size_t i, MomentAccumulator& local) {
                            Stream stream = opts.rng.stream(id, i, kPrimaryNoise);
                            Eigen::VectorXd out = Eigen::VectorXd::Zero(channels);
                            body(stream, out);
                            local.add(out);
                        });
    return EstimatorResult::from(acc, opts.rng.master_seed);
}

/// w = sign * Q^{-1} m_rho + g_rho, so that the compensator density of the
/// IBP weight along V is <w, V>. Returns an exact zero vector when the two
/// terms cancel to roundoff (they cancel identically under the corrected sign).
HVector compensator_direction(const SpectralModel& model, const JumpDensity& density, CmSign sign);

}  // namespace jumplab
