#pragma once

#include "jumplab/malliavin.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace jumplab {

/// Marks shifted by eps v (v deterministic, so the w2-conditioning is vacuous).
struct GirsanovScenario {
    double epsilon = 0.1;
    HVector v;
    JumpDensity density;
    double horizon = 1.0;
};

/// lambda^eps(z) = phi(z, eps v) rho(z + eps v) / rho(z).
double lambda_ratio(const GirsanovScenario& sc, const SpectralModel& model, const HVector& z,
                    CmSign sign = CmSign::Corrected);

/// Z_t as the product of lambda^eps over primary jumps up to t, summed in log space.
/// The exponential compensator vanishes because int lambda^eps rho dmu = Lambda.
double girsanov_weight(const GirsanovScenario& sc, const SpectralModel& model, const JumpPath& path, double t,
                       CmSign sign = CmSign::Corrected);

/// Each primary mark up to t replaced by z_i + eps v.
JumpPath perturbed_path(const GirsanovScenario& sc, const JumpPath& path, double t);

/// E[Z_t g(L^{1,eps}_t)] against E[g(L^1_t)] on common paths, plus E[Z_t].
struct ReweightResult {
    EstimatorResult weighted;
    EstimatorResult reference;
    EstimatorResult z_mean;
};

ReweightResult reweight_check(const GirsanovScenario& sc, const SpectralModel& model, const TestFunction& g,
                              double t, const McOptions& opts, std::string_view experiment,
                              CmSign sign = CmSign::Corrected);

struct ZMomentRow {
    double epsilon = 0.0;
    EstimatorResult second_moment;
};

/// E[((Z_t^eps - 1) / eps)^2] for each eps on common paths, and E[M_t^2] for
/// V = v on the same paths (the eps -> 0 limit).
struct ZMomentSweep {
    std::vector<ZMomentRow> rows;
    EstimatorResult m_squared;

    double max_estimate() const;
    double median_estimate() const;
    /// Every estimate finite and max <= 10 * median.
    bool bounded() const;
};

ZMomentSweep z_moment_sweep(const GirsanovScenario& sc, const SpectralModel& model, double t,
                            const McOptions& opts, std::span<const double> eps_grid, std::string_view experiment,
                            CmSign sign = CmSign::Corrected);

/// Monte Carlo quadrature of int (lambda^eps - 1) rho dmu over draws from mu.
EstimatorResult compensator_vanishing(const GirsanovScenario& sc, const SpectralModel& model,
                                      const McOptions& opts, std::string_view experiment,
                                      CmSign sign = CmSign::Corrected);

}  // namespace jumplab
