#pragma once

#include "jumplab/spectral.hpp"

#include <variant>
#include <vector>

namespace jumplab {

/// rho(z) = lambda0.
struct ConstantDensity {
    double lambda0 = 1.0;
};

/// rho(z) = lambda0 (1 + eps sin<b, z>), eps in (0, 1).
struct TiltedSineDensity {
    double lambda0 = 1.0;
    double eps = 0.5;
    HVector b;
};

/// Density rho of the jump measure rho(z) mu(dz) relative to the Gaussian mu.
///
/// Both families are bounded, bounded below by a positive constant, and have
/// a bounded gradient, so the jump intensity is finite and marks can be
/// drawn exactly by rejection from mu.
class JumpDensity {
public:
    using Variant = std::variant<ConstantDensity, TiltedSineDensity>;

    JumpDensity(ConstantDensity d);  // NOLINT(google-explicit-constructor)
    JumpDensity(TiltedSineDensity d);  // NOLINT(google-explicit-constructor)

    const Variant& variant() const { return variant_; }
    bool is_constant() const { return std::holds_alternative<ConstantDensity>(variant_); }
    double lambda0() const;

    double rho(const HVector& z) const;
    HVector grad_rho(const HVector& z) const;
    HVector grad_log_rho(const HVector& z) const;
    /// <grad log rho(z), v> without allocating.
    double grad_log_rho_dot(const HVector& z, const HVector& v) const;

    double rho_min() const;
    double rho_max() const;
    /// sup_z |grad rho(z)|.
    double grad_sup() const;
    /// sup_z |grad log rho(z)|.
    double grad_log_sup() const;

    /// Total mass Lambda of rho(z) mu(dz).
    double intensity(const SpectralModel& model) const;
    /// Integral of |z|^2 rho(z) mu(dz).
    double second_moment(const SpectralModel& model) const;
    /// Integral of |grad rho(z)| mu(dz).
    double grad_abs_integral(const SpectralModel& model) const;

    /// Checks dimension against the model.
    void validate(const SpectralModel& model) const;

private:
    Variant variant_;
};

/// One jump of the driving noise.
struct JumpEvent {
    double time = 0.0;
    HVector mark;
};

/// Jumps of L^1 (and of the optional independent part L^2) on (0, horizon].
struct JumpPath {
    double horizon = 0.0;
    std::vector<JumpEvent> events;
    std::vector<JumpEvent> secondary_events;

    /// N^1_t: number of primary jumps with time <= t.
    int count_until(double t) const;
    /// Sum of primary and secondary marks up to time t (the value L_t).
    HVector value_at(double t, int dim) const;
};

struct NoSecondaryNoise {};

/// L^2 as a compound Poisson process with marks mark_scale * (draw from mu).
struct CompoundPoissonNoise {
    double rate = 1.0;
    double mark_scale = 1.0;
};

using SecondaryNoiseSpec = std::variant<NoSecondaryNoise, CompoundPoissonNoise>;

/// m_rho = int z rho(z) mu(dz), g_rho = int grad rho(z) mu(dz).
struct CompensatorMoments {
    HVector m_rho;
    HVector g_rho;
};

double rho_eval(const JumpDensity& density, const HVector& z);
HVector grad_log_rho(const JumpDensity& density, const HVector& z);
double intensity(const JumpDensity& density, const SpectralModel& model);

/// Mark with law rho(z) mu(dz) / Lambda: propose from mu, accept with rho / rho_max.
HVector sample_mark(const JumpDensity& density, const SpectralModel& model, Stream& stream);

/// Compound Poisson path on (0, T]. Secondary jumps come from an independent substream.
JumpPath sample_jump_path(const JumpDensity& density, const SpectralModel& model,
                          const SecondaryNoiseSpec& secondary, double horizon, Stream& stream);

CompensatorMoments compensator_moments(const JumpDensity& density, const SpectralModel& model);

}  // namespace jumplab
