#pragma once

#include "jumplab/spectral.hpp"

#include <vector>

namespace jumplab {

/// One piece of the upper envelope u -> max_k q_k^{-2} exp(-2 gamma_k u):
/// on [from, to] it equals exp(log_scale - rate * u).
struct EnvelopePiece {
    double from = 0.0;
    double to = 0.0;
    double log_scale = 0.0;
    double rate = 0.0;
};

/// Pieces of ||Q^{-1} S(u)||^2 on [0, t].
std::vector<EnvelopePiece> q_inv_semigroup_sq_envelope(const SpectralModel& model, double t);

/// int_0^t ||Q^{-1} S(u)||^2 du, integrated piece by piece in closed form.
double q_inv_semigroup_sq_integral(const SpectralModel& model, double t);

/// (1/t) int_0^t ||Q^{-1} S(u)||^2 du.
double q_growth(const SpectralModel& model, double t);

/// Gamma_t = int_0^t s int_0^s ||Q^{-1} S(s - r)||^2 exp(-2 kappa r) dr ds,
/// kappa = gamma_1 - ||grad F||_inf. The inner integral is closed form on each
/// envelope piece; the outer one is trapezoidal on a grid graded toward 0.
double gamma_t(const SpectralModel& model, double grad_f_sup, double t, int outer_intervals = 4000);

}  // namespace jumplab
