#pragma once

#include "jumplab/malliavin.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jumplab {

struct DecayFit {
    double rate = 0.0;
    double prefactor = 0.0;
    /// Checkpoints that entered the fit.
    int points = 0;
};

/// Values over checkpoints with a log-linear fit of the tail.
struct DecayCurve {
    std::vector<double> checkpoints;
    std::vector<double> values;
    std::vector<double> stderrs;
    DecayFit fit;
};

/// Index of the first checkpoint after the burn-in (the first 20%, rounded down).
std::size_t burn_in_index(std::size_t checkpoints);

/// Weighted least squares of log(value) on t past the burn-in, weights
/// 1 / (rel^2 + 1e-6) with rel = stderr / value. Values that are not positive
/// or have stderr > value / 3 are skipped. Fewer than two usable points give
/// rate NaN.
DecayFit fit_decay(std::span<const double> t, std::span<const double> values, std::span<const double> stderrs);

/// E|X_t^x - X_t^y| under synchronous coupling at each checkpoint.
DecayCurve contraction_curve(const Dynamics& dyn, const HVector& x, const HVector& y,
                             std::span<const double> checkpoints, const McOptions& opts,
                             std::string_view experiment);

/// exp((-gamma_1 + ||F||_Lip) t) |x - y|.
double contraction_bound(const Dynamics& dyn, const HVector& x, const HVector& y, double t);

/// How the two laws are sampled for the TV estimate. Coupled drives both
/// starting points with the same noise, which removes most of the sampling
/// noise from the difference; Independent uses unrelated paths.
enum class TvCoupling { Coupled, Independent };

struct TvOptions {
    TvCoupling coupling = TvCoupling::Coupled;
    int dictionary = 32;
    double frequency_scale = 1.5;
    int bins = 64;
    int bootstrap = 200;
};

/// Lower estimates of sup_{|f| <= 1} |P_t f(x) - P_t f(y)|:
/// (a) max over a cosine dictionary of |mean f(X) - mean f(Y)|,
/// (b) sum |p_x - p_y| over a common histogram of <e_1, X_t>.
struct TvEstimate {
    double t = 0.0;
    double value = 0.0;
    double stderr = 0.0;
    double dictionary = 0.0;
    double histogram = 0.0;
};

std::vector<TvEstimate> tv_lower_bound(const Dynamics& dyn, const HVector& x, const HVector& y,
                                       std::span<const double> checkpoints, const McOptions& opts,
                                       std::string_view experiment, const TvOptions& tv = {});

/// r* = Lambda (gamma_1 - L) / (Lambda + gamma_1 - L).
double tv_rate(const Dynamics& dyn);

struct TvDecayResult {
    DecayCurve curve;
    std::vector<TvEstimate> estimates;
    double r_star = 0.0;
    double separation = 0.0;
    std::size_t calibration_index = 0;
    double calibration_c = 0.0;
    std::vector<double> bounds;
    std::vector<bool> below;
    /// (1/t) int_0^t ||Q^{-1} S||^2 at the last checkpoint.
    double q_growth = 0.0;
    double rate_tolerance = 0.1;

    bool bound_ok() const;
    bool rate_ok() const { return curve.fit.rate >= r_star - rate_tolerance; }
    bool passed() const { return bound_ok() && rate_ok(); }
};

/// Calibrates C at the first post-burn-in checkpoint and checks every
/// estimate against C (1 + |x - y|) exp(-r* t) (up to 3 bootstrap stderrs)
/// and the fitted rate against r* - rate_tolerance.
TvDecayResult tv_decay_experiment(const Dynamics& dyn, const HVector& x, const HVector& y,
                                  std::span<const double> checkpoints, const McOptions& opts,
                                  std::string_view experiment, const TvOptions& tv = {},
                                  double rate_tolerance = 0.1);

/// The displayed gradient bound
/// 2 |f|_inf { sqrt(6 (int |z|^2 rho dmu / Lambda^2) (|grad F|^2 Gamma_t + int_0^t |Q^{-1}S|^2) / t^2)
///             + int |grad rho| dmu / (gamma_1 - |grad F|) }.
double gradient_bound_rhs(const Dynamics& dyn, const TestFunction& f, double t);

struct GradientBoundRow {
    double t = 0.0;
    double sup_abs = 0.0;
    double sup_stderr = 0.0;
    int argmax_probe = 0;
    double rhs = 0.0;

    bool ok() const { return sup_abs <= rhs + 3.0 * sup_stderr; }
};

/// Bismut estimates at `probes` random (x, xi) pairs with |xi| = 1; per t the
/// largest |estimate| against the bound.
std::vector<GradientBoundRow> gradient_bound_check(const Dynamics& dyn, const TestFunction& f,
                                                   std::span<const double> t_grid, int probes,
                                                   const McOptions& opts, std::string_view experiment);

}  // namespace jumplab
