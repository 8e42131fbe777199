#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace jumplab {

class Stream;

/// Coordinates of a point of the truncated Hilbert space in the eigenbasis e_1..e_d.
using HVector = Eigen::VectorXd;

/// Which sign the Gaussian shift density uses in front of <h, z>_0.
///
/// `Corrected` is exp(-<h,z>_0 - |h|_0^2 / 2), the true density of mu(. + h)
/// with respect to mu. `Paper` flips the linear term and exists only as a
/// negative control; every identity checked by this library fails under it.
enum class CmSign { Corrected, Paper };

/// Coefficient multiplying <h, z>_0 in the exponent: -1 or +1.
constexpr double linear_sign(CmSign sign) { return sign == CmSign::Corrected ? -1.0 : 1.0; }

/// Finite spectral truncation: -A = diag(gamma), Q = diag(q).
///
/// The generator eigenvalues must be positive and nondecreasing, the
/// covariance eigenvalues positive. When built through `fractional`, q is
/// tied to gamma by q_k = gamma_k^{-delta} with delta in (0, 1/2).
class SpectralModel {
public:
    SpectralModel(std::vector<double> gamma, std::vector<double> q);

    static SpectralModel fractional(std::vector<double> gamma, double delta);

    /// gamma_k = scale * k^power for k = 1..dim.
    static std::vector<double> power_law_gamma(int dim, double scale = 1.0, double power = 1.0);

    int dim() const { return static_cast<int>(gamma_.size()); }
    const Eigen::VectorXd& gamma() const { return gamma_; }
    const Eigen::VectorXd& q() const { return q_; }
    std::optional<double> frac_delta() const { return frac_delta_; }

    /// Smallest eigenvalue of -A (the dissipation rate gamma_1).
    double gamma_min() const { return gamma_(0); }
    /// Largest eigenvalue of -A.
    double gamma_max() const { return gamma_(dim() - 1); }

    double trace_q() const { return q_.sum(); }

    /// Q^{-1} x, coordinatewise division by q.
    HVector q_inverse(const HVector& x) const { return x.cwiseQuotient(q_); }

private:
    Eigen::VectorXd gamma_;
    Eigen::VectorXd q_;
    std::optional<double> frac_delta_;
};

/// S(t) x with coordinates exp(-gamma_k t) x_k.
HVector semigroup_apply(const SpectralModel& model, double t, const HVector& x);

/// Diagonal of S(t), i.e. exp(-gamma_k t).
Eigen::VectorXd semigroup_diagonal(const SpectralModel& model, double t);

/// Diagonal of the integral of S(u) over [0, h]: (1 - exp(-gamma_k h)) / gamma_k.
Eigen::VectorXd semigroup_integral(const SpectralModel& model, double h);

/// <x, y>_0 = sum_k x_k y_k / q_k.
double rkhs_inner(const SpectralModel& model, const HVector& x, const HVector& y);

/// Shift density phi(z, h) of the Gaussian reference measure.
double cm_density(const SpectralModel& model, const HVector& z, const HVector& h,
                  CmSign sign = CmSign::Corrected);

/// log phi(z, h).
double cm_log_density(const SpectralModel& model, const HVector& z, const HVector& h,
                      CmSign sign = CmSign::Corrected);

/// Draws from mu: independent centered normals with variances q_k.
HVector sample_mu(const SpectralModel& model, Stream& stream);

/// In-place variant that writes into an already-sized vector.
void sample_mu_into(const SpectralModel& model, Stream& stream, HVector& out);

/// max_k gamma_k^delta exp(-gamma_k t), the operator norm of (-A)^delta S(t).
double frac_power_norm(const SpectralModel& model, double delta, double t);

/// The continuum supremum (delta / e)^delta t^{-delta} that bounds frac_power_norm.
double frac_power_bound(double delta, double t);

/// Operator norm of Q^{-1} S(u): max_k exp(-gamma_k u) / q_k.
double q_inv_semigroup_norm(const SpectralModel& model, double u);

}  // namespace jumplab
