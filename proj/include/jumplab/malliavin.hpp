#pragma once

#include "jumplab/montecarlo.hpp"
#include "jumplab/sde.hpp"

#include <span>
#include <string_view>
#include <variant>

namespace jumplab {

/// V(s) = v.
struct ConstantDir {
    HVector v;
};

/// V(s) = J_s xi along the sample's own Jacobian flow.
struct JacobianDir {
    HVector xi;
};

using PerturbationField = std::variant<ConstantDir, JacobianDir>;

/// V(s); `flow` is required for JacobianDir and ignored otherwise.
HVector perturbation_at(const PerturbationField& V, const JacobianFlow* flow, double s);

/// sup over the grid of |Q^{-1} V(s)|, the admissibility scalar.
double admissibility_sup(const SpectralModel& model, const PerturbationField& V, const JacobianFlow* flow);

/// f(x) = cos(<a, x> + theta).
struct CosineF {
    HVector a;
    double theta = 0.0;
};

struct ConstantF {
    double c = 1.0;
};

/// f(x) = <a, x>. Unbounded; only used where its moments are known in closed form.
struct LinearF {
    HVector a;
};

class TestFunction {
public:
    using Variant = std::variant<CosineF, ConstantF, LinearF>;

    TestFunction(CosineF f) : variant_(std::move(f)) {}  // NOLINT(google-explicit-constructor)
    TestFunction(ConstantF f) : variant_(f) {}  // NOLINT(google-explicit-constructor)
    TestFunction(LinearF f) : variant_(std::move(f)) {}  // NOLINT(google-explicit-constructor)

    const Variant& variant() const { return variant_; }

    double value(const HVector& x) const;
    HVector grad(const HVector& x) const;
    double grad_dot(const HVector& x, const HVector& v) const;
    /// sup |f|; infinite for LinearF.
    double sup_norm() const;
    bool bounded() const { return !std::holds_alternative<LinearF>(variant_); }

private:
    Variant variant_;
};

/// D_V X_t = sum over primary jumps s_i <= t of J_{s_i t} V(s_i).
HVector l1_derivative(const JumpPath& path, const JacobianFlow& flow, const PerturbationField& V, double t);

struct L1DerivativeCheck {
    HVector quotient;
    HVector derivative;

    double discrepancy() const { return (quotient - derivative).norm(); }
};

/// Shifts every primary mark by eps V(s_i), re-solves with the same grid and
/// compares (X^eps_t - X_t) / eps with l1_derivative.
L1DerivativeCheck l1_derivative_fd_check(const Dynamics& dyn, const JumpPath& path, const HVector& x0,
                                         const PerturbationField& V, double t, double eps);

/// M_t = sum_i (s <z_i, Q^{-1} V(s_i)>_ + <grad log rho(z_i), V(s_i)>) - int_0^t <w, V(s)> ds
/// with s = -1 under the corrected sign. The compensator is exact for
/// ConstantDir and trapezoidal on the flow grid for JacobianDir.
double martingale_weight(const SpectralModel& model, const JumpDensity& density, const JumpPath& path,
                         const PerturbationField& V, double t, const JacobianFlow* flow = nullptr,
                         CmSign sign = CmSign::Corrected);

/// lhs = E[<grad f(L_t), D_V L_t>], rhs = -E[f(L_t) M_t], same paths for both.
struct IbpResult {
    EstimatorResult lhs;
    EstimatorResult rhs;
};

IbpResult ibp_check(const Dynamics& dyn, const TestFunction& f, const ConstantDir& V, double t,
                    const McOptions& opts, std::string_view experiment);

/// E[f(X_t^x) 1{N_t >= 1}].
EstimatorResult p1_semigroup(const Dynamics& dyn, const TestFunction& f, const HVector& x, double t,
                             const McOptions& opts, std::string_view experiment);

/// Bismut estimate of the derivative of P_t^1 f at x along xi, one channel per
/// time in `times` (increasing). Per sample: -f(X_t) 1{N>=1} / N * M_t with V(s) = J_s xi.
EstimatorResult bismut_gradient(const Dynamics& dyn, const TestFunction& f, const HVector& x,
                                const HVector& xi, std::span<const double> times, const McOptions& opts,
                                std::string_view experiment);

/// Central difference (P_t^1 f(x + eps xi) - P_t^1 f(x - eps xi)) / (2 eps) with common paths.
EstimatorResult fd_gradient(const Dynamics& dyn, const TestFunction& f, const HVector& x, const HVector& xi,
                            std::span<const double> times, double eps, const McOptions& opts,
                            std::string_view experiment);

/// E[<grad f(X_t), J_t xi> 1{N >= 1}], the pathwise derivative.
EstimatorResult pathwise_gradient(const Dynamics& dyn, const TestFunction& f, const HVector& x,
                                  const HVector& xi, std::span<const double> times, const McOptions& opts,
                                  std::string_view experiment);

struct PoissonMoment {
    double exact = 0.0;
    double bound = 0.0;
};

/// E[1{N >= 1} / N^2] for N ~ Poisson(lambda_t), with the bound 6 / lambda_t^2.
PoissonMoment poisson_inverse_square_moment(double lambda_t);

}  // namespace jumplab
