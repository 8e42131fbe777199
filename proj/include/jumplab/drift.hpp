#pragma once

#include "jumplab/spectral.hpp"

#include <cstdint>
#include <variant>

namespace jumplab {

struct ZeroDrift {};

/// F_i(x) = kappa_i tanh(<row_i(W), x>).
struct BoundedTanhDrift {
    Eigen::VectorXd kappa;
    Eigen::MatrixXd weights;
};

/// Bounded, Lipschitz nonlinearity F of the semilinear equation.
///
/// The certified Lipschitz constant is max_i |kappa_i| * ||W||_2, which also
/// bounds the operator norm of the Jacobian everywhere.
class DriftField {
public:
    DriftField() : variant_(ZeroDrift{}) {}
    DriftField(ZeroDrift z) : variant_(z) {}  // NOLINT(google-explicit-constructor)
    DriftField(BoundedTanhDrift d);  // NOLINT(google-explicit-constructor)

    /// Tanh drift with a random Gaussian W normalised to ||W||_2 = 1 and
    /// kappa_i = +-lipschitz (alternating signs), so the certified constant is `lipschitz`.
    static DriftField random_tanh(int dim, double lipschitz, std::uint64_t seed);

    bool is_zero() const { return std::holds_alternative<ZeroDrift>(variant_); }
    const std::variant<ZeroDrift, BoundedTanhDrift>& variant() const { return variant_; }

    /// Certified Lipschitz constant ||F||_Lip (also a bound on sup ||grad F||).
    double lip_bound() const { return lip_bound_; }
    /// sup_x |F(x)|.
    double sup_norm() const;

    void eval(const HVector& x, HVector& out) const;
    HVector eval(const HVector& x) const;
    void jacobian(const HVector& x, Eigen::MatrixXd& out) const;
    Eigen::MatrixXd jacobian(const HVector& x) const;

    /// out = grad F(x) v without forming the matrix.
    void jacobian_apply(const HVector& x, const HVector& v, HVector& out) const;

    void validate(const SpectralModel& model) const;

private:
    std::variant<ZeroDrift, BoundedTanhDrift> variant_;
    double lip_bound_ = 0.0;
};

}  // namespace jumplab
