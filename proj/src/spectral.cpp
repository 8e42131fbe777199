#include "jumplab/spectral.hpp"

#include "jumplab/error.hpp"
#include "jumplab/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace jumplab {

SpectralModel::SpectralModel(std::vector<double> gamma, std::vector<double> q) {
    require(!gamma.empty(), "spectral model needs at least one mode");
    require(gamma.size() == q.size(), "gamma and q must have the same length");
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        require(std::isfinite(gamma[k]) && gamma[k] > 0.0,
                "(H3) gamma_" + std::to_string(k + 1) + " must be positive");
        if (k > 0) {
            require(gamma[k] >= gamma[k - 1], "(H3) gamma must be nondecreasing");
        }
        require(std::isfinite(q[k]) && q[k] > 0.0,
                "covariance eigenvalue q_" + std::to_string(k + 1) + " must be positive");
    }
    gamma_ = Eigen::Map<const Eigen::VectorXd>(gamma.data(), static_cast<Eigen::Index>(gamma.size()));
    q_ = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
}

SpectralModel SpectralModel::fractional(std::vector<double> gamma, double delta) {
    require(delta > 0.0 && delta < 0.5, "fractional link needs delta in (0, 1/2)");
    std::vector<double> q(gamma.size());
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        q[k] = std::pow(gamma[k], -delta);
    }
    SpectralModel model(std::move(gamma), std::move(q));
    model.frac_delta_ = delta;
    return model;
}

std::vector<double> SpectralModel::power_law_gamma(int dim, double scale, double power) {
    require(dim > 0, "dimension must be positive");
    std::vector<double> gamma(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
        gamma[static_cast<std::size_t>(k)] = scale * std::pow(static_cast<double>(k + 1), power);
    }
    return gamma;
}

HVector semigroup_apply(const SpectralModel& model, double t, const HVector& x) {
    require(t >= 0.0, "semigroup time must be nonnegative");
    require(x.size() == model.dim(), "vector dimension does not match the model");
    return semigroup_diagonal(model, t).cwiseProduct(x);
}

Eigen::VectorXd semigroup_diagonal(const SpectralModel& model, double t) {
    require(t >= 0.0, "semigroup time must be nonnegative");
    return (-model.gamma() * t).array().exp().matrix();
}

Eigen::VectorXd semigroup_integral(const SpectralModel& model, double h) {
    require(h > 0.0, "quadrature step must be positive");
    Eigen::VectorXd out(model.dim());
    for (int k = 0; k < model.dim(); ++k) {
        const double x = model.gamma()(k) * h;
        if (x < 1e-8) {
            // h (1 - x/2 + x^2/6)
            out(k) = h * (1.0 - x / 2.0 + x * x / 6.0);
        } else {
            out(k) = -std::expm1(-x) / model.gamma()(k);
        }
    }
    return out;
}

double rkhs_inner(const SpectralModel& model, const HVector& x, const HVector& y) {
    require(x.size() == model.dim() && y.size() == model.dim(),
            "vector dimension does not match the model");
    return (x.array() * y.array() / model.q().array()).sum();
}

double cm_log_density(const SpectralModel& model, const HVector& z, const HVector& h,
                      CmSign sign) {
    return linear_sign(sign) * rkhs_inner(model, h, z) - 0.5 * rkhs_inner(model, h, h);
}

double cm_density(const SpectralModel& model, const HVector& z, const HVector& h, CmSign sign) {
    return std::exp(cm_log_density(model, z, h, sign));
}

HVector sample_mu(const SpectralModel& model, Stream& stream) {
    HVector z(model.dim());
    sample_mu_into(model, stream, z);
    return z;
}

void sample_mu_into(const SpectralModel& model, Stream& stream, HVector& out) {
    out.resize(model.dim());
    for (int k = 0; k < model.dim(); ++k) {
        out(k) = std::sqrt(model.q()(k)) * stream.normal();
    }
}

double frac_power_norm(const SpectralModel& model, double delta, double t) {
    require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 1/2)");
    require(t > 0.0, "time must be positive");
    double best = 0.0;
    for (int k = 0; k < model.dim(); ++k) {
        const double g = model.gamma()(k);
        best = std::max(best, std::exp(delta * std::log(g) - g * t));
    }
    return best;
}

double frac_power_bound(double delta, double t) {
    require(delta > 0.0 && delta < 0.5, "delta must lie in (0, 1/2)");
    require(t > 0.0, "time must be positive");
    return std::pow(delta / std::numbers::e, delta) * std::pow(t, -delta);
}

double q_inv_semigroup_norm(const SpectralModel& model, double u) {
    require(u >= 0.0, "time must be nonnegative");
    double best = 0.0;
    for (int k = 0; k < model.dim(); ++k) {
        best = std::max(best, std::exp(-model.gamma()(k) * u) / model.q()(k));
    }
    return best;
}

}  // namespace jumplab
