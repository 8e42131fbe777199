#include "jumplab/drift.hpp"

#include "jumplab/error.hpp"
#include "jumplab/rng.hpp"

#include <cmath>

namespace jumplab {

DriftField::DriftField(BoundedTanhDrift d) : variant_(std::move(d)) {
    const auto& tanh = std::get<BoundedTanhDrift>(variant_);
    require(tanh.kappa.size() > 0, "(H4) tanh drift needs at least one component");
    require(tanh.weights.rows() == tanh.kappa.size() && tanh.weights.cols() == tanh.kappa.size(),
            "(H4) tanh drift weights must be a square matrix matching kappa");
    require(tanh.kappa.allFinite() && tanh.weights.allFinite(), "(H4) tanh drift parameters must be finite");
    const double spectral = Eigen::JacobiSVD<Eigen::MatrixXd>(tanh.weights).singularValues()(0);
    lip_bound_ = tanh.kappa.cwiseAbs().maxCoeff() * spectral;
}

DriftField DriftField::random_tanh(int dim, double lipschitz, std::uint64_t seed) {
    require(dim > 0, "dimension must be positive");
    require(lipschitz >= 0.0, "(H4) Lipschitz target must be nonnegative");
    Stream stream(seed, experiment_id("drift-weights"), static_cast<std::uint32_t>(dim));
    Eigen::MatrixXd w(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            w(i, j) = stream.normal();
        }
    }
    w /= Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0);
    Eigen::VectorXd kappa(dim);
    for (int i = 0; i < dim; ++i) {
        kappa(i) = (i % 2 == 0) ? lipschitz : -lipschitz;
    }
    return DriftField(BoundedTanhDrift{kappa, w});
}

double DriftField::sup_norm() const {
    if (const auto* d = std::get_if<BoundedTanhDrift>(&variant_)) {
        return d->kappa.norm();
    }
    return 0.0;
}

void DriftField::eval(const HVector& x, HVector& out) const {
    out.resize(x.size());
    if (const auto* d = std::get_if<BoundedTanhDrift>(&variant_)) {
        out.noalias() = d->weights * x;
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            out(i) = d->kappa(i) * std::tanh(out(i));
        }
    } else {
        out.setZero();
    }
}

HVector DriftField::eval(const HVector& x) const {
    HVector out;
    eval(x, out);
    return out;
}

void DriftField::jacobian(const HVector& x, Eigen::MatrixXd& out) const {
    out.resize(x.size(), x.size());
    if (const auto* d = std::get_if<BoundedTanhDrift>(&variant_)) {
        const Eigen::VectorXd pre = d->weights * x;
        for (Eigen::Index i = 0; i < pre.size(); ++i) {
            const double th = std::tanh(pre(i));
            out.row(i) = d->kappa(i) * (1.0 - th * th) * d->weights.row(i);
        }
    } else {
        out.setZero();
    }
}

Eigen::MatrixXd DriftField::jacobian(const HVector& x) const {
    Eigen::MatrixXd out;
    jacobian(x, out);
    return out;
}

void DriftField::jacobian_apply(const HVector& x, const HVector& v, HVector& out) const {
    out.resize(x.size());
    if (const auto* d = std::get_if<BoundedTanhDrift>(&variant_)) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double th = std::tanh(d->weights.row(i).dot(x));
            out(i) = d->kappa(i) * (1.0 - th * th) * d->weights.row(i).dot(v);
        }
    } else {
        out.setZero();
    }
}

void DriftField::validate(const SpectralModel& model) const {
    if (const auto* d = std::get_if<BoundedTanhDrift>(&variant_)) {
        require(d->kappa.size() == model.dim(), "(H4) drift dimension does not match the model");
    }
}

}  // namespace jumplab
