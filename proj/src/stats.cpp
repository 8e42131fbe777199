#include "jumplab/stats.hpp"

namespace jumplab {

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (other.n_ == 0) {
        return;
    }
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double total = na + nb;
    const Eigen::VectorXd delta = other.mean_ - mean_;
    mean_ += delta * (nb / total);
    m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / total);
    n_ += other.n_;
}

Eigen::VectorXd MomentAccumulator::variance() const {
    if (n_ < 2) {
        return Eigen::VectorXd::Zero(mean_.size());
    }
    return m2_ / static_cast<double>(n_ - 1);
}

Eigen::VectorXd MomentAccumulator::stderr_of_mean() const {
    if (n_ < 2) {
        return Eigen::VectorXd::Zero(mean_.size());
    }
    return (variance() / static_cast<double>(n_)).cwiseSqrt();
}

EstimatorResult EstimatorResult::from(const MomentAccumulator& acc, std::uint64_t seed) {
    return EstimatorResult{acc.mean(), acc.stderr_of_mean(), acc.count(), seed};
}

EstimatorResult EstimatorResult::channel(int c) const {
    return EstimatorResult{mean.segment(c, 1), stderr.segment(c, 1), n, seed};
}

}  // namespace jumplab
