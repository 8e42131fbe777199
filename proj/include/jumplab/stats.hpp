#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

namespace jumplab {

/// Streaming mean/variance for a fixed number of channels (Welford, Chan merge).
class MomentAccumulator {
public:
    MomentAccumulator() = default;
    explicit MomentAccumulator(int channels)
        : mean_(Eigen::VectorXd::Zero(channels)), m2_(Eigen::VectorXd::Zero(channels)) {}

    int channels() const { return static_cast<int>(mean_.size()); }
    std::uint64_t count() const { return n_; }

    template <class Vec>
    void add(const Vec& x) {
        ++n_;
        const double inv = 1.0 / static_cast<double>(n_);
        for (Eigen::Index c = 0; c < mean_.size(); ++c) {
            const double delta = x[c] - mean_(c);
            mean_(c) += delta * inv;
            m2_(c) += delta * (x[c] - mean_(c));
        }
    }

    void merge(const MomentAccumulator& other);

    const Eigen::VectorXd& mean() const { return mean_; }
    /// Unbiased sample variance per channel (0 when fewer than two samples).
    Eigen::VectorXd variance() const;
    /// Sample standard deviation divided by sqrt(n).
    Eigen::VectorXd stderr_of_mean() const;

private:
    std::uint64_t n_ = 0;
    Eigen::VectorXd mean_;
    Eigen::VectorXd m2_;
};

/// Monte Carlo mean with standard error, sample count and the seed that produced it.
struct EstimatorResult {
    Eigen::VectorXd mean;
    Eigen::VectorXd stderr;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;

    double value(int channel = 0) const { return mean(channel); }
    double error(int channel = 0) const { return stderr(channel); }

    static EstimatorResult from(const MomentAccumulator& acc, std::uint64_t seed);
    /// Single channel view.
    EstimatorResult channel(int c) const;
};

/// sqrt(a^2 + b^2), the combined standard error used by every two-sided check.
inline double combined_sigma(double a, double b) { return std::hypot(a, b); }

}  // namespace jumplab
