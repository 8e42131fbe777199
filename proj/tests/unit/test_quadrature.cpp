#include "jumplab/error.hpp"
#include "jumplab/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace jumplab {
namespace {

using boost::math::quadrature::gauss_kronrod;

SpectralModel frac(int d, double delta = 0.25) {
    return SpectralModel::fractional(SpectralModel::power_law_gamma(d), delta);
}

// max_k exp(-2 gamma_k u) / q_k^2, evaluated directly.
double sq_norm(const SpectralModel& m, double u) {
    double best = 0.0;
    for (int k = 0; k < m.dim(); ++k) {
        best = std::max(best, std::exp(-2.0 * m.gamma()(k) * u) / (m.q()(k) * m.q()(k)));
    }
    return best;
}

// Every pairwise crossing of exp(-2 gamma_k u) / q_k^2 in (0, t). The envelope
// can only change branch there, so the integrand is smooth in between.
std::vector<double> breakpoints(const SpectralModel& m, double lo, double hi) {
    std::vector<double> pts{lo, hi};
    for (int j = 0; j < m.dim(); ++j) {
        for (int k = j + 1; k < m.dim(); ++k) {
            const double dg = m.gamma()(k) - m.gamma()(j);
            if (dg > 0.0) {
                const double u = std::log(m.q()(j) / m.q()(k)) / dg;
                if (u > lo && u < hi) {
                    pts.push_back(u);
                }
            }
        }
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

template <class F>
double piecewise_gk(F f, const std::vector<double>& pts, double tol) {
    double sum = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        sum += gauss_kronrod<double, 31>::integrate(f, pts[i - 1], pts[i], 8, tol);
    }
    return sum;
}

double oracle_integral(const SpectralModel& m, double t) {
    return piecewise_gk([&](double u) { return sq_norm(m, u); }, breakpoints(m, 0.0, t), 1e-14);
}

double oracle_gamma(const SpectralModel& m, double lip, double t) {
    const double kappa = m.gamma_min() - lip;
    auto inner = [&](double s) {
        // Substituting u = s - r puts the kinks of the inner integrand at the crossings.
        return piecewise_gk([&](double u) { return sq_norm(m, u) * std::exp(-2.0 * kappa * (s - u)); },
                            breakpoints(m, 0.0, s), 1e-12);
    };
    return piecewise_gk([&](double s) { return s * inner(s); }, breakpoints(m, 0.0, t), 1e-10);
}

TEST(Envelope, MatchesPointwiseMaximum) {
    const auto m = frac(16);
    const auto pieces = q_inv_semigroup_sq_envelope(m, 5.0);
    ASSERT_FALSE(pieces.empty());
    EXPECT_EQ(pieces.front().from, 0.0);
    EXPECT_EQ(pieces.back().to, 5.0);
    for (std::size_t i = 1; i < pieces.size(); ++i) {
        EXPECT_EQ(pieces[i].from, pieces[i - 1].to);
    }
    for (const auto& p : pieces) {
        for (double w : {0.0, 0.3, 0.7, 1.0}) {
            const double u = p.from + w * (p.to - p.from);
            EXPECT_NEAR(std::exp(p.log_scale - p.rate * u), sq_norm(m, u), 1e-13 * sq_norm(m, u));
        }
    }
}

TEST(QInvIntegral, MatchesAdaptiveQuadrature) {
    for (int d : {1, 4, 32}) {
        const auto m = frac(d);
        for (double t : {0.1, 1.0, 4.0, 16.0}) {
            const double oracle = oracle_integral(m, t);
            EXPECT_NEAR(q_inv_semigroup_sq_integral(m, t), oracle, 1e-10 * oracle) << d << " " << t;
        }
    }
}

TEST(QGrowth, DecreasingForFractionalLink) {
    for (double delta : {0.1, 0.25, 0.45}) {
        const auto m = frac(8, delta);
        double prev = INFINITY;
        for (int k = 0; k <= 60; ++k) {
            const double t = 1.0 + 15.0 * k / 60.0;
            const double g = q_growth(m, t);
            EXPECT_LT(g, prev);
            prev = g;
        }
    }
}

TEST(GammaT, MatchesNestedAdaptiveQuadrature) {
    for (int d : {1, 4}) {
        const auto m = frac(d);
        for (double lip : {0.0, 0.3}) {
            for (double t : {1.0, 2.0, 4.0}) {
                const double oracle = oracle_gamma(m, lip, t);
                EXPECT_NEAR(gamma_t(m, lip, t), oracle, 1e-5 * oracle) << d << " " << lip << " " << t;
            }
        }
    }
}

TEST(GammaT, GrowsWithTruncation) {
    double prev = 0.0;
    for (int d : {2, 4, 8, 16}) {
        const double g = gamma_t(frac(d), 0.3, 1.0);
        EXPECT_GT(g, prev);
        prev = g;
    }
}

TEST(GammaT, RejectsNonPositiveTime) {
    EXPECT_THROW(gamma_t(frac(4), 0.3, 0.0), DomainError);
}

}  // namespace
}  // namespace jumplab
