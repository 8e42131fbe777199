#include "jumplab/error.hpp"
#include "jumplab/jump_noise.hpp"
#include "jumplab/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace jumplab {
namespace {

SpectralModel model4() { return SpectralModel::fractional(SpectralModel::power_law_gamma(4), 0.25); }

HVector tilt4() {
    HVector b = HVector::Zero(4);
    b(0) = 1.0;
    b(1) = 0.5;
    return b;
}

JumpDensity tilted() { return TiltedSineDensity{2.0, 0.5, tilt4()}; }

HVector draw_mu(const SpectralModel& m, std::mt19937_64& gen) {
    std::normal_distribution<double> n;
    HVector z(m.dim());
    for (int k = 0; k < m.dim(); ++k) {
        z(k) = std::sqrt(m.q()(k)) * n(gen);
    }
    return z;
}

TEST(Rho, Examples) {
    const auto m = model4();
    const JumpDensity c = ConstantDensity{2.0};
    EXPECT_EQ(rho_eval(c, HVector::Constant(4, 0.3)), 2.0);
    const HVector b = tilt4();
    const HVector quarter = b * (std::numbers::pi / 2.0) / b.squaredNorm();
    EXPECT_NEAR(rho_eval(tilted(), quarter), 3.0, 1e-14);
    EXPECT_EQ(rho_eval(tilted(), HVector::Zero(4)), 2.0);
}

TEST(Rho, RejectsInvalidParameters) {
    EXPECT_THROW(JumpDensity(ConstantDensity{0.0}), DomainError);
    EXPECT_THROW(JumpDensity(TiltedSineDensity{2.0, 1.0, tilt4()}), DomainError);
    EXPECT_THROW(JumpDensity(TiltedSineDensity{2.0, 0.0, tilt4()}), DomainError);
    EXPECT_THROW(tilted().validate(SpectralModel::fractional({1.0, 2.0}, 0.25)), DomainError);
}

TEST(Rho, StaysWithinEnvelope) {
    const auto m = model4();
    const JumpDensity d = tilted();
    std::mt19937_64 gen(1);
    for (int i = 0; i < 100000; ++i) {
        const HVector z = 3.0 * draw_mu(m, gen);
        const double r = rho_eval(d, z);
        ASSERT_GE(r, d.rho_min());
        ASSERT_LE(r, d.rho_max());
    }
    EXPECT_DOUBLE_EQ(d.rho_min(), 1.0);
    EXPECT_DOUBLE_EQ(d.rho_max(), 3.0);
    EXPECT_DOUBLE_EQ(d.grad_sup(), 2.0 * 0.5 * tilt4().norm());
}

TEST(GradLogRho, Examples) {
    const JumpDensity c = ConstantDensity{2.0};
    EXPECT_EQ(grad_log_rho(c, HVector::Constant(4, 1.0)), HVector::Zero(4));
    const HVector g = grad_log_rho(tilted(), HVector::Zero(4));
    EXPECT_TRUE(g.isApprox(0.5 * tilt4(), 1e-15));
}

TEST(GradLogRho, MatchesCentralDifferenceAndBound) {
    const auto m = model4();
    const JumpDensity d = tilted();
    std::mt19937_64 gen(2);
    const double bound = 0.5 * tilt4().norm() / 0.5;
    for (int rep = 0; rep < 500; ++rep) {
        const HVector z = 2.0 * draw_mu(m, gen);
        const HVector g = grad_log_rho(d, z);
        EXPECT_LE(g.norm(), bound + 1e-12);
        for (int k = 0; k < 4; ++k) {
            HVector zp = z;
            HVector zm = z;
            zp(k) += 1e-5;
            zm(k) -= 1e-5;
            const double fd = (std::log(rho_eval(d, zp)) - std::log(rho_eval(d, zm))) / 2e-5;
            EXPECT_NEAR(g(k), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
        const HVector v = draw_mu(m, gen);
        EXPECT_NEAR(d.grad_log_rho_dot(z, v), g.dot(v), 1e-14);
    }
}

TEST(Intensity, ClosedFormAndQuadrature) {
    const auto m = model4();
    EXPECT_EQ(intensity(JumpDensity(ConstantDensity{2.0}), m), 2.0);
    EXPECT_EQ(intensity(tilted(), m), 2.0);
    std::mt19937_64 gen(4);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double r = rho_eval(tilted(), draw_mu(m, gen));
        s += r;
        s2 += r * r;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 2.0, 3.0 * std::sqrt((s2 / n - mean * mean) / n));
}

// Monte Carlo quadrature over mu, independent of the closed form.
TEST(CompensatorMoments, MatchQuadratureOracle) {
    const auto m = model4();
    const auto cm = compensator_moments(tilted(), m);
    std::mt19937_64 gen(6);
    const int n = 1000000;
    Eigen::VectorXd sm = Eigen::VectorXd::Zero(4), sm2 = sm, sg = sm, sg2 = sm;
    const HVector b = tilt4();
    for (int i = 0; i < n; ++i) {
        const HVector z = draw_mu(m, gen);
        const double r = 2.0 * (1.0 + 0.5 * std::sin(b.dot(z)));
        const HVector zr = z * r;
        const HVector gr = 2.0 * 0.5 * std::cos(b.dot(z)) * b;
        sm += zr;
        sm2 += zr.cwiseProduct(zr);
        sg += gr;
        sg2 += gr.cwiseProduct(gr);
    }
    for (int k = 0; k < 4; ++k) {
        const double mm = sm(k) / n;
        const double mg = sg(k) / n;
        EXPECT_NEAR(cm.m_rho(k), mm, 3.0 * std::sqrt((sm2(k) / n - mm * mm) / n) + 1e-15) << k;
        EXPECT_NEAR(cm.g_rho(k), mg, 3.0 * std::sqrt((sg2(k) / n - mg * mg) / n) + 1e-15) << k;
    }
    const auto zero = compensator_moments(JumpDensity(ConstantDensity{2.0}), m);
    EXPECT_EQ(zero.m_rho, HVector::Zero(4));
    EXPECT_EQ(zero.g_rho, HVector::Zero(4));
}

// Stein's identity for Gaussian mu makes -Q^{-1} m_rho + g_rho vanish.
TEST(CompensatorMoments, SteinIdentity) {
    const auto m = model4();
    const auto cm = compensator_moments(tilted(), m);
    EXPECT_LE((m.q_inverse(cm.m_rho) - cm.g_rho).norm(), 1e-14);
}

TEST(SampleMark, ConstantIsPlainMuDraw) {
    const auto m = model4();
    Stream a(1, 2, 3);
    Stream b(1, 2, 3);
    const JumpDensity c = ConstantDensity{2.0};
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(sample_mark(c, m, a), sample_mu(m, b));
    }
}

TEST(SampleMark, TiltedMomentsAndAcceptance) {
    const auto m = model4();
    const JumpDensity d = tilted();
    const auto cm = compensator_moments(d, m);
    Stream s(3, 4, 0);
    const int n = 100000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(4), sum2 = sum;
    for (int i = 0; i < n; ++i) {
        const HVector z = sample_mark(d, m, s);
        sum += z;
        sum2 += z.cwiseProduct(z);
    }
    for (int k = 0; k < 4; ++k) {
        const double mean = sum(k) / n;
        const double var = sum2(k) / n - mean * mean;
        EXPECT_NEAR(mean, cm.m_rho(k) / 2.0, 4.0 * std::sqrt(var / n)) << k;
    }

    // Acceptance rate of the mu-proposal with probability rho / rho_max.
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u;
    const int proposals = 200000;
    int accepted = 0;
    for (int i = 0; i < proposals; ++i) {
        accepted += u(gen) * d.rho_max() < rho_eval(d, draw_mu(m, gen)) ? 1 : 0;
    }
    const double p = 1.0 / 1.5;
    EXPECT_NEAR(static_cast<double>(accepted) / proposals, p, 4.0 * std::sqrt(p * (1 - p) / proposals));
}

TEST(JumpPath, CountIsPoisson) {
    const auto m = model4();
    const JumpDensity d = tilted();
    const int n = 100000;
    double s = 0, s2 = 0;
    std::vector<double> times;
    for (int i = 0; i < n; ++i) {
        Stream st(5, 6, static_cast<std::uint32_t>(i));
        const JumpPath p = sample_jump_path(d, m, NoSecondaryNoise{}, 1.0, st);
        const double c = p.count_until(1.0);
        s += c;
        s2 += c * c;
        ASSERT_TRUE(std::is_sorted(p.events.begin(), p.events.end(),
                                   [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; }));
        for (const auto& e : p.events) {
            ASSERT_GT(e.time, 0.0);
            ASSERT_LE(e.time, 1.0);
            times.push_back(e.time);
        }
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 2.0, 4.0 * std::sqrt(2.0 / n));
    // Var of the sample variance of Poisson(2) is about (mu + 2 mu^2) / n.
    EXPECT_NEAR(var, 2.0, 4.0 * std::sqrt((2.0 + 2.0 * 4.0) / n));

    // Kolmogorov-Smirnov against uniform; 1.95 is the 1e-3 critical value.
    std::sort(times.begin(), times.end());
    double ks = 0.0;
    const double count = static_cast<double>(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        ks = std::max({ks, std::abs((i + 1) / count - times[i]), std::abs(times[i] - i / count)});
    }
    EXPECT_LT(std::sqrt(count) * ks, 1.95);
}

TEST(JumpPath, VanishingIntensityIsEmpty) {
    const auto m = model4();
    Stream s(1, 1, 1);
    const JumpPath p = sample_jump_path(JumpDensity(ConstantDensity{1e-12}), m, NoSecondaryNoise{}, 10.0, s);
    EXPECT_TRUE(p.events.empty());
    EXPECT_EQ(p.count_until(10.0), 0);
}

TEST(JumpPath, SecondaryNoiseIsIndependentOfPrimary) {
    const auto m = model4();
    const JumpDensity d = tilted();
    Stream a(2, 2, 2);
    Stream b(2, 2, 2);
    const JumpPath plain = sample_jump_path(d, m, NoSecondaryNoise{}, 3.0, a);
    const JumpPath both = sample_jump_path(d, m, CompoundPoissonNoise{1.5, 0.5}, 3.0, b);
    ASSERT_EQ(plain.events.size(), both.events.size());
    for (std::size_t i = 0; i < plain.events.size(); ++i) {
        EXPECT_EQ(plain.events[i].time, both.events[i].time);
        EXPECT_EQ(plain.events[i].mark, both.events[i].mark);
    }
    EXPECT_TRUE(plain.secondary_events.empty());
    HVector total = HVector::Zero(4);
    for (const auto& e : both.events) {
        total += e.mark;
    }
    for (const auto& e : both.secondary_events) {
        total += e.mark;
    }
    EXPECT_TRUE(both.value_at(3.0, 4).isApprox(total));
    EXPECT_EQ(both.count_until(3.0), static_cast<int>(both.events.size()));
}

}  // namespace
}  // namespace jumplab
