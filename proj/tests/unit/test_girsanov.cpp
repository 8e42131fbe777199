#include "jumplab/girsanov.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace jumplab {
namespace {

SpectralModel model4() { return SpectralModel::fractional(SpectralModel::power_law_gamma(4), 0.25); }

JumpDensity tilted4() {
    HVector b = HVector::Zero(4);
    b(0) = 1.0;
    b(1) = 0.5;
    return TiltedSineDensity{2.0, 0.5, b};
}

McOptions mc(std::uint64_t n) { return McOptions{n, RngPolicy{42}, 0}; }

HVector direction(const SpectralModel& m) {
    HVector v = HVector::LinSpaced(4, 1.0, -0.5);
    return v * (0.5 / std::sqrt(rkhs_inner(m, v, v)));
}

JumpPath path(const SpectralModel& m, const JumpDensity& d, std::uint32_t i) {
    Stream s(8, 8, i);
    return sample_jump_path(d, m, NoSecondaryNoise{}, 1.0, s);
}

TEST(LambdaRatio, Examples) {
    const auto m = model4();
    const HVector v = direction(m);
    const HVector z = HVector::LinSpaced(4, 0.3, -0.2);
    EXPECT_EQ(lambda_ratio(GirsanovScenario{0.0, v, tilted4(), 1.0}, m, z), 1.0);
    const GirsanovScenario c{0.4, v, ConstantDensity{2.0}, 1.0};
    EXPECT_NEAR(lambda_ratio(c, m, z), cm_density(m, z, 0.4 * v), 1e-15);
    const GirsanovScenario t{0.4, v, tilted4(), 1.0};
    EXPECT_NEAR(lambda_ratio(t, m, z), cm_density(m, z, 0.4 * v) * rho_eval(tilted4(), z + 0.4 * v) / rho_eval(tilted4(), z),
                1e-15);
}

TEST(LambdaRatio, MeanOneUnderMarkLaw) {
    const auto m = model4();
    const GirsanovScenario sc{0.5, direction(m), tilted4(), 1.0};
    Stream s(4, 4, 4);
    const int n = 100000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double l = lambda_ratio(sc, m, sample_mark(sc.density, m, s));
        s1 += l;
        s2 += l * l;
    }
    const double mean = s1 / n;
    EXPECT_NEAR(mean, 1.0, 3.0 * std::sqrt((s2 / n - mean * mean) / n));
}

TEST(GirsanovWeight, Examples) {
    const auto m = model4();
    const GirsanovScenario sc{0.5, direction(m), tilted4(), 1.0};
    EXPECT_EQ(girsanov_weight(sc, m, JumpPath{1.0, {}, {}}, 1.0), 1.0);
    const JumpPath p = path(m, tilted4(), 3);
    ASSERT_GT(p.count_until(1.0), 0);
    EXPECT_EQ(girsanov_weight(GirsanovScenario{0.0, sc.v, tilted4(), 1.0}, m, p, 1.0), 1.0);
    double product = 1.0;
    for (const auto& e : p.events) {
        product *= lambda_ratio(sc, m, e.mark);
    }
    EXPECT_NEAR(girsanov_weight(sc, m, p, 1.0), product, 1e-13 * product);
    EXPECT_GT(girsanov_weight(sc, m, p, 1.0), 0.0);
}

TEST(GirsanovWeight, MeanOne) {
    const auto m = model4();
    for (const JumpDensity& d : {JumpDensity(ConstantDensity{2.0}), tilted4()}) {
        const GirsanovScenario sc{0.5, direction(m), d, 1.0};
        const int n = 100000;
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double z = girsanov_weight(sc, m, path(m, d, static_cast<std::uint32_t>(i)), 1.0);
            s1 += z;
            s2 += z * z;
        }
        const double mean = s1 / n;
        EXPECT_NEAR(mean, 1.0, 3.0 * std::sqrt((s2 / n - mean * mean) / n));
    }
}

TEST(PerturbedPath, ShiftsMarksOnly) {
    const auto m = model4();
    const HVector v = direction(m);
    const JumpPath p = path(m, tilted4(), 5);
    const JumpPath same = perturbed_path(GirsanovScenario{0.0, v, tilted4(), 1.0}, p, 1.0);
    ASSERT_EQ(same.events.size(), p.events.size());
    const JumpPath once = perturbed_path(GirsanovScenario{0.3, v, tilted4(), 1.0}, p, 1.0);
    const JumpPath twice = perturbed_path(GirsanovScenario{0.2, v, tilted4(), 1.0},
                                          perturbed_path(GirsanovScenario{0.1, v, tilted4(), 1.0}, p, 1.0), 1.0);
    for (std::size_t i = 0; i < p.events.size(); ++i) {
        EXPECT_EQ(same.events[i].mark, p.events[i].mark);
        EXPECT_EQ(once.events[i].time, p.events[i].time);
        EXPECT_LE((once.events[i].mark - p.events[i].mark - 0.3 * v).norm(), 1e-15);
        EXPECT_LE((twice.events[i].mark - once.events[i].mark).norm(), 1e-15);
    }
}

TEST(ReweightCheck, ZeroEpsilonIsIdentity) {
    const auto m = model4();
    const GirsanovScenario sc{0.0, direction(m), tilted4(), 1.0};
    const auto r = reweight_check(sc, m, CosineF{HVector::Ones(4), 0.1}, 1.0, mc(5000), "test/rw0");
    EXPECT_EQ(r.weighted.value(), r.reference.value());
    EXPECT_EQ(r.z_mean.value(), 1.0);
}

TEST(ReweightCheck, LawIsRestored) {
    const auto m = model4();
    for (const JumpDensity& d : {JumpDensity(ConstantDensity{2.0}), tilted4()}) {
        for (double eps : {0.1, 0.5}) {
            const GirsanovScenario sc{eps, direction(m), d, 1.0};
            const auto r = reweight_check(sc, m, CosineF{HVector::LinSpaced(4, 1.0, -1.0), 0.2}, 1.0, mc(40000), "test/rw");
            EXPECT_NEAR(r.weighted.value(), r.reference.value(),
                        3.0 * combined_sigma(r.weighted.error(), r.reference.error()));
            EXPECT_NEAR(r.z_mean.value(), 1.0, 3.0 * r.z_mean.error());
            const auto one = reweight_check(sc, m, ConstantF{1.0}, 1.0, mc(2000), "test/rw1");
            EXPECT_EQ(one.weighted.value(), one.z_mean.value());
        }
    }
}

TEST(ReweightCheck, PrintedSignBreaksNormalisation) {
    const auto m = model4();
    const GirsanovScenario sc{0.5, direction(m), tilted4(), 1.0};
    const auto r = reweight_check(sc, m, ConstantF{1.0}, 1.0, mc(40000), "test/rwp", CmSign::Paper);
    EXPECT_GT(std::abs(r.z_mean.value() - 1.0), 5.0 * r.z_mean.error());
}

TEST(ZMomentSweep, BoundedAndApproachesMartingaleVariance) {
    const auto m = model4();
    const std::array<double, 4> grid{1e-3, 1e-2, 1e-1, 1.0};
    for (const JumpDensity& d : {JumpDensity(ConstantDensity{2.0}), tilted4()}) {
        const GirsanovScenario sc{1.0, direction(m), d, 1.0};
        const auto sweep = z_moment_sweep(sc, m, 1.0, mc(40000), grid, "test/sweep");
        ASSERT_EQ(sweep.rows.size(), 4u);
        for (const auto& row : sweep.rows) {
            EXPECT_TRUE(std::isfinite(row.second_moment.value()));
        }
        EXPECT_TRUE(sweep.bounded());
        const auto& small = sweep.rows.front().second_moment;
        // O(eps) bias allowance on top of 3 sigma.
        EXPECT_NEAR(small.value(), sweep.m_squared.value(),
                    3.0 * combined_sigma(small.error(), sweep.m_squared.error()) + 1e-2 * sweep.m_squared.value());
    }
}

TEST(ZMomentSweep, BoundednessRule) {
    ZMomentSweep s;
    for (double v : {1.0, 2.0, 3.0, 25.0}) {
        EstimatorResult r;
        r.mean = Eigen::VectorXd::Constant(1, v);
        r.stderr = Eigen::VectorXd::Zero(1);
        s.rows.push_back({v, r});
    }
    EXPECT_DOUBLE_EQ(s.median_estimate(), 2.5);
    EXPECT_EQ(s.max_estimate(), 25.0);
    EXPECT_TRUE(s.bounded());
    s.rows.back().second_moment.mean(0) = 26.0;
    EXPECT_FALSE(s.bounded());
    s.rows.back().second_moment.mean(0) = INFINITY;
    EXPECT_FALSE(s.bounded());
}

TEST(CompensatorVanishing, ZeroWithinNoise) {
    const auto m = model4();
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::normal_distribution<double> n;
    for (int rep = 0; rep < 3; ++rep) {
        HVector v(4);
        for (int k = 0; k < 4; ++k) {
            v(k) = n(gen);
        }
        const GirsanovScenario sc{u(gen), v * (0.5 / std::sqrt(rkhs_inner(m, v, v))), tilted4(), 1.0};
        const auto r = compensator_vanishing(sc, m, mc(1000000), "test/comp" + std::to_string(rep));
        EXPECT_NEAR(r.value(), 0.0, 3.0 * r.error());
    }
}

}  // namespace
}  // namespace jumplab
