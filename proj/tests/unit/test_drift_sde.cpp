#include "jumplab/drift.hpp"
#include "jumplab/error.hpp"
#include "jumplab/rng.hpp"
#include "jumplab/sde.hpp"

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

JumpPath random_path(const SpectralModel& m, double horizon, std::uint32_t sample) {
    Stream s(123, 77, sample);
    return sample_jump_path(tilted4(), m, NoSecondaryNoise{}, horizon, s);
}

HVector random_vec(std::mt19937_64& gen, int d) {
    std::normal_distribution<double> n;
    HVector v(d);
    for (int k = 0; k < d; ++k) {
        v(k) = n(gen);
    }
    return v;
}

TEST(Drift, TanhBoundsAndJacobian) {
    const DriftField f = DriftField::random_tanh(4, 0.3, 7);
    EXPECT_DOUBLE_EQ(f.lip_bound(), 0.3);
    // Each component is bounded by max |kappa_i|; the norm by |kappa|.
    EXPECT_NEAR(f.sup_norm(), 0.3 * 2.0, 1e-15);
    std::mt19937_64 gen(1);
    for (int rep = 0; rep < 200; ++rep) {
        const HVector x = 2.0 * random_vec(gen, 4);
        EXPECT_LE(f.eval(x).cwiseAbs().maxCoeff(), 0.3);
        EXPECT_LE(f.eval(x).norm(), f.sup_norm());
        const Eigen::MatrixXd j = f.jacobian(x);
        EXPECT_LE(Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues()(0), 0.3 + 1e-12);
        for (int k = 0; k < 4; ++k) {
            HVector xp = x;
            HVector xm = x;
            xp(k) += 1e-6;
            xm(k) -= 1e-6;
            const HVector col = (f.eval(xp) - f.eval(xm)) / 2e-6;
            EXPECT_LE((col - j.col(k)).norm(), 1e-8);
        }
        const HVector v = random_vec(gen, 4);
        HVector out(4);
        f.jacobian_apply(x, v, out);
        EXPECT_LE((out - j * v).norm(), 1e-14);
    }
}

TEST(Drift, ZeroVariant) {
    const DriftField f;
    EXPECT_TRUE(f.is_zero());
    EXPECT_EQ(f.lip_bound(), 0.0);
    EXPECT_EQ(f.eval(HVector::Ones(3)), HVector::Zero(3));
    EXPECT_EQ(f.jacobian(HVector::Ones(3)), Eigen::MatrixXd::Zero(3, 3));
}

TEST(SolveMild, NoJumpsIsSemigroup) {
    const auto m = model4();
    const JumpPath empty{2.0, {}, {}};
    const HVector x0 = HVector::LinSpaced(4, 1.0, -2.0);
    const Trajectory tr = solve_mild(m, DriftField{}, empty, x0, 1e-2);
    for (std::size_t j = 0; j < tr.size(); ++j) {
        const HVector expect = semigroup_apply(m, tr.times[j], x0);
        EXPECT_LE((tr.state(j) - expect).norm(), 1e-12 * expect.norm());
    }
    EXPECT_DOUBLE_EQ(tr.times.back(), 2.0);
}

TEST(SolveMild, SingleJumpClosedForm) {
    const SpectralModel m({1.0}, {1.0});
    JumpPath p{1.0, {{0.5, HVector::Constant(1, 2.0)}}, {}};
    const Trajectory tr = solve_mild(m, DriftField{}, p, HVector::Constant(1, 1.0), 1e-3);
    EXPECT_NEAR(tr.state_at(1.0)(0), std::exp(-1.0) + 2.0 * std::exp(-0.5), 1e-12);
    EXPECT_THROW(solve_mild(m, DriftField{}, p, HVector::Constant(1, 1.0), 0.0), DomainError);
}

TEST(SolveMild, ZeroDriftMatchesClosedFormOnGrid) {
    const auto m = model4();
    std::mt19937_64 gen(2);
    for (std::uint32_t s = 0; s < 20; ++s) {
        const JumpPath p = random_path(m, 3.0, s);
        const HVector x0 = random_vec(gen, 4);
        const Trajectory tr = solve_mild(m, DriftField{}, p, x0, 1e-2);
        for (const auto& e : p.events) {
            // Grid contains the jump time and the state jumps by the mark there.
            const std::size_t j = tr.index_of(e.time);
            EXPECT_EQ(tr.times[j], e.time);
        }
        for (std::size_t j = 0; j < tr.size(); j += 7) {
            const double t = tr.times[j];
            HVector expect = semigroup_apply(m, t, x0);
            for (const auto& e : p.events) {
                if (e.time <= t) {
                    expect += semigroup_apply(m, t - e.time, e.mark);
                }
            }
            EXPECT_LE((tr.state(j) - expect).norm(), 1e-12 * std::max(1.0, expect.norm()));
        }
    }
}

TEST(SolveMild, StrongOrderOne) {
    const auto m = model4();
    const DriftField f = DriftField::random_tanh(4, 0.9, 3);
    std::mt19937_64 gen(4);
    const double dt = 0.02;
    double e1 = 0.0;
    double e2 = 0.0;
    for (std::uint32_t s = 0; s < 64; ++s) {
        const JumpPath p = random_path(m, 1.0, s);
        const HVector x0 = 2.0 * random_vec(gen, 4);
        const HVector ref = solve_mild(m, f, p, x0, dt / 8.0).state_at(1.0);
        e1 += (solve_mild(m, f, p, x0, dt).state_at(1.0) - ref).norm();
        e2 += (solve_mild(m, f, p, x0, dt / 2.0).state_at(1.0) - ref).norm();
    }
    EXPECT_GE(std::log2(e1 / e2), 0.9);
}

TEST(JacobianFlow, ZeroDriftIsSemigroup) {
    const auto m = model4();
    const JumpPath p = random_path(m, 2.0, 1);
    const Trajectory tr = solve_mild(m, DriftField{}, p, HVector::Zero(4), 1e-2);
    const JacobianFlow fl = jacobian_flow(m, DriftField{}, tr);
    EXPECT_EQ(fl.mats.front(), Eigen::MatrixXd::Identity(4, 4));
    for (std::size_t j = 0; j < fl.mats.size(); ++j) {
        const Eigen::MatrixXd expect = semigroup_diagonal(m, fl.times[j]).asDiagonal();
        EXPECT_LE((fl.mats[j] - expect).norm(), 1e-12);
    }
    const Eigen::MatrixXd trans = jacobian_transition(fl, 0.5, 1.5);
    const Eigen::MatrixXd expect = semigroup_diagonal(m, 1.0).asDiagonal();
    EXPECT_LE((trans - expect).norm(), 1e-12);
}

TEST(JacobianFlow, NormBoundAndFiniteDifference) {
    const auto m = model4();
    const DriftField f = DriftField::random_tanh(4, 0.3, 7);
    std::mt19937_64 gen(5);
    for (std::uint32_t s = 0; s < 16; ++s) {
        const JumpPath p = random_path(m, 2.0, s);
        const HVector x0 = random_vec(gen, 4);
        const double dt = 1e-3;
        const Trajectory tr = solve_mild(m, f, p, x0, dt);
        const JacobianFlow fl = jacobian_flow(m, f, tr);
        for (std::size_t j = 0; j < fl.mats.size(); j += 50) {
            const double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(fl.mats[j]).singularValues()(0);
            EXPECT_LE(norm, std::exp((-1.0 + 0.3) * fl.times[j]) * (1.0 + 1e-9 + 10.0 * dt));
        }
        const double eps = 1e-4;
        for (int k = 0; k < 4; ++k) {
            HVector xp = x0;
            HVector xm = x0;
            xp(k) += eps;
            xm(k) -= eps;
            const HVector col =
                (solve_mild(m, f, p, xp, dt).state_at(2.0) - solve_mild(m, f, p, xm, dt).state_at(2.0)) / (2 * eps);
            EXPECT_LE((col - fl.at(2.0).col(k)).norm(), 1e-7);
        }
    }
}

TEST(JacobianTransition, CompositionAndResolve) {
    const auto m = model4();
    const DriftField f = DriftField::random_tanh(4, 0.3, 7);
    const JumpPath p = random_path(m, 2.0, 9);
    const Trajectory tr = solve_mild(m, f, p, HVector::Ones(4), 1e-3);
    const JacobianFlow fl = jacobian_flow(m, f, tr);
    EXPECT_LE((jacobian_transition(fl, 0.7, 0.7) - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-14);
    const Eigen::MatrixXd jst = jacobian_transition(fl, 0.7, 1.6);
    EXPECT_LE((jst * fl.at(0.7) - fl.at(1.6)).norm(), 1e-9 * fl.at(1.6).norm());
    const Eigen::MatrixXd re = jacobian_transition_resolve(m, f, tr, 0.7, 1.6);
    EXPECT_LE((re - jst).norm(), 1e-8);
    EXPECT_THROW(jacobian_transition(fl, 1.6, 0.7), DomainError);
}

TEST(JacobianTransition, RejectsIllConditionedFlow) {
    // cond(J_1) = e^39 exceeds 1e12.
    const SpectralModel m({1.0, 40.0}, {1.0, 1.0});
    const JumpPath p{2.0, {}, {}};
    const Trajectory tr = solve_mild(m, DriftField{}, p, HVector::Zero(2), 1e-2);
    const JacobianFlow fl = jacobian_flow(m, DriftField{}, tr);
    EXPECT_THROW(jacobian_transition(fl, 1.0, 2.0), NumericalError);
}

TEST(CoupledSolve, SynchronousCoupling) {
    const auto m = model4();
    const DriftField f = DriftField::random_tanh(4, 0.3, 7);
    const JumpPath p = random_path(m, 4.0, 3);
    const HVector x = HVector::Unit(4, 0);
    const HVector y = HVector::Zero(4);
    {
        const auto [a, b] = coupled_solve(m, f, p, x, x, 1e-3);
        EXPECT_EQ(a.states, b.states);
    }
    {
        const auto [a, b] = coupled_solve(m, DriftField{}, p, x, y, 1e-3);
        for (std::size_t j = 0; j < a.size(); j += 100) {
            EXPECT_NEAR((a.state(j) - b.state(j)).norm(), std::exp(-a.times[j]), 1e-12);
        }
    }
    {
        const double dt = 1e-3;
        const auto [a, b] = coupled_solve(m, f, p, x, y, dt);
        for (std::size_t j = 0; j < a.size(); j += 10) {
            EXPECT_LE((a.state(j) - b.state(j)).norm(), std::exp(-0.7 * a.times[j]) * (1.0 + 10.0 * dt));
        }
        const Trajectory solo = solve_mild(m, f, p, x, dt);
        EXPECT_LE((solo.state_at(4.0) - a.state_at(4.0)).norm(), 1e-12);
    }
}

}  // namespace
}  // namespace jumplab
