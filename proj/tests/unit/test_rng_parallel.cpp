#include "jumplab/parallel.hpp"
#include "jumplab/rng.hpp"
#include "jumplab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace jumplab {
namespace {

TEST(Stream, AddressDeterminesDraws) {
    Stream a(42, 7, 100, 0);
    Stream b(42, 7, 100, 0);
    Stream c(42, 7, 101, 0);
    Stream d = a.substream(1);
    bool differs = false;
    for (int i = 0; i < 64; ++i) {
        const double x = a.uniform();
        EXPECT_EQ(x, b.uniform());
        differs = differs || x != c.uniform();
        EXPECT_GT(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
    EXPECT_TRUE(differs);
    Stream e(42, 7, 100, 1);
    EXPECT_EQ(d.next_u32(), e.next_u32());
}

TEST(Stream, NormalMoments) {
    Stream s(1, 2, 3);
    const int n = 200000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(ExperimentId, StableAndDistinct) {
    // FNV-1a of the empty string is the offset basis.
    EXPECT_EQ(experiment_id(""), 2166136261u);
    EXPECT_EQ(experiment_id("a"), 0xe40c292cu);
    std::set<std::uint32_t> ids;
    for (const char* name : {"ibp", "gradient", "girsanov", "converge", "bounds"}) {
        ids.insert(experiment_id(name));
    }
    EXPECT_EQ(ids.size(), 5u);
}

TEST(MomentAccumulator, MergeMatchesSequential) {
    MomentAccumulator all(2);
    MomentAccumulator left(2);
    MomentAccumulator right(2);
    Stream s(9, 9, 9);
    for (int i = 0; i < 1000; ++i) {
        Eigen::Vector2d x(s.normal(), 3.0 + s.uniform());
        all.add(x);
        (i < 377 ? left : right).add(x);
    }
    left.merge(right);
    EXPECT_EQ(left.count(), all.count());
    EXPECT_TRUE(left.mean().isApprox(all.mean(), 1e-13));
    EXPECT_TRUE(left.variance().isApprox(all.variance(), 1e-12));
    const auto r = EstimatorResult::from(all, 9);
    EXPECT_DOUBLE_EQ(r.error(1), std::sqrt(all.variance()(1) / 1000.0));
}

TEST(ParallelReduce, BitIdenticalAcrossWorkerCounts) {
    auto run = [](unsigned workers) {
        const RngPolicy rng{7};
        return parallel_reduce(std::size_t{20000}, workers, MomentAccumulator(1), [&](std::size_t i, MomentAccumulator& acc) {
            Stream s = rng.stream(3, i);
            Eigen::Matrix<double, 1, 1> x;
            x(0) = std::exp(s.normal());
            acc.add(x);
        });
    };
    const auto one = run(1);
    for (unsigned w : {2u, 3u, 8u}) {
        const auto other = run(w);
        EXPECT_EQ(one.mean()(0), other.mean()(0));
        EXPECT_EQ(one.variance()(0), other.variance()(0));
        EXPECT_EQ(one.count(), other.count());
    }
}

TEST(ParallelReduce, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(10000, 4,
                              [](std::size_t i) {
                                  if (i == 5000) {
                                      throw std::runtime_error("boom");
                                  }
                              }),
                 std::runtime_error);
}

}  // namespace
}  // namespace jumplab
