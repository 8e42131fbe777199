#include "jumplab/error.hpp"
#include "jumplab/harness.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace jumplab {
namespace {

const CsvTable* find_table(const RunReport& r, const std::string& name) {
    for (const auto& t : r.tables) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

ExperimentConfig small_config(std::uint64_t n) {
    ExperimentConfig cfg;
    override_samples(cfg, n);
    return cfg;
}

TEST(Harness, SubcommandNames) {
    const auto& names = subcommand_names();
    for (const char* n : {"simulate", "ibp-check", "gradient", "girsanov-check", "converge", "bounds", "all", "sweep"}) {
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
    }
    EXPECT_THROW(run_subcommand(ExperimentConfig{}, "nonsense"), DomainError);
}

TEST(Harness, InvalidConfigIsRejectedBeforeRunning) {
    ExperimentConfig cfg;
    cfg.drift.lipschitz = 2.0;
    EXPECT_THROW(run_subcommand(cfg, "simulate"), DomainError);
}

TEST(Harness, SimulateWritesTrajectoryAndJumps) {
    ExperimentConfig cfg;
    cfg.noise.secondary = "compound_poisson";
    const RunReport r = run_subcommand(cfg, "simulate");
    const CsvTable* traj = find_table(r, "trajectory");
    const CsvTable* jumps = find_table(r, "jumps");
    ASSERT_NE(traj, nullptr);
    ASSERT_NE(jumps, nullptr);
    EXPECT_EQ(traj->columns.size(), 5u);
    EXPECT_EQ(traj->rows.size(), 1001u);
    EXPECT_EQ(traj->rows.front()[0], "0");
    EXPECT_EQ(traj->rows.back()[0], "1");
    EXPECT_TRUE(r.verdicts.empty());
    EXPECT_EQ(run_subcommand(cfg, "simulate").tables[0].render(), traj->render());
}

TEST(Harness, IbpCheckAtSmallSampleSize) {
    const RunReport r = run_subcommand(small_config(2000), "ibp-check");
    ASSERT_EQ(r.verdicts.size(), 2u);
    EXPECT_EQ(r.verdicts[0].id, "AC1");
    EXPECT_EQ(r.verdicts[1].id, "AC3");
    EXPECT_TRUE(r.all_passed()) << r.verdicts[0].detail << "\n" << r.verdicts[1].detail;
    const CsvTable s = r.summary();
    EXPECT_EQ(s.name, "summary");
    EXPECT_EQ(s.rows.size(), 2u);
}

TEST(Harness, ResultsDoNotDependOnWorkerCount) {
    ExperimentConfig one = small_config(1500);
    one.mc.workers = 1;
    ExperimentConfig three = one;
    three.mc.workers = 3;
    const RunReport a = run_subcommand(one, "girsanov-check");
    const RunReport b = run_subcommand(three, "girsanov-check");
    ASSERT_EQ(a.tables.size(), b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) {
        EXPECT_EQ(a.tables[i].render(), b.tables[i].render()) << a.tables[i].name;
    }
}

TEST(Harness, WriteReportAndOutDir) {
    const auto dir = std::filesystem::temp_directory_path() / "jumplab_report_test";
    std::filesystem::remove_all(dir);
    RunReport r;
    r.verdicts.push_back(Verdict{"AC1", "demo", true, "ok"});
    r.tables.push_back(CsvTable{"extra", {"x"}, {{"1"}}});
    write_report(r, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "summary.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "extra.csv"));
    std::filesystem::remove_all(dir);

    EXPECT_EQ(resolve_out_dir(std::string("given")), "given");
    ::setenv("JUMPLAB_OUT", "from_env", 1);
    EXPECT_EQ(resolve_out_dir(std::nullopt), "from_env");
    ::unsetenv("JUMPLAB_OUT");
    EXPECT_EQ(resolve_out_dir(std::nullopt), "results");
}

}  // namespace
}  // namespace jumplab
