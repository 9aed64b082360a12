#include <deflab/io.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

namespace {

const std::string kCli = DEFICIENCY_LAB_PATH;

int
run(const std::string& args)
{
  const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path
scratch(const std::string& name)
{
  auto p = std::filesystem::temp_directory_path() / ("deflab_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

} // namespace

TEST(Cli, UsageErrorsExitTwo)
{
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("run"), 2);
  EXPECT_EQ(run("run --config /nonexistent/config.json"), 2);
  EXPECT_EQ(run("fig1 --eps 0.9"), 2);
}

TEST(Cli, HelpExitsZero)
{
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, UnknownScenarioExitsTwo)
{
  const auto dir = scratch("unknown");
  deflab::write_file_atomic(dir / "c.json", R"({"scenario": "nope"})");
  EXPECT_EQ(run("run --config " + (dir / "c.json").string()), 2);
  deflab::write_file_atomic(dir / "bad.json", "{not json");
  EXPECT_EQ(run("run --config " + (dir / "bad.json").string()), 2);
}

TEST(Cli, PassingScenarioExitsZero)
{
  const auto dir = scratch("pass");
  deflab::write_file_atomic(
    dir / "c.json",
    R"({"scenario": "chebyshev", "params": {"trunc_J": 20, "x_hi": 10.0}, "output_dir": ")" +
      (dir / "out").string() + "\"}");
  EXPECT_EQ(run("run --config " + (dir / "c.json").string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "chebyshev.report.json"));
}

TEST(Cli, FailingAssertionExitsOne)
{
  const auto dir = scratch("fail");
  deflab::write_file_atomic(
    dir / "c.json",
    R"({"scenario": "harmonic", "params": {"trunc_J": 40, "j_lo": 5, "j_hi": 20, "rel_tol": 1e-9}, "output_dir": ")" +
      (dir / "out").string() + "\"}");
  EXPECT_EQ(run("run --config " + (dir / "c.json").string()), 1);
}

TEST(Cli, Fig1WritesCsvAndSummary)
{
  const auto dir = scratch("fig1");
  EXPECT_EQ(run("fig1 --step 0.01 --out " + (dir / "f.csv").string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "f.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "f.json"));
}

TEST(Cli, AllWithEmptyManifest)
{
  const auto dir = scratch("all");
  deflab::write_file_atomic(dir / "m.json", "[]");
  EXPECT_EQ(run("all --manifest " + (dir / "m.json").string() + " --out-dir " +
                (dir / "out").string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "summary.json"));
  EXPECT_EQ(run("all --manifest " + (dir / "m.json").string()), 2);
}
