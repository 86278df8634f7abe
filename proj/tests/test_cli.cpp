#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(BILAYER_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string tmp(const std::string& name) {
  return std::string(BILAYER_TMP) + "/" + name;
}

}  // namespace

TEST(Cli, EnergyExitCodes) {
  EXPECT_EQ(run("energy --surface flat:1 --eps 0.05"), 0);
  EXPECT_EQ(run("energy --surface sphere:1 --eps 0.5"), 2);
  EXPECT_EQ(run("energy --surface sphere:1 --eps 0.1"), 2);
  EXPECT_EQ(run("energy --surface cube:1 --eps 0.05"), 1);
  EXPECT_EQ(run("energy --surface sphere:1"), 1);
  EXPECT_EQ(run("energy --surface sphere:1 --eps 0.02,0.01"), 1);
  EXPECT_EQ(run("energy --surface sphere:1 --eps 0.02 --format xml"), 1);
  EXPECT_EQ(run("nonsense"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, EnergyJsonOutput) {
  const auto out = tmp("energy.json");
  ASSERT_EQ(run("energy --surface flat:1 --eps 0.05 --out " + out), 0);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["surface"], "flat:1");
  EXPECT_NEAR(j["g_eps"].get<double>(), 0.0, 1e-10);
}

TEST(Cli, SphereEnergyNearLimit) {
  const auto out = tmp("sphere.json");
  ASSERT_EQ(run("energy --surface sphere:1 --eps 0.01 --out " + out), 0);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_NEAR(j["g_eps"].get<double>(), 20.943951, 0.02 * 20.943951);
}

TEST(Cli, ReportsAreBitIdentical) {
  const auto a = tmp("run_a.csv");
  const auto b = tmp("run_b.csv");
  const std::string args =
      "converge --surface torus:2,1 --grid 32x32 --eps 0.02,0.01,0.005 --no-timing --format csv";
  ASSERT_EQ(run(args + " --out " + a), 0);
  ASSERT_EQ(run(args + " --out " + b, "BILAYER_THREADS=1"), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
}

TEST(Cli, ThreadCountDoesNotChangeResults) {
  const auto a = tmp("t1.json");
  const auto b = tmp("t3.json");
  const std::string args = "energy --surface ellipsoid:1,1.5,2 --eps 0.01 --no-timing --out ";
  ASSERT_EQ(run(args + a, "BILAYER_THREADS=1"), 0);
  ASSERT_EQ(run(args + b, "BILAYER_THREADS=3"), 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, OtherSubcommands) {
  EXPECT_EQ(run("converge --surface flat:1 --eps 0.2,0.1,0.05"), 0);
  EXPECT_EQ(run("converge --surface sphere:1 --eps 0.02,0.01"), 1);
  EXPECT_EQ(run("converge --surface sphere:1 --grid 16x32 --eps 0.5,0.02,0.01"), 2);
  EXPECT_EQ(run("lowerbound --surface flat:1"), 0);
  EXPECT_EQ(run("lowerbound --surface torus:2,1 --grid 64x64"), 0);
  EXPECT_EQ(run("emd --surface flat:1 --eps 0.1"), 0);
  EXPECT_EQ(run("weakstar --surface sphere:1 --grid 32x64"), 0);
  EXPECT_EQ(run("ray-check --surface torus:2,1 --eps 0.05"), 0);
  EXPECT_EQ(run("surfaces --format csv"), 0);
}

TEST(Cli, RayCheckIsCsv) {
  const auto out = tmp("ray.csv");
  ASSERT_EQ(run("ray-check --eps 0.05 --out " + out), 0);
  const auto text = slurp(out);
  EXPECT_EQ(text.substr(0, text.find('\n')), "eps,node,lambda,mu,m,gap,bound");
}
