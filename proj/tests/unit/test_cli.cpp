#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <memory>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hsic/data_io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun hsic_cli(const std::string& args) {
  const std::string cmd = std::string(HSIC_CLI_PATH) + " " + args + " 2>/dev/null";
  CliRun r;
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe.get())) > 0) r.out.append(buf, got);
  const int status = pclose(pipe.release());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scene(const std::string& name) {
  const fs::path dir = hsic::oracle::scratch_dir(name);
  const auto s = hsic::oracle::synthetic_scene(10, 10, 8, 0.01, 3);
  hsic::save_cube(s.cube, dir / "cube.npy", hsic::CubeFormat::npy);
  hsic::save_labels(s.labels, dir / "gt.npy");
  std::ofstream(dir / "run.toml") << "data = " << (dir / "cube.npy").string() << "\n"
                                  << "labels = " << (dir / "gt.npy").string() << "\n"
                                  << "atoms = 16\nsparsity = 2\niterations = 200\nknn = 6\n";
  return dir;
}

}  // namespace

TEST(Cli, TrainEncodeClusterEvaluateRender) {
  const fs::path d = scene("cli_flow");
  const std::string cfg = "--config " + (d / "run.toml").string() + " --out " + (d / "run").string();
  CliRun r = hsic_cli("train " + cfg + " --seed 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("final mean residual"), std::string::npos);
  ASSERT_EQ(hsic_cli("encode " + cfg + " --dict " + (d / "run/dictionary.sdict").string()).code, 0);
  ASSERT_EQ(hsic_cli("cluster " + cfg + " --codes " + (d / "run/codes.scode").string()).code, 0);
  r = hsic_cli("evaluate --partition " + (d / "run/labels.npy").string() + " --gt " +
               (d / "gt.npy").string() + " --coords " + (d / "run/coords.npy").string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("n"), 100);
  EXPECT_EQ(j.at("clusters_g"), 4);
  ASSERT_EQ(hsic_cli("render --partition " + (d / "run/labels.npy").string() + " --out " +
                     (d / "run").string()).code, 0);
  EXPECT_TRUE(fs::exists(d / "run/map.png"));
}

TEST(Cli, FlagsOverrideConfig) {
  const fs::path d = scene("cli_override");
  ASSERT_EQ(hsic_cli("train --config " + (d / "run.toml").string() + " --atoms 20 --iterations 5 --out " +
                     (d / "o").string()).code, 0);
  EXPECT_EQ(hsic::load_dictionary(d / "o/dictionary.sdict").dictionary.atom_count(), 20);
}

TEST(Cli, ExitCodes) {
  const fs::path d = scene("cli_codes");
  EXPECT_EQ(hsic_cli("").code, 2);
  EXPECT_EQ(hsic_cli("train --no-such-flag").code, 2);
  EXPECT_EQ(hsic_cli("train --config " + (d / "missing.toml").string()).code, 2);
  EXPECT_EQ(hsic_cli("train --config " + (d / "run.toml").string() + " --sparsity 0 --out " + (d / "x").string()).code, 2);
  EXPECT_EQ(hsic_cli("train --data " + (d / "absent.npy").string()).code, 3);

  hsic::save_dictionary({hsic::Dictionary(hsic::oracle::random_unit_columns(4, 8, 1)), std::nullopt, {}},
                        d / "small.sdict");
  EXPECT_EQ(hsic_cli("encode --config " + (d / "run.toml").string() + " --dict " +
                     (d / "small.sdict").string() + " --out " + (d / "x").string()).code, 3);

  // Two atoms 1e-11 apart in angle: the second pick still correlates with
  // the residual but is numerically dependent on the first.
  const int bands = hsic::load_cube(d / "cube.npy", hsic::CubeFormat::npy).bands();
  Eigen::MatrixXd dup = Eigen::MatrixXd::Zero(bands, 2);
  dup(0, 0) = 1.0;
  dup(0, 1) = 1.0;
  dup(1, 1) = 1e-11;
  dup.col(1).normalize();
  hsic::save_dictionary({hsic::Dictionary(dup, false), std::nullopt, {}}, d / "dup.sdict");
  EXPECT_EQ(hsic_cli("encode --config " + (d / "run.toml").string() + " --dict " +
                     (d / "dup.sdict").string() + " --sparsity 2 --out " + (d / "x").string()).code, 4);
}

TEST(Cli, ReRunsAreBitwiseIdentical) {
  const fs::path d = scene("cli_determinism");
  // Identical commands into the same directory; each run is copied aside.
  const fs::path run = d / "run";
  for (const char* copy : {"a", "b"}) {
    fs::remove_all(run);
    const std::string cfg = "--config " + (d / "run.toml").string() + " --seed 11 --out " + run.string();
    ASSERT_EQ(hsic_cli("train " + cfg).code, 0);
    ASSERT_EQ(hsic_cli("encode " + cfg + " --dict " + (run / "dictionary.sdict").string()).code, 0);
    ASSERT_EQ(hsic_cli("cluster " + cfg + " --codes " + (run / "codes.scode").string()).code, 0);
    ASSERT_EQ(hsic_cli("render --partition " + (run / "labels.npy").string() + " --out " + run.string()).code, 0);
    fs::copy(run, d / copy, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  }
  for (const char* f : {"dictionary.sdict", "trace.csv", "codes.scode", "coords.npy", "labels.npy",
                        "summary.json", "map.png"})
    EXPECT_EQ(hsic::oracle::read_bytes(d / "a" / f), hsic::oracle::read_bytes(d / "b" / f)) << f;
}

TEST(Cli, ConvertAndGrid) {
  const fs::path d = scene("cli_grid");
  ASSERT_EQ(hsic_cli("convert " + (d / "cube.npy").string() + " " + (d / "cube.hsraw").string()).code, 0);
  const CliRun r = hsic_cli("grid --config " + (d / "run.toml").string() + " --data " +
                         (d / "cube.hsraw").string() + " --grid-atoms [16,20] --grid-sparsity [1,2] --out " +
                         (d / "g").string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(d / "g/grid.csv"));
  EXPECT_TRUE(fs::exists(d / "g/grid.png"));
  EXPECT_TRUE(fs::exists(d / "g/k20_s2/map.png"));
}
