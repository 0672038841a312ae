#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dfseg/cli.hpp"

#ifndef DFSEG_SOURCE_DIR
#define DFSEG_SOURCE_DIR "."
#endif

using namespace dfseg;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(DFSEG_SOURCE_DIR) / "data" / "fixture";

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "dfseg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::string kConfig = (kFixture / "fixture.cfg").string();

}  // namespace

TEST(Cli, EvalOnFixture) {
  const CliRun r = run({"eval", "--config", kConfig});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.err.empty());
  EXPECT_NE(r.out.find("| stub-head | 0.609 |"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("| scene_11 |"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const CliRun missing = run({"eval", "--config", "/nonexistent/dfseg/x.cfg"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("/nonexistent/dfseg/x.cfg"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"eval"}).code, 1);
  EXPECT_EQ(run({"eval", "--config", kConfig, "--bogus"}).code, 1);
  EXPECT_EQ(run({"forward-demo", "--seed", "abc"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);

  const fs::path bad = fs::temp_directory_path() / "dfseg_cli_bad.cfg";
  std::ofstream(bad) << "[eval]\niou_threshold = 2\n";
  const CliRun invalid = run({"eval", "--config", bad.string()});
  EXPECT_EQ(invalid.code, 1);
  EXPECT_NE(invalid.err.find("dfseg_cli_bad.cfg:2"), std::string::npos) << invalid.err;
}

TEST(Cli, BinaryExitStatus) {
#ifdef DFSEG_CLI_PATH
  const std::string exe = DFSEG_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("eval --config " + kConfig), 0);
  EXPECT_EQ(status("eval --config /nonexistent.cfg"), 2);
  EXPECT_EQ(status("frobnicate"), 1);
#else
  GTEST_SKIP() << "built without the CLI path";
#endif
}

TEST(Cli, ForwardDemoIsDeterministic) {
  const CliRun a = run({"forward-demo", "--seed", "5"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out.rfind("forward-demo seed=5 input=64x64\n", 0), 0u);
  EXPECT_NE(a.out.find("mask_logits [3x10x16x16]"), std::string::npos);
  for (const char* w : {"1", "2", "4"}) EXPECT_EQ(run({"forward-demo", "--seed", "5", "--workers", w}).out, a.out);
  EXPECT_NE(run({"forward-demo", "--seed", "6"}).out, a.out);
  const CliRun sized = run({"forward-demo", "--seed", "5", "--config", kConfig});
  EXPECT_NE(sized.out.find("query_embeddings [2x8x16]"), std::string::npos) << sized.out;
}

TEST(Cli, EvalIsDeterministicAcrossWorkers) {
  const std::string base = run({"eval", "--config", kConfig}).out;
  for (const char* w : {"1", "2", "3", "6"}) EXPECT_EQ(run({"eval", "--config", kConfig, "--workers", w}).out, base);
}

TEST(Cli, OutFileMatchesStdout) {
  const fs::path out = fs::temp_directory_path() / "dfseg_cli_eval.md";
  fs::remove(out);
  const CliRun r = run({"eval", "--config", kConfig, "--out", out.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(out), run({"eval", "--config", kConfig}).out);
  EXPECT_EQ(run({"eval", "--config", kConfig, "--out", "/nonexistent/dir/x.md"}).code, 2);
}

TEST(Cli, RasterizedLabelsScorePerfectly) {
  const fs::path dir = fs::temp_directory_path() / "dfseg_cli_raster";
  fs::create_directories(dir);
  const fs::path json = dir / "gt.json";
  const CliRun r = run({"rasterize", "--labels", (kFixture / "labels").string(), "--images",
                     (kFixture / "images").string(), "--num-classes", "3", "--out", json.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const PredictionSet set = load_predictions(json);
  EXPECT_EQ(set.size(), 12u);

  const fs::path cfg = dir / "gt.cfg";
  std::ofstream(cfg) << "[dataset]\nroot = " << fs::absolute(kFixture).string() << "\n[eval]\npredictions = gt.json\n";
  const CliRun e = run({"eval", "--config", cfg.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("| 1.000 | 1.000 | 1.000 | 1.000 | 24 | 0 | 0 | 1.000 | 1.000 |"), std::string::npos) << e.out;

  EXPECT_EQ(run({"rasterize", "--labels", "/nonexistent/labels", "--out", json.string()}).code, 2);
  EXPECT_EQ(run({"rasterize", "--labels", (kFixture / "labels").string(), "--out", json.string()}).code, 1)
      << "class ids above --num-classes must be rejected";
}

TEST(Cli, BenchReplayCsv) {
  const CliRun r = run({"bench", "--config", (kFixture / "replay.cfg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("Model,F1-score,", 0), 0u);
  EXPECT_NE(r.out.find("\nreplay,0.609,0.368,0.636,0.583,"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.substr(r.out.size() - 3), ",2\n");
}
