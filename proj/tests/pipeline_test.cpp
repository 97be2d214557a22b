#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "railtrace/pipeline.hpp"

namespace fs = std::filesystem;

namespace railtrace {
namespace {

const fs::path kData = RAILTRACE_DATA_DIR;
const char* kStages[] = {"build", "snap", "confirm", "infer", "validate", "stats"};

struct Run {
  int exit_code = -1;
  std::string output;
};

Run run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" RAILTRACE_CLI "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "railtrace-XXXXXX").string();
    path_ = mkdtemp(tmpl.data());
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void run_all(const fs::path& config, const fs::path& out) {
  for (const char* stage : kStages) {
    auto r = run_cli(std::string(stage) + " --config \"" + config.string() + "\" --out \"" + out.string() + "\"");
    ASSERT_EQ(r.exit_code, 0) << stage << ": " << r.output;
  }
}

TEST(Pipeline, EndToEndProducesEveryArtifact) {
  TempDir out;
  run_all(kData / "config.toml", out.path());
  for (const char* name : {artifact::kMainline, artifact::kSummary, artifact::kSnaps, artifact::kRejected,
                           artifact::kConfirmed, artifact::kInferred, artifact::kAudit, artifact::kValidation,
                           artifact::kMissed, artifact::kStats}) {
    EXPECT_TRUE(fs::exists(out.path() / name)) << name;
  }
  auto audit = nlohmann::json::parse(slurp(out.path() / artifact::kAudit));
  EXPECT_GT(audit["accepted"].size(), 0u);
  EXPECT_EQ(audit["remaining_groups"].size() + audit["accepted"].size(), audit["initial_groups"].get<std::size_t>());
  auto inferred = nlohmann::json::parse(slurp(out.path() / artifact::kInferred));
  std::size_t n_inferred = 0;
  for (const auto& f : inferred["features"]) n_inferred += f["properties"]["status"] == "inferred";
  EXPECT_GT(n_inferred, 0u);
}

TEST(Pipeline, RerunIsByteIdentical) {
  TempDir a, b;
  run_all(kData / "config.toml", a.path());
  run_all(kData / "config.toml", b.path());
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a.path())) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / entry.path().filename())) << entry.path().filename();
  }
  EXPECT_EQ(files, 10u);
}

TEST(Pipeline, WorkersDoNotChangeOutputs) {
  TempDir a, b;
  run_all(kData / "config.toml", a.path());
  for (const char* stage : kStages) {
    auto r = run_cli(std::string(stage) + " --workers 4 --config \"" + (kData / "config.toml").string() + "\" --out \"" +
                     b.path().string() + "\"");
    ASSERT_EQ(r.exit_code, 0) << r.output;
  }
  for (const auto& entry : fs::directory_iterator(a.path())) {
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / entry.path().filename())) << entry.path().filename();
  }
}

TEST(Pipeline, MissingInputFileIsExit2) {
  TempDir dir;
  std::ofstream(dir.path() / "config.toml") << "network = \"nope.geojson\"\n";
  auto r = run_cli("build --config \"" + (dir.path() / "config.toml").string() + "\"");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("nope.geojson"), std::string::npos) << r.output;
}

TEST(Pipeline, StageOutOfOrderIsExit3) {
  TempDir out;
  auto r = run_cli("infer --config \"" + (kData / "config.toml").string() + "\" --out \"" + out.path().string() + "\"");
  EXPECT_EQ(r.exit_code, 3) << r.output;
  EXPECT_NE(r.output.find(artifact::kConfirmed), std::string::npos) << r.output;
}

TEST(Pipeline, JunctionChainSummary) {
  TempDir out;
  auto r = run_cli("build --config \"" + (kData / "junction_chain" / "config.toml").string() + "\" --out \"" +
                   out.path().string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("6 links, 7 nodes"), std::string::npos) << r.output;
  auto summary = nlohmann::json::parse(slurp(out.path() / artifact::kSummary));
  EXPECT_EQ(summary["links"], 6);
  EXPECT_EQ(summary["nodes"], 7);
}

TEST(Pipeline, EnvironmentOverridesConfigAndFlagOverridesEnv) {
  TempDir env_dir, flag_dir;
  const std::string cfg = "--config \"" + (kData / "junction_chain" / "config.toml").string() + "\"";
  auto r = run_cli("build " + cfg, "RAILTRACE_OUT=\"" + env_dir.path().string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(env_dir.path() / artifact::kSummary));

  fs::remove(env_dir.path() / artifact::kSummary);
  r = run_cli("build " + cfg + " --out \"" + flag_dir.path().string() + "\"",
              "RAILTRACE_OUT=\"" + env_dir.path().string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(flag_dir.path() / artifact::kSummary));
  EXPECT_FALSE(fs::exists(env_dir.path() / artifact::kSummary));
}

TEST(Pipeline, BadFlagValueIsExit2) {
  TempDir out;
  auto r = run_cli("snap --snap-threshold-m -5 --config \"" + (kData / "config.toml").string() + "\" --out \"" +
                   out.path().string() + "\"");
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Config, ParsesAndResolvesRelativePaths) {
  auto cfg = parse_config_text(
      "# comment\nnetwork = \"net.geojson\"  # trailing\nobservations = /abs/obs.csv\nsnap_threshold_m = 48.768\n"
      "max_rounds = 4\nworkers = 2\n",
      "/base");
  EXPECT_EQ(cfg.network, fs::path("/base/net.geojson"));
  EXPECT_EQ(cfg.observations, fs::path("/abs/obs.csv"));
  EXPECT_DOUBLE_EQ(cfg.snap_threshold_m, 48.768);
  EXPECT_EQ(cfg.max_rounds, 4u);
  EXPECT_EQ(cfg.workers, 2u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config_text("bogus = 1\n", "/"), Error);
  EXPECT_THROW(parse_config_text("network\n", "/"), Error);
  EXPECT_THROW(parse_config_text("workers = 1.5\n", "/"), Error);
  EXPECT_THROW(parse_config_text("snap_threshold_m = far\n", "/"), Error);
  auto zero = parse_config_text("workers = 0\n", "/");
  EXPECT_THROW(zero.validate(), Error);
}

}  // namespace
}  // namespace railtrace
