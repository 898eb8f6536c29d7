#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <csignal>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = MSM_CLI_PATH;
const std::string kSmoke = std::string(MSM_SOURCE_DIR) + "/configs/smoke.json";

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("msm_cli_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// Smoke configuration with the workdir moved into a temporary directory.
struct Workspace {
  TempDir dir;
  std::string args() const { return "-c " + kSmoke + " --set workdir=" + dir.path().string(); }
  fs::path operator/(const std::string& rel) const { return dir.path() / rel; }
};

}  // namespace

TEST(Cli, FullPipelineAndReports) {
  Workspace ws;
  const CliRun gen = run(ws.args() + " gen-data");
  ASSERT_EQ(gen.code, 0) << gen.output;
  const std::string manifest = slurp(ws / "corpus/manifest.json");
  ASSERT_FALSE(manifest.empty());
  ASSERT_EQ(run(ws.args() + " gen-data").code, 0);
  EXPECT_EQ(slurp(ws / "corpus/manifest.json"), manifest);

  const CliRun train = run(ws.args() + " train");
  ASSERT_EQ(train.code, 0) << train.output;
  const json first = json::parse(slurp(ws / "models/metrics.json"));
  EXPECT_FALSE(first["resumed_step1"].get<bool>());
  const CliRun again = run(ws.args() + " train");
  ASSERT_EQ(again.code, 0) << again.output;
  const json second = json::parse(slurp(ws / "models/metrics.json"));
  EXPECT_TRUE(second["resumed_step1"].get<bool>());
  EXPECT_NE(again.output.find("resumed"), std::string::npos);
  // Resuming step 1 and retraining step 2 reproduces the final loss.
  EXPECT_NEAR(first["epochs"].back()["loss"].get<double>(), second["epochs"].back()["loss"].get<double>(), 1e-6);
  ASSERT_EQ(run(ws.args() + " train --no-resume").code, 0);
  EXPECT_FALSE(json::parse(slurp(ws / "models/metrics.json"))["resumed_step1"].get<bool>());

  const CliRun eval = run(ws.args() + " eval");
  ASSERT_EQ(eval.code, 0) << eval.output;
  const json report = json::parse(slurp(ws / "reports/benchmark.json"));
  std::set<std::string> methods;
  for (const auto& c : report["cells"]) methods.insert(c["method"].get<std::string>());
  EXPECT_EQ(methods, (std::set<std::string>{"masked", "average", "weighted"}));
  EXPECT_EQ(report["run_config"]["workdir"], ws.dir.path().string());
  const std::string text = slurp(ws / "reports/benchmark.txt");
  EXPECT_EQ(text.rfind("# run_config ", 0), 0u);
  EXPECT_NE(text.find("masked"), std::string::npos);

  const std::string out = (ws / "out.png").string();
  const CliRun enh = run(ws.args() + " enhance --pairs-dir " + (ws / "corpus/4").string() + " -i " +
                      (ws / "corpus/5/0_x.png").string() + " -o " + out);
  ASSERT_EQ(enh.code, 0) << enh.output;
  EXPECT_NE(enh.output.find("attention:"), std::string::npos);
  EXPECT_TRUE(fs::exists(out));
  const CliRun pair = run(ws.args() + " enhance --pair " + (ws / "corpus/4/0_x.png").string() + "," +
                       (ws / "corpus/4/0_y.png").string() + " -i " + (ws / "corpus/5/0_x.png").string() + " -o " + out +
                       " -m average");
  EXPECT_EQ(pair.code, 0) << pair.output;
  EXPECT_EQ(run(ws.args() + " enhance --pairs-dir " + (ws / "corpus/4").string() + " -i " +
                (ws / "corpus/5/0_x.png").string() + " -o " + out + " -m sharpest")
                .code,
            2);
}

TEST(Cli, ExitCodes) {
  Workspace ws;
  EXPECT_EQ(run(ws.args() + " print-config").code, 0);
  EXPECT_EQ(run(ws.args() + " --set net.grid=0 print-config").code, 2);
  EXPECT_EQ(run(ws.args() + " --set net.gird=2 print-config").code, 2);
  EXPECT_EQ(run(ws.args() + " frobnicate").code, 2);
  EXPECT_EQ(run("-c " + (ws / "absent.json").string() + " print-config").code, 3);
  EXPECT_EQ(run(ws.args() + " train").code, 3);  // no corpus yet
  EXPECT_EQ(run(ws.args() + " eval").code, 3);   // no checkpoint
  const CliRun serve = run(ws.args() + " serve");
  EXPECT_EQ(serve.code, 3);
  EXPECT_NE(serve.output.find("train"), std::string::npos);

  // A corpus generated with other settings is refused rather than silently reused.
  ASSERT_EQ(run(ws.args() + " gen-data").code, 0);
  EXPECT_EQ(run(ws.args() + " --set corpus.seed=99 train").code, 2);
}

TEST(Cli, ServeAnswersHealthz) {
  Workspace ws;
  ASSERT_EQ(run(ws.args() + " gen-data").code, 0);
  ASSERT_EQ(run(ws.args() + " train").code, 0);
  const int port = 20000 + static_cast<int>(getpid() % 20000);
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    const std::string cfg = kSmoke, set_w = "workdir=" + ws.dir.path().string(),
                      set_p = "service.port=" + std::to_string(port);
    execl(kCli.c_str(), kCli.c_str(), "-c", cfg.c_str(), "--set", set_w.c_str(), set_p.c_str(), "serve",
          static_cast<char*>(nullptr));
    _exit(127);
  }
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    res = client.Get("/healthz");
  }
  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "ok");
}
