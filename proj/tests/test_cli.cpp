#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("biwarp_cli_test_" + std::to_string(::getpid()));
  ScratchDir() { fs::create_directories(path); }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const fs::path& scratch() {
  static const ScratchDir dir;
  return dir.path;
}

Run run(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + BIWARP_CLI + "\" " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("example listing") {
  const Run r = run("example --list");
  CHECK(r.code == 0);
  CHECK(r.out.find("ex1") != std::string::npos);
  CHECK(r.out.find("ex2") != std::string::npos);
  const Run show = run("example --show ex2");
  CHECK(show.code == 0);
  CHECK(show.out.find("psi") != std::string::npos);
  CHECK(run("example --show ex9").code == 2);
}

TEST_CASE("verify the second example") {
  const fs::path json = scratch() / "ex2.json";
  const Run r = run("verify --example ex2 --grid 1 --json " + json.string());
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(json));
  CHECK(doc["schema"] == "biwarp-report/1");
  CHECK(doc["summary"]["fail"] == 0);
  CHECK(doc["points"].size() == 1);
}

TEST_CASE("verify the first example exits cleanly") {
  const Run r = run("verify --example ex1 --random 2");
  CHECK(r.code == 0);
  CHECK(r.out.find("fiber-dependent") != std::string::npos);
}

TEST_CASE("tight tolerance fails an assertion") {
  const Run r = run("verify --example ex2 --grid 1 --tol-identity 1e-30");
  CHECK(r.code == 1);
}

TEST_CASE("input errors exit with 2") {
  const fs::path bad = scratch() / "bad.manifest";
  write(bad, "params = [u, v]\ndomain = {u: [0, 1], v: [0, 1]}\npsi = [\"u +* v\", \"v\", \"0\"]\n");
  const Run r = run("verify --manifest " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.err.find(":3:") != std::string::npos);
  CHECK(run("verify --manifest " + (scratch() / "missing.manifest").string()).code == 2);
  CHECK(run("verify").code == 2);
  CHECK(run("verify --example ex2 --manifest " + bad.string()).code == 2);
  CHECK(run("verify --example ex2 --grid 2 --random 2").code == 2);
  CHECK(run("verify --example ex1 --const theta0=pi/2").code == 2);
  CHECK(run("verify --example ex2 --ambient kenmotsu").code == 2);
  CHECK(run("energy --example ex2 --box q=0:1").code == 2);
  CHECK(run("frobnicate").code == 2);
}

TEST_CASE("user manifest") {
  const fs::path ok = scratch() / "plane.manifest";
  write(ok, "params = [u, v]\ndomain = {u: [0, 1], v: [0, 1]}\npsi = [u, \"v\", \"0\"]\n");
  const Run r = run("verify --manifest " + ok.string() + " --grid 1");
  CHECK(r.code == 0);
}

TEST_CASE("reports are deterministic") {
  const fs::path a = scratch() / "a.json", b = scratch() / "b.json";
  REQUIRE(run("verify --example ex2 --random 3 --seed 5 --json " + a.string()).code == 0);
  REQUIRE(run("verify --example ex2 --random 3 --seed 5 --json " + b.string()).code == 0);
  CHECK(slurp(a) == slurp(b));
  const fs::path c = scratch() / "c.json";
  REQUIRE(run("verify --example ex2 --random 3 --seed 6 --json " + c.string()).code == 0);
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("energy report") {
  const fs::path json = scratch() / "energy.json";
  const Run r = run("energy --example ex2 --order 6 --json " + json.string());
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(json));
  CHECK(doc.contains("energy"));
  const fs::path out = scratch() / "energy.txt";
  CHECK(run("energy --example ex2 --no-oracle --out " + out.string()).code == 0);
  CHECK(!slurp(out).empty());
}
