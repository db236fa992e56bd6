#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pcnarx_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(PCNARX_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  TempDir tmp;
  const std::string d = tmp.path.string();
  CHECK(run("simulate --n 0 --out " + d + "/a") == 2);
  CHECK(run("simulate --system pendulum --out " + d + "/a") == 2);
  CHECK(run("simulate --config " + d + "/missing.json --out " + d + "/a") == 2);
  CHECK(run("fit --ed " + d + "/nowhere --out " + d + "/b") == 2);
  fs::create_directories(tmp.path / "empty");
  CHECK(run("validate --model " + d + "/model.json --data " + d + "/empty --out " + d + "/c") == 2);
  CHECK(run("bogus") != 0);
}

TEST_CASE("simulate, fit, stats and validate end to end") {
  TempDir tmp;
  const std::string d = tmp.path.string();
  const std::string sim = "simulate --system duffing --n 6 --duration 3 --seed 4 ";
  REQUIRE(run(sim + "--out " + d + "/ed") == 0);
  REQUIRE(run(sim + "--out " + d + "/ed2") == 0);
  CHECK(slurp(tmp.path / "ed" / "manifest.json") == slurp(tmp.path / "ed2" / "manifest.json"));
  CHECK(slurp(tmp.path / "ed" / "run_00003.csv") == slurp(tmp.path / "ed2" / "run_00003.csv"));

  // replaying the echoed config reproduces the campaign
  REQUIRE(run("simulate --config " + d + "/ed/config.json --out " + d + "/ed3") == 0);
  CHECK(slurp(tmp.path / "ed" / "run_00005.csv") == slurp(tmp.path / "ed3" / "run_00005.csv"));

  REQUIRE(run("fit --ed " + d + "/ed --out " + d + "/fit --min-selected 6 --p-max 2 --allow-unqualified true") ==
          0);
  CHECK(fs::exists(tmp.path / "fit" / "model.json"));
  CHECK(fs::exists(tmp.path / "fit" / "candidates.csv"));

  const std::string stats = "stats --model " + d + "/fit/model.json --n 200 --seed 3 ";
  REQUIRE(run(stats + "--out " + d + "/s1") == 0);
  REQUIRE(run(stats + "--out " + d + "/s2") == 0);
  CHECK(slurp(tmp.path / "s1" / "density.csv") == slurp(tmp.path / "s2" / "density.csv"));
  CHECK(slurp(tmp.path / "s1" / "statistics.csv") == slurp(tmp.path / "s2" / "statistics.csv"));
  CHECK(run(stats.substr(0, stats.find("--n")) + "--n 10 --out " + d + "/s3") == 2);

  REQUIRE(run("simulate --system duffing --n 4 --duration 3 --seed 8 --sampling mc --out " + d + "/val") == 0);
  REQUIRE(run("validate --model " + d + "/fit/model.json --data " + d + "/val --out " + d + "/v") == 0);
  CHECK(fs::exists(tmp.path / "v" / "summary.json"));
  REQUIRE(run("predict --model " + d + "/fit/model.json --data " + d + "/val --out " + d + "/p") == 0);
  CHECK(fs::exists(tmp.path / "p" / "predictions.csv"));
}
