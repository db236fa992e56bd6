#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "pcnarx/errors.hpp"
#include "pcnarx/io.hpp"

using namespace pcnarx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("pcnarx_io_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("csv round trip is bit exact") {
  TempDir tmp("csv");
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Eigen::VectorXd a(200), b(200);
  for (int i = 0; i < 200; ++i) {
    a[i] = g(rng) * std::pow(10.0, (i % 40) - 20);
    b[i] = std::nextafter(1.0, 2.0) + i;
  }
  a[0] = std::numeric_limits<double>::denorm_min();
  a[1] = -0.0;
  a[2] = std::numeric_limits<double>::max();
  b[3] = std::numeric_limits<double>::infinity();
  write_csv(tmp.path / "a.csv", {"a", "b"}, {a, b});
  std::vector<std::string> header;
  const auto cols = read_csv(tmp.path / "a.csv", &header);
  CHECK(header == std::vector<std::string>{"a", "b"});
  REQUIRE(cols.size() == 2);
  for (int i = 0; i < 200; ++i) {
    CHECK(cols[0][i] == a[i]);
    CHECK(cols[1][i] == b[i]);
  }
  CHECK(std::signbit(cols[0][1]));
}

TEST_CASE("csv errors") {
  TempDir tmp("csverr");
  CHECK_THROWS_AS(write_csv(tmp.path / "x.csv", {"a"}, {Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)}),
                  ArgumentError);
  CHECK_THROWS_AS(write_csv(tmp.path / "x.csv", {"a", "b"}, {Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)}),
                  ArgumentError);
  CHECK_THROWS_AS(read_csv(tmp.path / "missing.csv"), ArgumentError);
  {
    std::ofstream(tmp.path / "bad.csv") << "a,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS(read_csv(tmp.path / "bad.csv"), ArgumentError);
  {
    std::ofstream(tmp.path / "word.csv") << "a\nfoo\n";
  }
  CHECK_THROWS_AS(read_csv(tmp.path / "word.csv"), ArgumentError);
  {
    std::ofstream(tmp.path / "bad.json") << "{ not json";
  }
  CHECK_THROWS_AS(read_json(tmp.path / "bad.json"), ArgumentError);
}

TEST_CASE("experiment round trip") {
  TempDir tmp("exp");
  Experiment e;
  e.dt = 0.01;
  e.xi = Eigen::Vector3d(1.0 / 3.0, 2.0, -7e-9);
  e.x = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0).array().sin();
  e.y = e.x.array().square() / 7.0;
  write_experiment(tmp.path, "e", e);
  const Experiment r = read_experiment(tmp.path, "e");
  CHECK(r.dt == e.dt);
  CHECK(r.xi == e.xi);
  CHECK(r.x == e.x);
  CHECK(r.y == e.y);
  CHECK(r.aux.size() == 0);
  const auto cols = read_csv(tmp.path / "e.csv");
  CHECK(cols[0][49] == doctest::Approx(0.49));

  e.aux = -e.y;
  write_experiment(tmp.path, "f", e, {"u", "v", "w"});
  std::vector<std::string> header;
  read_csv(tmp.path / "f.csv", &header);
  CHECK(header == std::vector<std::string>{"t", "u", "v", "w"});
  CHECK(read_experiment(tmp.path, "f").aux == e.aux);
}

TEST_CASE("campaign directory round trip") {
  TempDir tmp("camp");
  CampaignSettings s;
  s.system = SystemId::boucwen;
  s.n = 3;
  s.duration = 2.0;
  s.seed = 5;
  const Campaign c = run_campaign(s, default_input_model(s.system));
  REQUIRE(c.failures() == 0);
  const auto manifest = write_campaign(tmp.path / "c", c);
  CHECK(fs::exists(tmp.path / "c" / "manifest.json"));
  const LoadedCampaign back = read_campaign(tmp.path / "c");
  CHECK(back.manifest == manifest);
  CHECK(back.settings.n == 3);
  CHECK(back.settings.seed == 5);
  CHECK(back.settings.system == SystemId::boucwen);
  CHECK(back.input.dim() == c.input.dim());
  REQUIRE(back.experiments.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.experiments[i].xi == c.experiments[i].xi);
    CHECK(back.experiments[i].x == c.experiments[i].x);
    CHECK(back.experiments[i].y == c.experiments[i].y);
    CHECK(back.experiments[i].aux == c.experiments[i].aux);
  }
  CHECK_THROWS_AS(read_campaign(tmp.path / "nowhere"), ArgumentError);
}
