#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "hdnsm/io.hpp"
#include "hdnsm/simulation.hpp"

using namespace hdnsm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hdnsm_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("csv round trip preserves values bit-for-bit") {
  TempDir tmp;
  DgpConfig cfg;
  cfg.n = 50;
  cfg.p = 7;
  cfg.seed = 101;
  const Dataset data = simulate_dgp(cfg);
  const std::string path = (tmp.path / "data.csv").string();
  write_dataset_csv(path, data);
  const Dataset back = load_csv_dataset(path, ColumnRoles{});
  CHECK(back.y == data.y);
  CHECK(back.t == data.t);
  CHECK(back.x == data.x);
  CHECK(back.x_names == data.x_names);
}

TEST_CASE("three-row file parses") {
  TempDir tmp;
  const std::string path = (tmp.path / "small.csv").string();
  std::ofstream(path) << "y,t,a,b\n0.1,0.2,1,2\n0.3,0.4,3,4\n0.5,0.6,5,6\n";
  const Dataset data = load_csv_dataset(path, ColumnRoles{});
  CHECK(data.n() == 3);
  CHECK(data.p() == 2);
  CHECK(data.x(2, 1) == 6.0);
}

TEST_CASE("missing values and columns are rejected with locations") {
  TempDir tmp;
  const std::string na_path = (tmp.path / "na.csv").string();
  std::ofstream(na_path) << "y,t,a\n0.1,0.2,1\n0.3,NA,3\n";
  // rows are file line numbers, header included
  CHECK_THROWS_WITH(load_csv_dataset(na_path, ColumnRoles{}), doctest::Contains("row 3"));
  CHECK_THROWS_WITH(load_csv_dataset(na_path, ColumnRoles{}), doctest::Contains("t"));

  const std::string miss_path = (tmp.path / "miss.csv").string();
  std::ofstream(miss_path) << "y,a\n0.1,1\n";
  CHECK_THROWS_WITH(load_csv_dataset(miss_path, ColumnRoles{}), doctest::Contains("t"));

  const std::string empty_path = (tmp.path / "empty.csv").string();
  std::ofstream(empty_path) << "";
  CHECK_THROWS(load_csv_dataset(empty_path, ColumnRoles{}));
}

TEST_CASE("explicit column roles select the named controls") {
  TempDir tmp;
  const std::string path = (tmp.path / "roles.csv").string();
  std::ofstream(path) << "out,dose,a,b,c\n0.1,0.2,1,2,3\n0.4,0.5,4,5,6\n";
  ColumnRoles roles;
  roles.outcome = "out";
  roles.treatment = "dose";
  roles.controls = {"c", "a"};
  const Dataset data = load_csv_dataset(path, roles);
  CHECK(data.p() == 2);
  CHECK(data.x_names == std::vector<std::string>{"c", "a"});
  CHECK(data.x(0, 0) == 3.0);
  CHECK(data.x(0, 1) == 1.0);
}

TEST_CASE("config file parsing and overrides") {
  TempDir tmp;
  const std::string path = (tmp.path / "run.conf").string();
  std::ofstream(path) << "# comment line\n"
                      << "seed=99\n"
                      << "taus=0.1,0.9\n"
                      << "B=33\n"
                      << "flavor=lasso\n"
                      << "bandwidth=0.08\n"
                      << "kernel=uniform\n"
                      << "penalize_intercept=true\n";
  RunConfig config;
  apply_config(config, parse_config_file(path));
  CHECK(config.seed == 99);
  CHECK(config.tau_list == std::vector<double>{0.1, 0.9});
  CHECK(config.bootstrap_reps == 33);
  CHECK_FALSE(config.use_post_lasso);
  CHECK(config.tuning.bandwidth_override.has_value());
  CHECK(*config.tuning.bandwidth_override == doctest::Approx(0.08));
  CHECK(config.tuning.kernel == KernelKind::Uniform);
  CHECK(config.tuning.penalize_intercept);
}

TEST_CASE("unknown keys and bad tau are rejected") {
  RunConfig config;
  CHECK_THROWS(apply_config(config, {{"not_a_key", "1"}}));
  apply_config(config, {{"taus", "0.5,1.5"}});
  CHECK_THROWS_WITH(validate_config(config), doctest::Contains("tau out of range"));
}

TEST_CASE("estimate mode requires an input path") {
  RunConfig config;
  config.mode = RunMode::Estimate;
  CHECK_THROWS(validate_config(config));
}

TEST_CASE("full simulate + estimate round trip through run()") {
  TempDir tmp;
  RunConfig sim;
  sim.mode = RunMode::Simulate;
  sim.output_dir = (tmp.path / "sim").string();
  sim.dgp.n = 120;
  sim.dgp.p = 10;
  sim.dgp.seed = 8;
  REQUIRE(run(sim) == 0);
  REQUIRE(fs::exists(tmp.path / "sim" / "data.csv"));

  RunConfig est;
  est.mode = RunMode::Estimate;
  est.input_path = (tmp.path / "sim" / "data.csv").string();
  est.output_dir = (tmp.path / "est").string();
  est.tuning.t_grid_size = 7;
  est.tuning.u_grid_size = 12;
  REQUIRE(run(est) == 0);
  for (const char* name : {"curves.csv", "alpha.csv", "selection.csv", "report.json"})
    CHECK(fs::exists(tmp.path / "est" / name));

  // q-hat columns monotone in tau at each t
  std::ifstream curves((tmp.path / "est" / "curves.csv").string());
  std::string header;
  std::getline(curves, header);
  std::string line;
  double prev_t = -1.0, prev_q = -1.0;
  while (std::getline(curves, line)) {
    double t, tau, mu, q;
    std::sscanf(line.c_str(), "%lf,%lf,%lf,%*[^,],%*[^,],%*[^,],%*[^,],%*[^,],%lf", &t, &tau, &mu,
                &q);
    if (t == prev_t) CHECK(q >= prev_q);
    prev_t = t;
    prev_q = q;
  }
}
