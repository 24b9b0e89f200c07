#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "wasserflow/csv.hpp"

using namespace wasserflow;

TEST_SUITE_BEGIN("csv");

namespace {

struct Cleanup {
  std::string path;
  ~Cleanup() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("format_double round-trips and is stable") {
  for (double x : {0.0, 1.0, -0.5, 0.1, 1e-17, 3.141592653589793, 12345.6789, -2.2e300}) {
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
    CHECK(format_double(x) == s);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("paths csv round-trip with config header") {
  Cleanup c{"paths_test.csv"};
  std::vector<PathSample> paths;
  PathSample p = PathSample::zeros(4);
  p.values = {0.0, 0.25, -0.5, 0.125, 1.0};
  paths.push_back(p);
  p.values = {0.0, -1.0, 2.0, -3.0, 4.0};
  paths.push_back(p);
  write_paths_csv(c.path, paths, {{"seed", "7"}, {"n", "64"}});

  std::ifstream is(c.path);
  std::string first;
  std::getline(is, first);
  CHECK(first == "# n = 64");

  const std::vector<PathSample> back = read_paths_csv(c.path);
  REQUIRE(back.size() == 2);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(back[s].grid_m == 4);
    for (int k = 0; k <= 4; ++k) CHECK(back[s].values[k] == paths[s].values[k]);
  }
}

TEST_CASE("single path t,value format") {
  Cleanup c{"path_test.csv"};
  PathSample p = PathSample::zeros(2);
  p.values = {0.0, 0.5, 0.25};
  write_path_csv(c.path, p, {});
  std::ifstream is(c.path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,value");
  std::getline(is, line);
  CHECK(line == "0,0");
  std::getline(is, line);
  CHECK(line == "0.5,0.5");
  std::getline(is, line);
  CHECK(line == "1,0.25");
}

TEST_CASE("values csv round-trip") {
  Cleanup c{"values_test.csv"};
  const std::vector<double> vals = {1.5, -0.25, 3e-8};
  write_values_csv(c.path, vals, {{"seed", "1"}});
  const std::vector<double> back = read_values_csv(c.path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == vals[i]);
}

TEST_CASE("rate table columns") {
  Cleanup c{"rate_test.csv"};
  RateTable t;
  t.sigma2 = 0.5;
  RateRow r;
  r.n = 128;
  r.q = 1;
  r.estimate = 0.25;
  r.stderr_boot = 0.01;
  r.samples = 64;
  r.grid_m = 16;
  r.solver = "assignment";
  r.seed = 9;
  r.floor = 0.05;
  t.rows.push_back(r);
  write_rate_table_csv(c.path, t, {});
  std::ifstream is(c.path);
  std::string line;
  std::getline(is, line);  // sigma2 comment
  std::getline(is, line);
  CHECK(line == "n,q,estimate,stderr,N,grid_m,solver,seed,floor");
  std::getline(is, line);
  CHECK(line == "128,1,0.25,0.01,64,16,assignment,9,0.05");
}

TEST_CASE("malformed inputs are usage errors") {
  Cleanup c{"bad_test.csv"};
  {
    std::ofstream os(c.path);
    os << "wrong,header\n1,2\n";
  }
  CHECK_THROWS_AS(read_paths_csv(c.path), UsageError);
  CHECK_THROWS_AS(read_values_csv(c.path), UsageError);
  CHECK_THROWS_AS(read_paths_csv("definitely_missing.csv"), UsageError);
}

TEST_SUITE_END();
