#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <vector>

#include "wasserflow/config.hpp"

using namespace wasserflow;

TEST_SUITE_BEGIN("config");

namespace {

RunConfig parse(std::vector<const char*> args) {
  args.insert(args.begin(), "wasserflow");
  return parse_config(static_cast<int>(args.size()), args.data());
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content) : path(name) {
    std::ofstream os(path);
    os << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("minimal flags get documented defaults") {
  const RunConfig c = parse({"simulate", "--system", "doubling", "--seed", "7"});
  CHECK(c.subcommand == "simulate");
  CHECK(c.seed == 7);
  CHECK(c.system == "doubling");
  CHECK(c.grid_m == 16);
  CHECK(c.samples == 16);
  CHECK(c.burn_in == 1000);
  CHECK(c.quad_step == 0.02);
}

TEST_CASE("missing seed is a usage error") {
  CHECK_THROWS_AS(parse({"simulate", "--system", "doubling"}), UsageError);
}

TEST_CASE("beta range is enforced") {
  CHECK_THROWS_AS(parse({"rates", "--system", "lsv", "--beta", "0.6", "--seed", "1",
                         "--n-grid", "128,256,512"}),
                  UsageError);
  CHECK_THROWS_AS(parse({"simulate", "--system", "lsv", "--beta", "0.0", "--seed", "1"}),
                  UsageError);
}

TEST_CASE("unknown flags and config keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse({"simulate", "--seed", "1", "--frobnicate", "3"}),
                       doctest::Contains("frobnicate"), UsageError);
  TempFile f("cfg_unknown.cfg", "frobnicate = 3\n");
  CHECK_THROWS_WITH_AS(parse({"simulate", "--seed", "1", "--config", "cfg_unknown.cfg"}),
                       doctest::Contains("frobnicate"), UsageError);
}

TEST_CASE("config file fills values; explicit flags win") {
  TempFile f("cfg_basic.cfg",
             "# comment line\n"
             "seed = 42\n"
             "samples = 99\n"
             "\n"
             "[simulate]\n"
             "grid-m = 32\n"
             "\n"
             "[rates]\n"
             "bootstrap = 11\n");
  SUBCASE("file values apply") {
    const RunConfig c = parse({"simulate", "--config", "cfg_basic.cfg"});
    CHECK(c.seed == 42);
    CHECK(c.samples == 99);
    CHECK(c.grid_m == 32);  // from the matching section
  }
  SUBCASE("flag overrides the file") {
    const RunConfig c = parse({"simulate", "--config", "cfg_basic.cfg", "--samples", "5"});
    CHECK(c.samples == 5);
    CHECK(c.seed == 42);
  }
  SUBCASE("foreign sections are ignored") {
    const RunConfig c = parse({"simulate", "--config", "cfg_basic.cfg"});
    CHECK(c.bootstrap == 200);  // untouched default; [rates] block skipped
  }
  SUBCASE("--config may precede the subcommand") {
    const RunConfig c = parse({"--config", "cfg_basic.cfg", "simulate"});
    CHECK(c.seed == 42);
    CHECK(c.grid_m == 32);
  }
}

TEST_CASE("boolean keys in config files") {
  TempFile f("cfg_bool.cfg",
             "seed = 5\n"
             "[decompose]\n"
             "suspension = true\n"
             "ulam-n = 64\n");
  const RunConfig c = parse({"decompose", "--config", "cfg_bool.cfg"});
  CHECK(c.suspension);
  CHECK(c.ulam_n == 64);
}

TEST_CASE("config file grammar errors") {
  TempFile f("cfg_bad.cfg", "this line has no equals\n");
  CHECK_THROWS_AS(parse({"simulate", "--seed", "1", "--config", "cfg_bad.cfg"}), UsageError);
  CHECK_THROWS_AS(parse({"simulate", "--seed", "1", "--config", "cfg_missing.cfg"}),
                  UsageError);
}

TEST_CASE("read_config_file parses sections and comments") {
  TempFile f("cfg_read.cfg",
             "a = 1\n"
             "[sec]\n"
             "b = two # trailing comment\n");
  const auto entries = read_config_file("cfg_read.cfg");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0][0] == "");
  CHECK(entries[0][1] == "a");
  CHECK(entries[0][2] == "1");
  CHECK(entries[1][0] == "sec");
  CHECK(entries[1][1] == "b");
  CHECK(entries[1][2] == "two");
}

TEST_CASE("wq validation") {
  CHECK_THROWS_WITH_AS(parse({"wq", "--seed", "1", "--q", "1"}), doctest::Contains("a/b"),
                       UsageError);
  CHECK_THROWS_AS(parse({"wq", "--seed", "1", "--a", "x.csv", "--b", "y.csv", "--q", "0.5"}),
                  UsageError);
  CHECK_THROWS_AS(parse({"wq", "--seed", "1", "--a", "x.csv", "--b", "y.csv", "--metric",
                         "sup", "--solver", "sorted"}),
                  UsageError);
}

TEST_CASE("rates n-grid parsing") {
  const RunConfig c = parse({"rates", "--seed", "3", "--n-grid", "128,256,512"});
  REQUIRE(c.n_grid.size() == 3);
  CHECK(c.n_grid[0] == 128.0);
  CHECK(c.n_grid[2] == 512.0);
  CHECK_THROWS_WITH_AS(parse({"rates", "--seed", "3", "--n-grid", "128,abc"}),
                       doctest::Contains("n-grid"), UsageError);
  CHECK_THROWS_WITH_AS(parse({"rates", "--seed", "3"}), doctest::Contains("n-grid"),
                       UsageError);
}

TEST_SUITE_END();
