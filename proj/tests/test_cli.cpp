#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "vhj/runner.hpp"

using namespace vhj;
namespace fs = std::filesystem;

namespace {

const char *kVerify = R"(# small verify run
m = 3
dim = 1
radius = 4
source.family = radial-power
source.params = 8, 3, 0
initial.family = polynomial
initial.params = 1, 2
seed = 3
[grid]
h = 0.1
[scheme]
T = 0.5
snapshots = 5
[verify]
suites = transform, barrier, ordering
transform_samples = 2000
[barrier]
chi = 1, 0.9, 1.05
beta = 0.7
samples = 2000
)";

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string &name) {
  const fs::path d = fs::temp_directory_path() / ("vhj_test_" + name);
  fs::remove_all(d);
  return d;
}

} // namespace

TEST(Config, ParsesSectionsAndComments) {
  const auto c = Config::from_string("a = 1 # note\n[grid]\nh = 0.5\nlist = 1, 2,3\n");
  EXPECT_EQ(c.real("a"), 1.0);
  EXPECT_EQ(c.real("grid.h"), 0.5);
  EXPECT_EQ(c.reals("grid.list"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.real("missing", 7.0), 7.0);
}

TEST(Config, ErrorsNameLocation) {
  try {
    Config::from_string("a = 1\nb 2\n", "x.cfg");
    FAIL();
  } catch (const ConfigurationError &e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos);
  }
  try {
    Config::from_string("a = 1\na = 2\n", "x.cfg");
    FAIL();
  } catch (const ConfigurationError &e) {
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
  const auto c = Config::from_string("m = three\n", "y.cfg");
  try {
    c.real("m");
    FAIL();
  } catch (const ConfigurationError &e) {
    EXPECT_NE(std::string(e.what()).find("y.cfg:1"), std::string::npos);
  }
}

TEST(Config, MissingExponentNamed) {
  const auto c = Config::from_string("dim = 1\nradius = 2\nsource.family = constant\nsource.params = 1\n");
  try {
    problem_from(c);
    FAIL();
  } catch (const ConfigurationError &e) {
    EXPECT_NE(std::string(e.what()).find("'m'"), std::string::npos);
  }
}

TEST(Config, ProblemFamilies) {
  const auto c = Config::from_string(
      "m = 3\nradius = 2\nsource.family = manufactured\nsource.params = 1, 2\nsource.lambda = 2\n"
      "initial.family = exponential\ninitial.params = 1, 0.5\n");
  const auto p = problem_from(c);
  EXPECT_NEAR(p.source(Point{1.0, 0.0}), 8.0, 1e-12);
  EXPECT_NEAR(p.initial(Point{2.0, 0.0}), std::exp(1.0), 1e-12);
}

TEST(Io, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Runner, ReproducibleOutputs) {
  const auto c = Config::from_string(kVerify);
  const auto a = scratch("a"), b = scratch("b");
  const auto ra = run_into("verify", c, a, 3);
  run_into("verify", c, b, 3);
  EXPECT_TRUE(ra.pass());
  for (const char *f : {"summary.json", "manifest.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto manifest = ojson::parse(slurp(a / "manifest.json"));
  for (const auto &e : manifest["files"])
    EXPECT_EQ(sha256_hex(slurp(a / e["file"].get<std::string>())), e["sha256"].get<std::string>());
}

TEST(Runner, DesignedFailureGivesVerdictExit) {
  Config c = Config::from_string(kVerify);
  c.set("barrier.beta", "0.999");
  c.set("barrier.chi", "1, 0.5, 1.5");
  c.set("verify.suites", "barrier");
  const auto r = run_into("verify", c, scratch("fail"), 1);
  EXPECT_EQ(exit_code(r), 2);
  EXPECT_FALSE(r.summary["verdicts"]["barrier-inequality-chi"].get<bool>());
}

TEST(Runner, SweepWritesDisjointRuns) {
  Config c = Config::from_string(kVerify);
  c.set("sweep.command", "verify");
  c.set("sweep.key", "barrier.beta");
  c.set("sweep.values", "0.7, 0.8, 0.999");
  c.set("verify.suites", "barrier");
  const auto d = scratch("sweep");
  EXPECT_EQ(run_sweep(c, d, 1, 2), 2);
  const auto s = ojson::parse(slurp(d / "summary.json"));
  ASSERT_EQ(s["runs"].size(), 3u);
  EXPECT_EQ(s["runs"][0]["exit"], 0);
  EXPECT_EQ(s["runs"][2]["exit"], 2);
  EXPECT_TRUE(fs::exists(d / "run_001" / "summary.json"));
}

TEST(Runner, UnknownSubcommand) { EXPECT_THROW(pipeline("plot"), ConfigurationError); }
