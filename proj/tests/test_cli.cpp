#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quantobs/cli.hpp"
#include "quantobs/errors.hpp"
#include "quantobs/io.hpp"
#include "support.hpp"

using namespace quantobs;
using io::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "quantobs_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string write_scratch(const std::string& name, const std::string& text) {
  auto path = scratch(name);
  std::ofstream(path) << text;
  return path.string();
}

const char* kFixtures[] = {"example1.json", "e1.json", "e2.json", "dfm_nzi.json", "example5.json"};

}  // namespace

TEST_CASE("system documents parse and round trip") {
  for (const char* name : kFixtures) {
    auto doc = testsupport::load(name);
    REQUIRE(doc.x0_bound.has_value());
    auto again = io::system_from_json(io::to_json(doc.system, doc.x0_bound));
    CHECK(again.system.A() == doc.system.A());
    CHECK(again.system.inputs() == doc.system.inputs());
    CHECK(io::system_hash(again.system) == io::system_hash(doc.system));
  }
  CHECK(io::system_hash(testsupport::load("e1.json").system) !=
        io::system_hash(testsupport::load("e2.json").system));
  CHECK(io::hex64(255) == "00000000000000ff");
}

TEST_CASE("parse errors name the problem") {
  try {
    io::parse_system_text("{\"A\": [[1]],\n  \"B\": ");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  try {
    io::parse_system_text(R"({"A": [[0.5]], "B": [[1]], "C": [[1]], "D": [[0]],
      "inputs": [[0]], "quantizer": [{"breakpoints": [0.5], "levels": [0]}]})");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("quantizer") != std::string::npos);
  }
  CHECK_THROWS_AS(io::parse_system_text(R"({"A": [[0.5]]})"), ParseError);
  CHECK_THROWS_AS(io::load_system_file(testsupport::fixture("missing.json")), ParseError);
  // Scalar inputs are accepted for a single input channel.
  auto doc = io::parse_system_text(R"({"A": [[0.5]], "B": [[1]], "C": [[1]], "D": [[0]],
      "inputs": [0, 1], "quantizer": [{"breakpoints": [0.5], "levels": [0, 1]}]})");
  CHECK(doc.system.alphabet_size() == 2);
  CHECK_FALSE(doc.x0_bound.has_value());
}

TEST_CASE("every fixture analyzes without error") {
  for (const char* name : kFixtures) {
    auto r = run({"analyze", testsupport::fixture(name), "--no-timestamp"});
    CHECK(r.code == cli::kExitOk);
    auto j = json::parse(r.out);
    CHECK(j["report"]["errors"].empty());
    CHECK(j.contains("system_hash"));
    CHECK_FALSE(j.contains("timing"));
  }
}

TEST_CASE("analysis verdicts through the tool") {
  auto verdict = [](const char* name) {
    auto r = run({"analyze", testsupport::fixture(name), "--no-timestamp"});
    return json::parse(r.out)["report"]["summary"]["verdict"].get<std::string>();
  };
  CHECK(verdict("e1.json") == "finite_memory");
  CHECK(verdict("e2.json") == "finite_memory");
  CHECK(verdict("dfm_nzi.json") == "not_finite_memory");
  CHECK(verdict("example5.json") == "not_asymptotically_observable");
}

TEST_CASE("report output is byte stable and written to --out") {
  auto a = run({"analyze", testsupport::fixture("e1.json"), "--no-timestamp"});
  auto b = run({"analyze", testsupport::fixture("e1.json"), "--no-timestamp"});
  CHECK(a.out == b.out);
  const auto path = scratch("report.json").string();
  auto c = run({"analyze", testsupport::fixture("e1.json"), "--no-timestamp", "--out", path});
  CHECK(c.code == 0);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == a.out);
  auto timed = run({"analyze", testsupport::fixture("e1.json")});
  CHECK(json::parse(timed.out).contains("timing"));

  auto o1 = run({"observe", testsupport::fixture("e1.json"), "--trials", "50", "--seed", "7"});
  auto o2 = run({"observe", testsupport::fixture("e1.json"), "--trials", "50", "--seed", "7",
                 "--threads", "1"});
  CHECK(o1.out == o2.out);
}

TEST_CASE("distance through the tool") {
  auto e1 = json::parse(run({"distance", testsupport::fixture("e1.json")}).out);
  CHECK(e1["kind"] == "LowerBound");
  CHECK(e1["d"].get<double>() > 0.0);
  auto dfm = json::parse(run({"distance", testsupport::fixture("dfm_nzi.json")}).out);
  CHECK(dfm["kind"] == "Witness");
  CHECK(dfm["y"][0].get<double>() == 0.5);
  CHECK(run({"distance", testsupport::fixture("e2.json")}).code == cli::kExitPrecondition);
  CHECK(run({"distance", testsupport::fixture("example5.json")}).code == cli::kExitPrecondition);
}

TEST_CASE("enumeration budget from the environment") {
  setenv("QUANTOBS_BUDGET", "2", 1);
  auto limited = json::parse(run({"analyze", testsupport::fixture("e1.json"), "--no-timestamp"}).out);
  CHECK(limited["report"]["summary"]["verdict"] != "finite_memory");
  CHECK_FALSE(limited["report"]["errors"].empty());
  auto flag = json::parse(run({"analyze", testsupport::fixture("e1.json"), "--no-timestamp",
                               "--budget", "1000000"})
                              .out);
  CHECK(flag["report"]["summary"]["verdict"] == "finite_memory");
  setenv("QUANTOBS_BUDGET", "lots", 1);
  CHECK(run({"analyze", testsupport::fixture("e1.json")}).code == cli::kExitParse);
  unsetenv("QUANTOBS_BUDGET");
}

TEST_CASE("observe through the tool") {
  auto e2 = json::parse(run({"observe", testsupport::fixture("e2.json"), "--T", "auto",
                             "--trials", "100", "--horizon", "30"})
                            .out);
  CHECK(e2["T"] == 1);
  CHECK(e2["summary"]["max_last_error_time"].get<int>() <= 1);
  auto e1 = json::parse(run({"observe", testsupport::fixture("e1.json"), "--trials", "100"}).out);
  CHECK(e1["summary"]["violations"] == 0);
  CHECK(e1["summary"]["max_last_error_time"].get<int>() < e1["T"].get<int>());
  auto fixed = json::parse(run({"observe", testsupport::fixture("e1.json"), "--T", "6",
                                "--trials", "10"})
                               .out);
  CHECK(fixed["T"] == 6);
  CHECK(run({"observe", testsupport::fixture("example5.json")}).code == cli::kExitInapplicable);
  CHECK(run({"observe", testsupport::fixture("e1.json"), "--T", "zero"}).code == cli::kExitParse);

  const auto csv = scratch("trace.csv").string();
  CHECK(run({"observe", testsupport::fixture("e2.json"), "--trials", "3", "--horizon", "8",
             "--csv", csv})
            .code == 0);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,u,y,y_hat,e");
}

TEST_CASE("psi subcommands through the tool") {
  const auto ex5 = testsupport::fixture("example5.json");
  auto built = json::parse(run({"psi", "build", ex5, "--depth", "4"}).out);
  CHECK(built["nodes"].size() == 30);
  auto verified = run({"psi", "verify", ex5, "--depth", "4"});
  CHECK(verified.code == 0);
  CHECK(json::parse(verified.out)["ok"] == true);
  auto attack = json::parse(run({"psi", "attack", ex5, "--depth", "4", "--observer-T", "5"}).out);
  CHECK(attack["error_times"] == json::array({2, 4, 6, 8}));
  auto constant = json::parse(run({"psi", "attack", ex5, "--observer", "constant"}).out);
  CHECK(constant["error_times"] == json::array({2, 4, 6, 8}));
  CHECK(run({"psi", "build", testsupport::fixture("e1.json")}).code == cli::kExitInapplicable);
  CHECK(run({"psi", "explode", ex5}).code == cli::kExitParse);
}

TEST_CASE("demo table") {
  auto r = run({"demo", "example1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("11") != std::string::npos);
  CHECK(run({"demo", "nothing"}).code == cli::kExitParse);
}

TEST_CASE("exit codes for bad invocations") {
  CHECK(run({}).code == cli::kExitParse);
  CHECK(run({"analyze"}).code == cli::kExitParse);
  CHECK(run({"frobnicate"}).code == cli::kExitParse);
  CHECK(run({"analyze", testsupport::fixture("missing.json")}).code == cli::kExitParse);
  const auto broken = write_scratch("broken.json", "{\"A\": [[1]");
  auto r = run({"analyze", broken});
  CHECK(r.code == cli::kExitParse);
  CHECK_FALSE(r.err.empty());
  CHECK(run({"--version"}).code == 0);
}
