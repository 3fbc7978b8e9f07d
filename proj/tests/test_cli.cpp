#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// End-to-end tests of the command-line binary. The binary path and fixture
// directory arrive through the GQC_CLI / GQC_FIXTURES environment variables
// (wired up by the build).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

using json = nlohmann::json;

namespace {

std::string cli() {
  const char* p = std::getenv("GQC_CLI");
  REQUIRE_MESSAGE(p != nullptr, "GQC_CLI not set");
  return p;
}

std::string fix(const std::string& name) {
  const char* p = std::getenv("GQC_FIXTURES");
  REQUIRE_MESSAGE(p != nullptr, "GQC_FIXTURES not set");
  return std::string(p) + "/" + name;
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  static int counter = 0;
  std::string tmp = "cli_out_" + std::to_string(counter++) + ".txt";
  std::string cmd = cli() + " " + args + " > " + tmp + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.code = WEXITSTATUS(rc);
  std::ifstream in(tmp, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  std::remove(tmp.c_str());
  return r;
}

json parse(const RunResult& r) { return json::parse(r.out); }

}  // namespace

TEST_CASE("solve decides single variants") {
  RunResult r = run("solve " + fix("C6.json") + " " + fix("2C3.json") +
                    " --game bij --n 2 --k 2");
  CHECK(r.code == 0);
  json doc = parse(r);
  CHECK(doc["duplicator_wins"] == false);
  CHECK(doc["system_size"].get<int>() >= 0);

  r = run("solve " + fix("K2.json") + " " + fix("K3.json") +
          " --game fun --positive --n 1 --k 2");
  CHECK(r.code == 0);
  CHECK(parse(r)["duplicator_wins"] == true);

  SUBCASE("identical structures on both sides") {
    r = run("solve " + fix("treeT.json") + " " + fix("treeT.json") +
            " --game bij --negated --n 2 --k 3");
    CHECK(r.code == 0);
    CHECK(parse(r)["duplicator_wins"] == true);
  }
  SUBCASE("strategy dump is a valid document") {
    r = run("solve " + fix("K2.json") + " " + fix("K3.json") +
            " --game fun --n 1 --k 2 --strategy");
    CHECK(r.code == 0);
    json doc2 = parse(r);
    CHECK(doc2["strategy"].is_array());
    CHECK(!doc2["strategy"].empty());
  }
}

TEST_CASE("cube emits all eight verdicts with the monotonicity flag") {
  RunResult r =
      run("cube " + fix("treeT.json") + " " + fix("treeT.json") + " --n 1 --k 2");
  CHECK(r.code == 0);
  json doc = parse(r);
  CHECK(doc["monotone"] == true);
  CHECK(doc["verdicts"].size() == 8);
  for (const auto& v : doc["verdicts"]) CHECK(v["duplicator_wins"] == true);

  r = run("cube " + fix("C6.json") + " " + fix("2C3.json") + " --n 1 --k 2");
  CHECK(r.code == 0);
  doc = parse(r);
  for (const auto& v : doc["verdicts"]) CHECK(v["duplicator_wins"] == true);

  r = run("cube " + fix("C6.json") + " " + fix("2C3.json") + " --n 1 --k 3");
  CHECK(r.code == 0);
  doc = parse(r);
  CHECK(doc["monotone"] == true);
  for (const auto& v : doc["verdicts"])
    if (v["xi"] == true && v["xs"] == true) CHECK(v["duplicator_wins"] == false);
}

TEST_CASE("comonad builds truncations and checks laws") {
  RunResult r =
      run("comonad " + fix("single_vertex.json") + " --n 1 --k 1 --depth 2");
  CHECK(r.code == 0);
  json doc = parse(r);
  CHECK(doc["laws_ok"] == true);

  r = run("comonad " + fix("K2.json") + " --n 2 --k 2 --depth 2");
  CHECK(r.code == 0);
  doc = parse(r);
  CHECK(doc["laws_ok"] == true);
  CHECK(doc["counit_hom"] == true);
  CHECK(doc["qn_hom"] == true);
  CHECK(doc["hella_size"].get<int>() > 0);

  SUBCASE("mutated comultiplication fails the laws") {
    r = run("comonad " + fix("K2.json") + " --n 2 --k 2 --depth 2 --mutate");
    CHECK(r.code == 0);
    doc = parse(r);
    CHECK(doc["mutated"] == true);
    CHECK(doc["laws_ok"] == false);
    CHECK(!doc["violation"].get<std::string>().empty());
  }
  SUBCASE("dot output draws the canonical decomposition") {
    r = run("comonad " + fix("K2.json") +
            " --n 1 --k 1 --depth 2 --format dot");
    CHECK(r.code == 0);
    CHECK(r.out.find("digraph") != std::string::npos);
  }
}

TEST_CASE("decompose search") {
  RunResult r = run("decompose search " + fix("treeT.json") +
                    " --n 1 --k 2 --round-trip");
  CHECK(r.code == 0);
  json doc = parse(r);
  CHECK(doc["found"] == true);
  CHECK(doc["round_trip"]["valid"] == true);
  CHECK(doc["round_trip"]["structured"] == true);
  CHECK(doc["round_trip"]["width"].get<int>() <= 2);

  r = run("decompose search " + fix("K4.json") + " --n 1 --k 2 --format text");
  CHECK(r.code == 0);
  CHECK(r.out == "NONE\n");
}

TEST_CASE("decompose validate reports the printed examples") {
  RunResult r = run("decompose validate " + fix("hypergraphTprime.json") + " " +
                    fix("etd_tprime_2node.json"));
  CHECK(r.code == 0);
  json doc = parse(r);
  CHECK(doc["kind"] == "etd");
  CHECK(doc["valid"] == true);
  CHECK(doc["width"] == 1);
  CHECK(doc["arity"] == 2);

  r = run("decompose validate " + fix("treeT.json") + " " +
          fix("td_t_per_edge.json"));
  CHECK(r.code == 0);
  doc = parse(r);
  CHECK(doc["kind"] == "td");
  CHECK(doc["valid"] == true);
  CHECK(doc["width"] == 1);

  r = run("decompose validate " + fix("treeT.json") + " " +
          fix("etd_t_structured.json") + " --n 1 --k 2");
  CHECK(r.code == 0);
  doc = parse(r);
  CHECK(doc["structured"] == true);
}

TEST_CASE("decompose conversions round-trip through files") {
  RunResult r = run("decompose td2etd " + fix("treeT.json") + " " +
                    fix("td_t_per_edge.json") + " --k 1 --round-trip");
  CHECK(r.code == 0);
  json doc = parse(r);
  CHECK(doc["round_trip"]["valid"] == true);
  CHECK(doc["round_trip"]["width"].get<int>() <= 1);

  r = run("decompose etd2td " + fix("treeT.json") + " " +
          fix("etd_t_succinct.json") + " --k 1 --round-trip");
  CHECK(r.code == 0);
  doc = parse(r);
  CHECK(doc["round_trip"]["valid"] == true);

  r = run("decompose etd2coalg " + fix("treeT.json") + " " +
          fix("etd_t_structured.json") + " --n 1 --k 2 --round-trip");
  CHECK(r.code == 0);
  doc = parse(r);
  CHECK(doc["laws_ok"] == true);
  CHECK(doc["round_trip"]["stable"] == true);

  // Feed the emitted coalgebra back through coalg2etd.
  std::ofstream("cli_coalg.json") << doc["coalgebra"].dump();
  r = run("decompose coalg2etd " + fix("treeT.json") +
          " cli_coalg.json --round-trip");
  std::remove("cli_coalg.json");
  CHECK(r.code == 0);
  doc = parse(r);
  CHECK(doc["valid"] == true);
  CHECK(doc["structured"] == true);
  CHECK(doc["round_trip"]["stable"] == true);
}

TEST_CASE("eval evaluates formula sentences") {
  RunResult r = run("eval " + fix("K2.json") + " " +
                    fix("formula_exists_loop.json"));
  CHECK(r.code == 0);
  CHECK(parse(r)["value"] == false);
}

TEST_CASE("exit codes") {
  CHECK(run("solve no_such_file.json " + fix("K2.json")).code == 2);
  CHECK(run("bogus-subcommand").code == 1);
  CHECK(run("solve " + fix("K2.json")).code == 1);  // missing second file
  CHECK(run("decompose etd2coalg " + fix("treeT.json") + " " +
            fix("etd_t_per_edge.json") + " --n 1 --k 2")
            .code == 2);  // unstructured input
}

TEST_CASE("identical configs give byte-identical output") {
  std::string args = "cube " + fix("C6.json") + " " + fix("2C3.json") +
                     " --n 1 --k 2";
  RunResult r1 = run(args);
  RunResult r2 = run(args);
  CHECK(r1.code == 0);
  CHECK(r1.out == r2.out);

  args = "decompose search " + fix("K3.json") + " --n 1 --k 2";
  r1 = run(args);
  r2 = run(args);
  CHECK(r1.out == r2.out);
}
