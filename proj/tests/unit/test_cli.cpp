#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "tamsm/simulation.hpp"
#include "tamsm/text_io.hpp"

using namespace tamsm;
using namespace tamsm::testing;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

// A simulated cohort on disk with a matching design file.
struct Workspace {
  TempDir dir{"cli"};
  std::string cohort = dir.file("cohort");
  std::string design = dir.file("design.txt");
  std::string b2 = dir.file("b2.txt");

  explicit Workspace(std::size_t n = 150) {
    cli::save_cohort_dir(simulate_cohort(DgpConfig{}, n, 3, 1), cohort);
    io::write_file(design, DgpConfig::treatment_design().to_string());
    io::write_file(b2, "form=constant b=2\n");
  }
};

}  // namespace

TEST_CASE("grid syntax") {
  CHECK(cli::parse_grid("0:1:0.5") == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(cli::parse_grid("0:1:0.1").size() == 11);
  CHECK_THROWS(cli::parse_grid("0:1"));
  CHECK_THROWS(cli::parse_grid("0:1:0"));
  CHECK_THROWS(cli::parse_grid("2:1:0.5"));
}

TEST_CASE("cohort directories round-trip") {
  TempDir dir("cohortdir");
  const auto c = simulate_cohort(DgpConfig{}, 50, 1, 1);
  cli::save_cohort_dir(c, dir.path());
  CHECK(cli::load_cohort_dir(dir.path()) == c);
  CHECK(cli::load_cohort_dir(fixture_dir("waitlist251")).size() == 251);
}

TEST_CASE("estimate with the identity scenario prints the Kaplan-Meier table") {
  Workspace ws;
  auto r = run({"estimate", "--input", ws.cohort, "--design", ws.design, "--grid", "0:2:1",
                "--threads", "1"});
  REQUIRE(r.code == 0);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 4);  // header + 3 grid points
  CHECK(rows[0] == "time,estimate,lower,upper,scenario");
  const auto km = kaplan_meier(cli::load_cohort_dir(ws.cohort));
  for (int k = 0; k < 3; ++k)
    CHECK(rows[static_cast<std::size_t>(k) + 1] ==
          io::format_report(k) + "," + io::format_report(kaplan_meier_at(km, k)) +
              ",,,constant(b=1)");
}

TEST_CASE("estimate with a bootstrap writes a band, reproducibly") {
  Workspace ws(60);
  const std::string out1 = ws.dir.file("s1.csv"), out2 = ws.dir.file("s2.csv");
  for (const auto& out : {out1, out2}) {
    auto r = run({"estimate", "--input", ws.cohort, "--design", ws.design, "--accel", ws.b2,
                  "--grid", "0:4:2", "--bootstrap", "1500", "--level", "0.95", "--seed", "8",
                  "--out", out});
    REQUIRE(r.code == 0);
  }
  const auto text = io::read_file(out1);
  CHECK(text == io::read_file(out2));
  auto rows = lines(text);
  REQUIRE(rows.size() == 4);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].find(",,") == std::string::npos);
    CHECK(rows[k].find("constant(b=2)") != std::string::npos);
  }
}

TEST_CASE("weights: one row per subject per treatment time") {
  TempDir dir("weights");
  const auto schema = schema_x();
  Cohort c({subject("A", {0}, {treat(1.0), censor(3.0)}),
            subject("B", {1}, {treat(2.0), censor(3.0)})},
           3.0, schema);
  cli::save_cohort_dir(c, dir.file("c"));
  io::write_file(dir.file("d"), "1");
  io::write_file(dir.file("g"), "form=constant b=2");
  auto r = run({"weights", "--input", dir.file("c"), "--design", dir.file("d"), "--accel",
                dir.file("g")});
  REQUIRE(r.code == 0);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "subject_id,time,weight");
  // Intercept-only: dL = 1/2 at t=1 for both, 1 at t=2 for B.
  CHECK(rows[1] == "A,1,1.5");
  CHECK(rows[2] == "A,2,1.5");
  CHECK(rows[3] == "B,1,0.5");
  CHECK(rows[4] == "B,2,0.5");
}

TEST_CASE("residuals are reported in long format per stratum") {
  Workspace ws;
  auto r = run({"residuals", "--input", ws.cohort, "--design", ws.design, "--strata",
                "I(x_lci>6)", "--grid", "1:2:1"});
  REQUIRE(r.code == 0);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "time,stratum,mean");
  CHECK(rows[1].rfind("1,0,", 0) == 0);
  CHECK(rows[2].rfind("1,1,", 0) == 0);
}

TEST_CASE("fit-treatment writes coefficients and residual paths") {
  Workspace ws;
  const auto resid = ws.dir.file("resid.csv");
  auto r = run({"fit-treatment", "--input", ws.cohort, "--design", ws.design, "--residuals",
                resid});
  REQUIRE(r.code == 0);
  auto rows = lines(r.out);
  CHECK(rows[0] == "time,term,increment,cumulative,rank_skipped");
  CHECK((rows.size() - 1) % 5 == 0);
  CHECK(lines(io::read_file(resid))[0] == "subject_id,time,residual");
}

TEST_CASE("validate-timechange prints one report row") {
  TempDir dir("vtc");
  io::write_file(dir.file("g"), "form=constant b=2");
  auto r = run({"validate-timechange", "--lambda", "1", "--accel", dir.file("g"), "--horizon",
                "1", "--paths", "2000", "--seed", "4"});
  REQUIRE(r.code == 0);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "lambda,horizon,paths,empirical_mean,predicted,std_error,z,pass");
  CHECK(rows[1].rfind("1,1,2000,", 0) == 0);
}

TEST_CASE("simulate and oracle are deterministic") {
  TempDir dir("sim");
  for (const auto* sub : {"a", "b"})
    REQUIRE(run({"simulate", "--n", "200", "--seed", "5", "--out", dir.file(sub)}).code == 0);
  CHECK(io::read_file(dir.file("a/events.csv")) == io::read_file(dir.file("b/events.csv")));
  CHECK(io::read_file(dir.file("a/baseline.csv")) == io::read_file(dir.file("b/baseline.csv")));
  CHECK(io::read_file(dir.file("a/cohort.cfg")) == "horizon=10\nprocesses=phys,dialysis2yr\n");

  auto o1 = run({"oracle", "--n", "3000", "--seed", "2", "--grid", "0:10:5"});
  auto o2 = run({"oracle", "--n", "3000", "--seed", "2", "--grid", "0:10:5", "--threads", "3"});
  REQUIRE(o1.code == 0);
  CHECK(o1.out == o2.out);
  CHECK(lines(o1.out).size() == 4);
}

TEST_CASE("errors are single lines with subcommand context") {
  auto r = run({"estimate", "--input", "/nonexistent/cohort", "--design", "d", "--grid", "0:1:1"});
  CHECK(r.code != 0);
  CHECK(r.err == "error: estimate: cohort directory not found: /nonexistent/cohort\n");

  Workspace ws;
  r = run({"estimate", "--input", ws.cohort, "--design", ws.dir.file("missing.txt"), "--grid",
           "0:1:1"});
  CHECK(r.code != 0);
  CHECK(r.err.find("missing.txt") != std::string::npos);
  CHECK(lines(r.err).size() == 1);

  r = run({"estimate", "--input", ws.cohort, "--design", ws.design, "--grid", "0:1:1",
           "--frobnicate"});
  CHECK(r.code != 0);
  CHECK(r.err.rfind("error: estimate: ", 0) == 0);

  r = run({"estimate", "--input", ws.cohort, "--design", ws.design, "--grid", "0:1:1",
           "--bootstrap", "10"});
  CHECK(r.code != 0);
  CHECK(r.err.find("--seed") != std::string::npos);

  r = run({"simulate", "--n", "10", "--out", ws.dir.file("x")});
  CHECK(r.code != 0);
  CHECK(r.err.find("--seed") != std::string::npos);

  io::write_file(ws.dir.file("bad.txt"), "form=constant b=0");
  r = run({"weights", "--input", ws.cohort, "--design", ws.design, "--accel",
           ws.dir.file("bad.txt")});
  CHECK(r.code != 0);
  CHECK(r.err.find("error: weights: nonpositive rate") == 0);
}

TEST_CASE("help lists every flag a subcommand consumes") {
  auto r = run({"estimate", "--help"});
  CHECK(r.code == 0);
  for (const char* flag : {"--input", "--design", "--accel", "--grid", "--bootstrap", "--level",
                           "--seed", "--floor", "--out", "--threads"})
    CHECK(r.out.find(flag) != std::string::npos);
}
