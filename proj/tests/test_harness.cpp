#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kpower/harness.hpp"

using namespace kpower;
namespace fs = std::filesystem;

namespace {

Json embed_complete() {
  return Json::parse(R"({
    "schema": "kpower.config/1", "kind": "embed",
    "model": {"N": 60, "p": 1.0, "k": 2}, "host": {"kind": "complete"},
    "regularity": {"epsilon": 0.15, "d": 0.5, "trials": 20},
    "embed": {"t0": 6, "r": 1, "xi": 0.2, "delta": 0.02, "epsilon": 0.35},
    "seeds": [0, 1]
  })");
}

Json count_audit() {
  return Json::parse(R"({
    "kind": "count-audit", "model": {"p": 0.5, "k": 2}, "host": {"n": 30},
    "count": {"mode": "counting-lemma", "t": 3, "tolerance": 0.2},
    "seeds": {"from": 5, "count": 6}
  })");
}

std::string error_path(const Json& raw) {
  try {
    parse_config(raw);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<none>";
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kpower_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, ErrorsNameTheField) {
  Json j = count_audit();
  j["seeds"] = Json::array();
  EXPECT_EQ(error_path(j), "seeds");
  j = count_audit();
  j["kind"] = "fishing";
  EXPECT_EQ(error_path(j), "kind");
  j = count_audit();
  j["model"]["p"] = 1.5;
  EXPECT_EQ(error_path(j), "model.p");
  j = embed_complete();
  j["kind"] = "resilience-sweep";
  j["r_grid"] = {0.0, 2.0};
  EXPECT_EQ(error_path(j), "r_grid[1]");
  j = count_audit();
  j["assertions"] = Json::parse(R"([{"metric": "success", "op": "!=", "value": 1}])");
  EXPECT_EQ(error_path(j), "assertions[0].op");
  EXPECT_EQ(error_path(Json::array()), "");
}

TEST(Config, HashIgnoresOutputAndThreads) {
  Json a = count_audit();
  Json b = a;
  b["output"] = "/tmp/x";
  b["threads"] = 4;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b["host"]["n"] = 31;
  EXPECT_NE(config_hash(a), config_hash(b));
  // key order does not matter
  EXPECT_EQ(config_hash(Json::parse(R"({"a":1,"b":2})")), config_hash(Json::parse(R"({"b":2,"a":1})")));
}

TEST(Config, EnvironmentOverrides) {
  ::setenv("KPOWER_THREADS", "3", 1);
  ::setenv("KPOWER_OUTPUT", "/tmp/kp_env", 1);
  auto c = parse_config(count_audit());
  EXPECT_EQ(c.threads, 3u);
  EXPECT_EQ(c.output, "/tmp/kp_env");
  ::setenv("KPOWER_THREADS", "zero", 1);
  EXPECT_EQ(error_path(count_audit()), "KPOWER_THREADS");
  ::unsetenv("KPOWER_THREADS");
  ::unsetenv("KPOWER_OUTPUT");
}

TEST(Harness, EmbedCompleteHost) {
  auto out = run_experiment(parse_config(embed_complete()));
  ASSERT_EQ(out.records.size(), 2u);
  for (const auto& r : out.records) {
    EXPECT_EQ(r["status"], "ok");
    EXPECT_EQ(r["metrics"]["length"], 42);
  }
}

TEST(Harness, SummaryMatchesRecords) {
  auto c = parse_config(count_audit());
  c.output = scratch("summary").string();
  auto out = run_experiment(c);
  std::ifstream jl(fs::path(c.output) / "trials.jsonl");
  auto recs = read_jsonl(jl);
  ASSERT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs.front()["seed"], 5);
  std::ifstream cs(fs::path(c.output) / "summary.csv");
  std::stringstream buf;
  buf << cs.rdbuf();
  EXPECT_EQ(summary_csv(summarize(recs)), buf.str());
  auto rows = parse_summary_csv(buf.str());
  ASSERT_EQ(rows.size(), out.summary.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].metric, out.summary[i].metric);
    EXPECT_EQ(rows[i].mean, out.summary[i].mean);
  }
  fs::remove_all(c.output);
}

TEST(Harness, SummaryStatistics) {
  std::vector<Json> recs{
      Json{{"status", "ok"}, {"param", 0.5}, {"metrics", {{"x", 1}, {"v", {{"a", true}}}}}},
      Json{{"status", "failed"}, {"param", 0.5}, {"metrics", {{"x", 3}, {"v", {{"a", false}}}}}},
  };
  auto rows = summarize(recs);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].metric, "success");
  EXPECT_EQ(rows[0].mean, 0.5);
  EXPECT_EQ(rows[1].metric, "v.a");
  EXPECT_EQ(rows[2].metric, "x");
  EXPECT_EQ(rows[2].min, 1);
  EXPECT_EQ(rows[2].max, 3);
  EXPECT_EQ(rows[2].mean, 2);
  EXPECT_EQ(sweep_tsv(rows, "r"), "# schema=kpower.sweep/1\nr\tsuccess_fraction\ttrials\n0.5\t0.5\t2\n");
}

TEST(Harness, ParallelEqualsSerial) {
  auto c = parse_config(count_audit());
  auto a = run_trials(c, 1);
  auto b = run_trials(c, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(comparable(a[i]).dump(), comparable(b[i]).dump());
}

TEST(Harness, ReplayAndTamper) {
  auto c = parse_config(count_audit());
  auto recs = run_trials(c, 1);
  for (const auto& r : recs) EXPECT_TRUE(replay(c, r).identical);
  Json bad = recs[0];
  bad["seed"] = 999;
  EXPECT_FALSE(replay(c, bad).identical);
  Json other = count_audit();
  other["host"]["n"] = 31;
  EXPECT_THROW(replay(parse_config(other), recs[0]), HashMismatch);
}

TEST(Harness, SweepEndpoints) {
  Json j = embed_complete();
  j["kind"] = "resilience-sweep";
  j["adversary"] = {{"kind", "random"}};
  j["r_grid"] = {0.0, 1.0};
  j["seeds"] = {0};
  auto out = run_experiment(parse_config(j));
  ASSERT_EQ(out.records.size(), 2u);
  // r = 0 reproduces the plain embed run
  auto base = run_trials(parse_config(embed_complete()), 1);
  Json m0 = out.records[0]["metrics"];
  EXPECT_EQ(m0["length"], base[0]["metrics"]["length"]);
  EXPECT_EQ(m0["deleted_edges"], 0);
  EXPECT_EQ(out.records[0]["status"], "ok");
  EXPECT_NE(out.records[1]["status"], "ok");
}

TEST(Harness, AssertionsDecidePass) {
  std::vector<SummaryRow> rows{{format_double(0.05), "success", 10, 0.9, 0, 1},
                               {format_double(0.45), "success", 10, 0.1, 0, 1}};
  Assertion lo{"success", "mean", ">=", 0.8, 0.05};
  Assertion hi{"success", "mean", "<=", 0.2, 0.45};
  Assertion all{"success", "mean", ">=", 0.5, std::nullopt};
  Assertion missing{"nope", "mean", ">=", 0, std::nullopt};
  auto res = check_assertions({lo, hi, all, missing}, rows);
  EXPECT_TRUE(res[0].pass);
  EXPECT_TRUE(res[1].pass);
  EXPECT_FALSE(res[2].pass);
  EXPECT_EQ(res[2].observed, 0.1);
  EXPECT_FALSE(res[3].pass);
}

#ifdef KPOWER_CLI
TEST(Cli, ExitCodes) {
  auto dir = scratch("cli");
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const Json& j) {
    std::ofstream(dir / name) << j.dump();
    return (dir / name).string();
  };
  Json pass = count_audit();
  pass["assertions"] = Json::parse(R"([{"metric": "success", "op": ">=", "value": 0}])");
  Json fail = count_audit();
  fail["assertions"] = Json::parse(R"([{"metric": "success", "op": ">=", "value": 2}])");
  Json broken = count_audit();
  broken["seeds"] = Json::array();
  const std::string cli = KPOWER_CLI;
  auto run = [&](const std::string& args) {
    const int rc = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const auto out = (dir / "out").string();
  EXPECT_EQ(run("run -c " + write("pass.json", pass) + " -o " + out), 0);
  EXPECT_EQ(run("run -c " + write("fail.json", fail)), 1);
  EXPECT_EQ(run("run -c " + write("broken.json", broken)), 2);
  EXPECT_EQ(run("embed -c " + (dir / "pass.json").string()), 2);
  EXPECT_EQ(run("replay -c " + (dir / "pass.json").string() + " -r " + out + "/trials.jsonl"), 0);
  Json other = pass;
  other["host"]["n"] = 31;
  EXPECT_EQ(run("replay -c " + write("other.json", other) + " -r " + out + "/trials.jsonl"), 3);
  fs::remove_all(dir);
}
#endif
