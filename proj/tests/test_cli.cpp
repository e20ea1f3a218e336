#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "potkit/cli.hpp"

using namespace potkit;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("potkit_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST(Report, CsvHeaderAndPrecision) {
  Table t{"demo", {"a", "b", "c", "d"}, {}};
  t.add_row({1.0 / 3.0, 7LL, true, std::string("x,\"y\"")});
  t.add_row({HUGE_VAL, -2LL, false, std::string("plain")});
  const auto lines = csv_lines(to_csv(t));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "a,b,c,d");
  EXPECT_EQ(lines[1], "0.333333333333,7,true,\"x,\"\"y\"\"\"");
  EXPECT_EQ(lines[2], "inf,-2,false,plain");
  EXPECT_THROW(t.add_row({1.0}), DimensionMismatch);
}

TEST(Report, EmptyTableHasHeaderOnly) {
  const Table t{"empty", {"n", "value"}, {}};
  EXPECT_EQ(to_csv(t), "n,value\n");
}

TEST(Report, JsonRoundTripIsExact) {
  Report r;
  r.experiment = "demo";
  r.params = {{"n", 3}};
  Table t{"values", {"x", "y"}, {}};
  const std::vector<double> xs{0.1, 1.0 / 3.0, std::ldexp(1.0, -60), 6.02214076e23};
  for (double x : xs) t.add_row({x, std::sqrt(x)});
  r.tables = {t};
  r.diagnostics = {{"flag", true}};
  const nlohmann::json back = nlohmann::json::parse(to_json(r).dump(2));
  EXPECT_EQ(back["experiment"], "demo");
  ASSERT_EQ(back["rows"].size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(back["rows"][i]["table"], "values");
    EXPECT_EQ(back["rows"][i]["x"].get<double>(), xs[i]);
    EXPECT_EQ(back["rows"][i]["y"].get<double>(), std::sqrt(xs[i]));
  }
}

TEST(Config, ParsesCommentsAndRejectsGarbage) {
  const auto cfg = cli::parse_config("# header\nexperiment = bm\n  d=4   # trailing\n\nbeta = 1.0\n");
  EXPECT_EQ(cfg.at("experiment"), "bm");
  EXPECT_EQ(cfg.at("d"), "4");
  EXPECT_EQ(cfg.at("beta"), "1.0");
  EXPECT_THROW(cli::parse_config("no equals sign\n"), UsageError);
  EXPECT_THROW(cli::parse_config("= 3\n"), UsageError);
  EXPECT_THROW(cli::parse_list("1,x"), UsageError);
  EXPECT_EQ(cli::parse_list("1e-2, 2").size(), 2u);
}

TEST(Cli, UsageErrorsExitOne) {
  const fs::path dir = scratch("usage");
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"nonsense"}).code, 1);
  const CliRun r = run({"bm", "--bogus", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"ladder", "--policy", "sideways", "--out", dir.string()}).code, 1);
  EXPECT_EQ(run({"ladder", "--tol", "no_such=1", "--out", dir.string()}).code, 1);
  EXPECT_EQ(run({"bm", "--d", "2", "--out", dir.string()}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, BmDimensionFourBetaOne) {
  const fs::path dir = scratch("bm");
  const CliRun r = run({"bm", "--d", "4", "--beta", "1.0", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("d=4 beta=1 kato=true s0=false"), std::string::npos);
  const auto lines = csv_lines(read_text(dir / "bm_classification.csv"));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "d,beta,in_kato,in_s0");
  EXPECT_EQ(lines[1], "4,1,true,false");
  const auto manifest = nlohmann::json::parse(read_text(dir / "bm_manifest.json"));
  EXPECT_EQ(manifest["seed"], 42);
  EXPECT_EQ(manifest["artifacts"][0], "bm_classification.csv");
  EXPECT_TRUE(manifest.contains("wall_time_seconds"));
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const fs::path dir = scratch("config");
  const fs::path cfg = dir / "run.cfg";
  write_text(cfg, "experiment = ladder\nn = 12\nformat = json\nout = " + (dir / "a").string() + "\n");
  ASSERT_EQ(run({"--config", cfg.string()}).code, 0);
  auto j = nlohmann::json::parse(read_text(dir / "a" / "ladder.json"));
  EXPECT_EQ(j["params"]["n"], 12);
  ASSERT_EQ(run({"ladder", "--config", cfg.string(), "--n", "8"}).code, 0);
  j = nlohmann::json::parse(read_text(dir / "a" / "ladder.json"));
  EXPECT_EQ(j["params"]["n"], 8);

  write_text(cfg, "experiment = ladder\nbogus_key = 1\n");
  EXPECT_EQ(run({"--config", cfg.string()}).code, 1);
  write_text(cfg, "experiment = disk\n");
  EXPECT_EQ(run({"ladder", "--config", cfg.string()}).code, 1);
  EXPECT_EQ(run({"--config", (dir / "missing.cfg").string()}).code, 1);
}

TEST(Cli, TolerancesResetBetweenRuns) {
  const fs::path dir = scratch("tol");
  const double before = tolerances().disk_verification_hard;
  ASSERT_EQ(run({"disk", "--n", "2", "--grid", "16", "--tol", "disk_verification_hard=0.5", "--out", dir.string()}).code, 0);
  EXPECT_EQ(tolerances().disk_verification_hard, 0.5);
  ASSERT_EQ(run({"disk", "--n", "2", "--grid", "16", "--out", dir.string()}).code, 0);
  EXPECT_EQ(tolerances().disk_verification_hard, before);
}

TEST(Cli, McMatchesOracle) {
  const fs::path dir = scratch("mc");
  ASSERT_EQ(run({"mc", "--paths", "4000", "--format", "json", "--out", dir.string()}).code, 0);
  const auto j = nlohmann::json::parse(read_text(dir / "mc.json"));
  const auto& d = j["diagnostics"];
  EXPECT_EQ(d["n_paths"], 4000);
  EXPECT_EQ(d["seed"], 42);
  EXPECT_LT(std::abs(d["z"].get<double>()), 5.0);
  EXPECT_EQ(run({"mc", "--paths", "10", "--out", dir.string()}).code, 1);
}

TEST(Cli, RerunsAreByteIdentical) {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"ladder", "--n", "20"},
           {"disk", "--n", "2,4", "--grid", "64"},
           {"mc", "--paths", "2000", "--seed", "9"},
           {"mc", "--model", "bm", "--x0", "0.5", "--paths", "500", "--t", "0.25"},
           {"classify", "--measure", "geometric"}}) {
    for (const fs::path& dir : {a, b}) {
      std::vector<std::string> full = args;
      full.insert(full.end(), {"--out", dir.string(), "--format", "json"});
      ASSERT_EQ(run(full).code, 0) << args[0];
    }
    const std::string name = args[0] + ".json";
    EXPECT_EQ(read_text(a / name), read_text(b / name)) << name;
  }
}

TEST(Cli, VerifyAllReportsFailures) {
  const fs::path dir = scratch("verify");
  const CliRun ok = run({"verify-all", "--only", "1,5", "--out", dir.string()});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("criterion 1 [PASS]"), std::string::npos);
  const CliRun bad = run({"verify-all", "--only", "7", "--out", dir.string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("criteria 7"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "verify-all_summary.csv"));
}

TEST(Cli, ChainDocumentRoundTrip) {
  const fs::path dir = scratch("chain");
  ASSERT_EQ(run({"ladder", "--n", "10", "--out", dir.string()}).code, 0);
  ASSERT_TRUE(fs::exists(dir / "ladder_chain.json"));
  std::string density;
  for (std::size_t x = 0; x <= 10; ++x) density += (x ? "," : "") + format_number(ladder::ladder_density(10)[static_cast<Eigen::Index>(x)]);
  ASSERT_EQ(run({"mc", "--model", "chain", "--chain", (dir / "ladder_chain.json").string(), "--density", density,
                 "--x0", "3", "--paths", "2000", "--format", "json", "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(run({"mc", "--n", "10", "--x0", "3", "--paths", "2000", "--format", "json", "--out", (dir / "b").string()}).code, 0);
  const auto a = nlohmann::json::parse(read_text(dir / "a" / "mc.json"))["diagnostics"];
  const auto b = nlohmann::json::parse(read_text(dir / "b" / "mc.json"))["diagnostics"];
  EXPECT_NEAR(a["oracle"].get<double>(), b["oracle"].get<double>(), 1e-9);
  EXPECT_EQ(a["estimate"], b["estimate"]);
  EXPECT_EQ(run({"mc", "--model", "chain", "--out", dir.string()}).code, 1);
  EXPECT_EQ(run({"mc", "--model", "chain", "--chain", (dir / "ladder_chain.json").string(), "--density", "1,2",
                 "--out", dir.string()}).code, 1);
}
