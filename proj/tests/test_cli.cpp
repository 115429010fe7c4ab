#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sstht/cli.hpp"

using namespace sstht;
using namespace sstht::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sstht_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the elapsed_s column (fourth) from a report.
std::string without_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    cols.erase(cols.begin() + 3);
    for (const auto& c : cols) out += c + ',';
    out += '\n';
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SSTHT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::size_t csv_reports(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv" && e.path().filename() != "summary.csv") ++n;
  return n;
}

const char* kSmall = R"({
  "datasets": [{"name": "fried", "generator": {"family": "friedman_mt", "targets": 2, "length": 1000, "noise_sd": 0.1}}],
  "variants": ["sstht_adaptive"],
  "prequential": {"repetitions": 1}
})";

}  // namespace

TEST_CASE("config defaults") {
  const auto cfg = RunConfig::parse(R"({"datasets": [{"name": "d", "generator": {}}]})");
  CHECK(cfg.tree.hoeffding.delta == 1e-7);
  CHECK(cfg.tree.hoeffding.tau == 0.05);
  CHECK(cfg.tree.hoeffding.grace_period == 200);
  CHECK(cfg.tree.learning_rate == 0.01);
  CHECK(cfg.tree.sign == UpdateSign::Descent);
  CHECK(cfg.prequential.window == 200);
  CHECK(cfg.prequential.warm_start == 200);
  CHECK(cfg.prequential.repetitions == 30);
  CHECK(cfg.prequential.seeds.size() == 30);
  CHECK(cfg.prequential.seeds.front() == 1);
  CHECK(cfg.variants.size() == 5);
  REQUIRE(cfg.datasets.size() == 1);
  CHECK(cfg.datasets[0].generator->family == GeneratorFamily::FriedmanMt);
}

TEST_CASE("config fields and seed override") {
  const auto cfg = RunConfig::parse(R"({
    "datasets": [{"name": "p", "generator": {"family": "plane_mt", "targets": 3, "length": 500,
                  "drift": {"mode": "asynchronous", "positions": [100, 200, 300]}}}],
    "variants": ["mtrht_mean", "sstht"],
    "tree": {"delta": 0.001, "tau": 0.1, "grace_period": 50, "learning_rate": 0.05, "reversed_sign": true},
    "prequential": {"window": 100, "warm_start": 50, "repetitions": 3, "base_seed": 7}
  })", {}, 100);
  CHECK(cfg.tree.hoeffding.delta == 0.001);
  CHECK(cfg.tree.hoeffding.grace_period == 50);
  CHECK(cfg.tree.sign == UpdateSign::Reversed);
  CHECK(cfg.prequential.seeds == std::vector<std::uint64_t>{100, 101, 102});
  CHECK(cfg.variants == std::vector<LearnerVariant>{LearnerVariant::MtrhtMean, LearnerVariant::Sstht});
  CHECK(cfg.datasets[0].generator->drift->positions.size() == 3);
}

TEST_CASE("invalid configs are configuration errors") {
  CHECK_THROWS_AS(RunConfig::parse("{"), ConfigurationError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"datasets": []})"), ConfigurationError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"datasets": [{"name": "d", "generator": {}}], "colour": 1})"),
                  ConfigurationError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"datasets": [{"name": "d", "generator": {}}], "variants": ["fimt"]})"),
                  ConfigurationError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"datasets": [{"name": "d", "generator": {}}], "tree": {"delta": 2}})"),
                  ConfigurationError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"datasets": [{"name": "d", "generator": {"family": "x"}}]})"),
                  ConfigurationError);
  CHECK_THROWS_AS(
      RunConfig::parse(R"({"datasets": [{"name": "d", "generator": {}}], "prequential": {"window": 0}})"),
      ConfigurationError);
  CHECK_THROWS_AS(RunConfig::parse(R"({"datasets": [{"name": "a__b", "generator": {}}]})"), ConfigurationError);
}

TEST_CASE("report file names") {
  CHECK(report_file_name("fried", LearnerVariant::Sstht, 3) == "fried__sstht__seed3.csv");
}

TEST_CASE("minimal run writes one report") {
  auto cfg = RunConfig::parse(kSmall);
  cfg.output_dir = fresh_dir("minimal");
  std::ostringstream log;
  const auto outcome = run_experiments(cfg, 1, log);
  CHECK(outcome.reports.size() == 1);
  CHECK(csv_reports(cfg.output_dir) == 1);
  CHECK(fs::exists(cfg.output_dir / "fried__sstht_adaptive__seed1.csv"));
  const auto rows = read_report_csv(outcome.reports[0]);
  CHECK(rows.size() == 4);
}

TEST_CASE("five variants and two seeds; reruns match") {
  auto cfg = RunConfig::parse(R"({
    "datasets": [{"name": "fried", "generator": {"family": "friedman_mt", "targets": 2, "length": 800}}],
    "prequential": {"repetitions": 2}
  })");
  cfg.output_dir = fresh_dir("matrix_a");
  std::ostringstream log;
  run_experiments(cfg, 2, log);
  CHECK(csv_reports(cfg.output_dir) == 10);
  CHECK(fs::exists(cfg.output_dir / "summary.csv"));

  const fs::path first = cfg.output_dir;
  cfg.output_dir = fresh_dir("matrix_b");
  run_experiments(cfg, 1, log);
  for (const auto& e : fs::directory_iterator(first)) {
    if (e.path().filename() == "summary.csv") continue;
    CHECK(without_time(slurp(e.path())) == without_time(slurp(cfg.output_dir / e.path().filename())));
  }
}

TEST_CASE("compare reads reports back") {
  auto cfg = RunConfig::parse(R"({
    "datasets": [{"name": "a", "generator": {"length": 700, "targets": 2}},
                 {"name": "b", "generator": {"family": "plane_mt", "length": 700, "targets": 2}}],
    "variants": ["mtrht_mean", "mtrht_perceptron", "sstht"],
    "prequential": {"repetitions": 1}
  })");
  cfg.output_dir = fresh_dir("compare");
  std::ostringstream log;
  run_experiments(cfg, 1, log);
  const auto runs = load_runs(cfg.output_dir);
  CHECK(runs.size() == 6);
  const auto out = fresh_dir("compare_out");
  const auto cmp = compare_runs(runs, out);
  CHECK(cmp.block_kind == "datasets");
  CHECK(cmp.ranks.blocks() == 2);
  CHECK(cmp.ranks.algorithms() == 3);
  REQUIRE(cmp.test.has_value());
  CHECK(fs::exists(out / "summary.csv"));
  const auto summary = slurp(out / "summary.csv");
  CHECK(summary.rfind("dataset,variant,runs,armse_mean", 0) == 0);

  // One dataset: windows are the blocks.
  std::vector<RunRecord> only_a;
  for (const auto& r : runs)
    if (r.dataset == "a") only_a.push_back(r);
  const auto per_window = compare_runs(only_a, out);
  CHECK(per_window.block_kind == "windows");
  CHECK(per_window.ranks.blocks() == 3);
}

TEST_CASE("compare rejects misaligned windows") {
  RunRecord a{"d", LearnerVariant::MtrhtMean, 1, {}};
  RunRecord b{"d", LearnerVariant::Sstht, 1, {}};
  for (std::size_t i = 0; i < 3; ++i) a.windows.push_back({i, 1.0, 1.0, 0.0, 100, 0, {}});
  for (std::size_t i = 0; i < 2; ++i) b.windows.push_back({i, 0.5, 0.5, 0.0, 100, 0, {}});
  CHECK_THROWS_AS(compare_runs({a, b}, fresh_dir("misaligned")), std::runtime_error);
  CHECK_THROWS_AS(compare_runs({a}, fresh_dir("single")), std::runtime_error);
}

TEST_CASE("executable exit codes") {
  const auto dir = fresh_dir("exe");
  std::ofstream(dir / "bad.json") << R"({"datasets": [], "bogus": true})";
  CHECK(run_cli("run --config " + (dir / "bad.json").string()) == kExitUsage);
  CHECK(run_cli("run") == kExitUsage);
  CHECK(run_cli("frobnicate") == kExitUsage);
  CHECK(run_cli("run --config " + (dir / "missing.json").string()) == kExitUsage);

  std::ofstream(dir / "ok.json") << kSmall;
  CHECK(run_cli("run --jobs 1 --config " + (dir / "ok.json").string() + " --out " + (dir / "out").string()) == kExitOk);
  CHECK(fs::exists(dir / "out" / "fried__sstht_adaptive__seed1.csv"));

  CHECK(run_cli("compare " + (dir / "nowhere").string()) == kExitRuntime);
}

TEST_CASE("generate writes a readable stream") {
  const auto dir = fresh_dir("gen");
  REQUIRE(run_cli("generate --family mv_like --targets 3 --length 123 --seed 5 --name mv --out " + dir.string()) ==
          kExitOk);
  const auto decl = SchemaDeclaration::load(dir / "mv.schema.json");
  CHECK(decl.schema.num_targets() == 3);
  auto src = read_csv(dir / "mv.csv", decl);
  GeneratorSpec spec;
  spec.family = GeneratorFamily::MvLike;
  spec.targets = 3;
  spec.length = 123;
  spec.seed = 5;
  GeneratorSource ref(spec);
  std::size_t n = 0;
  while (auto x = src->next()) {
    auto y = ref.next();
    REQUIRE(y.has_value());
    CHECK(x->features == y->features);
    CHECK(x->targets == y->targets);
    ++n;
  }
  CHECK(n == 123);

  // A regular file where the output directory should be.
  std::ofstream(dir / "blocker") << "x";
  CHECK(run_cli("generate --length 10 --out " + (dir / "blocker" / "sub").string()) == kExitRuntime);
}

TEST_CASE("output directory from the environment") {
  const auto dir = fresh_dir("env");
  std::ofstream(dir / "ok.json") << kSmall;
  const std::string cmd = "SSTHT_OUT_DIR=" + (dir / "from_env").string() + " " + SSTHT_CLI_PATH +
                          " run --jobs 1 --config " + (dir / "ok.json").string() + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(dir / "from_env" / "summary.csv"));
}
