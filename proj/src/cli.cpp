#include "sstht/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

namespace sstht::cli {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string short_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
      throw ConfigurationError("unknown key '" + key + "' in " + where);
  }
}

GeneratorSpec generator_from_json(const json& j) {
  reject_unknown_keys(j, {"family", "targets", "length", "noise_sd", "seed", "drift"}, "generator");
  GeneratorSpec spec;
  const std::string family = j.value("family", std::string("friedman_mt"));
  auto f = parse_family(family);
  if (!f) throw ConfigurationError("unknown generator family '" + family + "'");
  spec.family = *f;
  spec.targets = j.value("targets", spec.targets);
  spec.length = j.value("length", spec.length);
  spec.noise_sd = j.value("noise_sd", spec.noise_sd);
  spec.seed = j.value("seed", spec.seed);
  if (j.contains("drift") && !j.at("drift").is_null()) {
    const json& jd = j.at("drift");
    reject_unknown_keys(jd, {"mode", "positions"}, "drift");
    DriftSpec drift;
    const std::string mode = jd.value("mode", std::string("synchronous"));
    if (mode == "synchronous") drift.mode = DriftMode::Synchronous;
    else if (mode == "asynchronous") drift.mode = DriftMode::Asynchronous;
    else throw ConfigurationError("unknown drift mode '" + mode + "'");
    drift.positions = jd.at("positions").get<std::vector<std::size_t>>();
    spec.drift = drift;
  }
  spec.validate();
  return spec;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Comparison compare_impl(const std::vector<RunRecord>& runs, const std::filesystem::path& out_dir, double alpha,
                        bool require_test) {
  Comparison cmp;
  std::map<std::string, std::map<LearnerVariant, std::vector<const RunRecord*>>> cells;
  std::set<LearnerVariant> variant_set;
  for (const auto& r : runs) {
    cells[r.dataset][r.variant].push_back(&r);
    variant_set.insert(r.variant);
  }
  for (auto v : kAllVariants)
    if (variant_set.count(v)) cmp.variants.push_back(v);
  for (const auto& [name, _] : cells) cmp.datasets.push_back(name);
  if (require_test && cmp.variants.size() < 2)
    throw std::runtime_error("comparison needs reports from at least two variants");

  // per dataset: variant -> seed-averaged windowed aRMSE
  std::map<std::string, std::vector<std::vector<double>>> windowed;
  for (const auto& [name, by_variant] : cells) {
    std::optional<std::size_t> windows;
    std::vector<std::vector<double>> per_variant;
    for (auto v : cmp.variants) {
      auto it = by_variant.find(v);
      if (it == by_variant.end())
        throw std::runtime_error("dataset '" + name + "' has no report for variant " + std::string(to_string(v)));
      std::vector<double> avg;
      for (const RunRecord* r : it->second) {
        if (!windows) windows = r->windows.size();
        if (r->windows.size() != *windows)
          throw std::runtime_error("misaligned windows for dataset '" + name + "': " + std::string(to_string(v)) +
                                   " seed " + std::to_string(r->seed) + " has " +
                                   std::to_string(r->windows.size()) + " windows, expected " +
                                   std::to_string(*windows));
        avg.resize(*windows, 0.0);
        for (std::size_t w = 0; w < *windows; ++w) avg[w] += r->windows[w].armse;
      }
      for (auto& a : avg) a /= static_cast<double>(it->second.size());
      per_variant.push_back(std::move(avg));
    }
    windowed[name] = std::move(per_variant);
  }

  std::vector<std::vector<double>> scores;
  if (cmp.datasets.size() >= 2) {
    cmp.block_kind = "datasets";
    for (const auto& name : cmp.datasets) {
      std::vector<double> row;
      for (const auto& w : windowed[name]) row.push_back(std::accumulate(w.begin(), w.end(), 0.0));
      scores.push_back(std::move(row));
    }
  } else if (!cmp.datasets.empty()) {
    cmp.block_kind = "windows";
    const auto& per_variant = windowed[cmp.datasets.front()];
    const std::size_t n = per_variant.empty() ? 0 : per_variant.front().size();
    for (std::size_t w = 0; w < n; ++w) {
      std::vector<double> row;
      for (const auto& pv : per_variant) row.push_back(pv[w]);
      scores.push_back(std::move(row));
    }
  }
  cmp.ranks = RankTable::from_scores(scores);
  const bool testable = cmp.variants.size() >= 2 && cmp.ranks.blocks() >= 2 && cmp.variants.size() <= 10;
  if (require_test && !testable)
    throw std::runtime_error("comparison needs at least two aligned blocks (datasets or windows)");
  if (testable) cmp.test = friedman_nemenyi(cmp.ranks, alpha);

  std::ostringstream text;
  text << "blocks: " << cmp.block_kind << " (N=" << cmp.ranks.blocks() << "), algorithms: k=" << cmp.variants.size()
       << '\n';
  if (cmp.ranks.algorithms() > 0) {
    text << "average ranks:\n";
    for (std::size_t i = 0; i < cmp.variants.size(); ++i)
      text << "  " << to_string(cmp.variants[i]) << ' ' << fixed(cmp.ranks.average_ranks[i], 3) << '\n';
  }
  std::map<LearnerVariant, std::string> group_labels;
  if (cmp.test) {
    const auto& t = *cmp.test;
    text << "friedman chi2=" << fixed(t.chi2) << " F_F=" << fixed(t.f_stat) << " p=" << short_g(t.p_value)
         << " reject H0 at alpha=" << alpha << ": " << (t.reject ? "yes" : "no") << '\n';
    text << "nemenyi CD=" << fixed(t.cd) << " (q=" << t.q_alpha << ")\n";
    text << "groups without significant difference:";
    if (t.groups.empty()) text << " none";
    for (std::size_t g = 0; g < t.groups.size(); ++g) {
      const std::string label(1, static_cast<char>('A' + g % 26));
      text << "\n  " << label << ':';
      for (std::size_t a : t.groups[g]) {
        text << ' ' << to_string(cmp.variants[a]);
        auto& l = group_labels[cmp.variants[a]];
        l += (l.empty() ? "" : ";") + label;
      }
    }
    text << '\n';
  } else {
    text << "statistical test skipped: needs k in [2, 10] and at least two blocks\n";
  }
  cmp.text = text.str();

  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "summary.csv");
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "summary.csv").string());
  out << "dataset,variant,runs,armse_mean,armse_sd,elapsed_mean,elapsed_sd,model_bytes_mean,model_bytes_sd,"
         "avg_rank,friedman_chi2,friedman_ff,friedman_p,reject_h0,nemenyi_cd,nemenyi_groups\n";
  for (const auto& [name, by_variant] : cells) {
    for (std::size_t i = 0; i < cmp.variants.size(); ++i) {
      const auto v = cmp.variants[i];
      std::vector<double> err, time, bytes;
      for (const RunRecord* r : by_variant.at(v)) {
        if (r->windows.empty()) continue;
        err.push_back(r->windows.back().cum_armse);
        time.push_back(r->windows.back().elapsed_s);
        bytes.push_back(static_cast<double>(r->windows.back().model_bytes));
      }
      out << name << ',' << to_string(v) << ',' << by_variant.at(v).size() << ',' << fmt(mean_of(err)) << ','
          << fmt(sd_of(err)) << ',' << fmt(mean_of(time)) << ',' << fmt(sd_of(time)) << ',' << fmt(mean_of(bytes))
          << ',' << fmt(sd_of(bytes)) << ',';
      if (cmp.ranks.algorithms() > 0) out << fmt(cmp.ranks.average_ranks[i]);
      out << ',';
      if (cmp.test) {
        const auto& t = *cmp.test;
        out << fmt(t.chi2) << ',' << fmt(t.f_stat) << ',' << fmt(t.p_value) << ',' << (t.reject ? "yes" : "no")
            << ',' << fmt(t.cd) << ',' << group_labels[v];
      } else {
        out << ",,,,,";
      }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for summary.csv");
  return cmp;
}

}  // namespace

std::unique_ptr<StreamSource> DatasetConfig::open() const {
  if (generator) return std::make_unique<GeneratorSource>(*generator);
  return read_csv(csv, SchemaDeclaration::load(schema));
}

GeneratorSpec parse_generator_spec(const std::string& json_text) {
  try {
    return generator_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed generator spec: ") + e.what());
  }
}

RunConfig RunConfig::parse(const std::string& json_text, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  RunConfig cfg;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigurationError("config must be a JSON object");
  try {
    reject_unknown_keys(doc, {"datasets", "variants", "tree", "prequential", "output_dir"}, "config");
    if (!doc.contains("datasets") || doc.at("datasets").empty())
      throw ConfigurationError("config needs at least one dataset");
    std::set<std::string> names;
    for (const auto& jd : doc.at("datasets")) {
      reject_unknown_keys(jd, {"name", "generator", "csv", "schema"}, "dataset");
      DatasetConfig ds;
      ds.name = jd.at("name").get<std::string>();
      if (ds.name.empty() || ds.name.find("__") != std::string::npos || ds.name.find('/') != std::string::npos)
        throw ConfigurationError("dataset name must be non-empty without '/' or '__': " + ds.name);
      if (!names.insert(ds.name).second) throw ConfigurationError("duplicate dataset name " + ds.name);
      if (jd.contains("generator")) {
        if (jd.contains("csv")) throw ConfigurationError("dataset " + ds.name + " has both generator and csv");
        ds.generator = generator_from_json(jd.at("generator"));
      } else if (jd.contains("csv") && jd.contains("schema")) {
        auto resolve = [&](const std::string& p) {
          std::filesystem::path path(p);
          return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
        };
        ds.csv = resolve(jd.at("csv").get<std::string>());
        ds.schema = resolve(jd.at("schema").get<std::string>());
      } else {
        throw ConfigurationError("dataset " + ds.name + " needs a generator or csv + schema");
      }
      cfg.datasets.push_back(std::move(ds));
    }

    if (doc.contains("variants") && !doc.at("variants").empty()) {
      for (const auto& jv : doc.at("variants")) {
        const std::string name = jv.get<std::string>();
        auto v = parse_variant(name);
        if (!v) throw ConfigurationError("unknown variant '" + name + "'");
        if (std::find(cfg.variants.begin(), cfg.variants.end(), *v) == cfg.variants.end()) cfg.variants.push_back(*v);
      }
    } else {
      cfg.variants.assign(std::begin(kAllVariants), std::end(kAllVariants));
    }

    if (doc.contains("tree")) {
      const json& jt = doc.at("tree");
      reject_unknown_keys(jt, {"delta", "tau", "grace_period", "learning_rate", "reversed_sign"}, "tree");
      cfg.tree.hoeffding.delta = jt.value("delta", cfg.tree.hoeffding.delta);
      cfg.tree.hoeffding.tau = jt.value("tau", cfg.tree.hoeffding.tau);
      cfg.tree.hoeffding.grace_period = jt.value("grace_period", cfg.tree.hoeffding.grace_period);
      cfg.tree.learning_rate = jt.value("learning_rate", cfg.tree.learning_rate);
      if (jt.value("reversed_sign", false)) cfg.tree.sign = UpdateSign::Reversed;
    }
    cfg.tree.validate();

    std::uint64_t base_seed = 1;
    bool explicit_seeds = false;
    if (doc.contains("prequential")) {
      const json& jp = doc.at("prequential");
      reject_unknown_keys(jp, {"window", "warm_start", "repetitions", "seeds", "base_seed"}, "prequential");
      cfg.prequential.window = jp.value("window", cfg.prequential.window);
      cfg.prequential.warm_start = jp.value("warm_start", cfg.prequential.warm_start);
      cfg.prequential.repetitions = jp.value("repetitions", cfg.prequential.repetitions);
      base_seed = jp.value("base_seed", base_seed);
      if (jp.contains("seeds")) {
        cfg.prequential.seeds = jp.at("seeds").get<std::vector<std::uint64_t>>();
        explicit_seeds = true;
        if (!jp.contains("repetitions")) cfg.prequential.repetitions = cfg.prequential.seeds.size();
      }
    }
    if (seed_override) {
      base_seed = *seed_override;
      explicit_seeds = false;
    }
    if (!explicit_seeds) cfg.prequential.seeds = PrequentialConfig::default_seeds(cfg.prequential.repetitions, base_seed);
    cfg.prequential.validate();

    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  return parse(read_file(path), path.parent_path(), seed_override);
}

std::string report_file_name(const std::string& dataset, LearnerVariant variant, std::uint64_t seed) {
  return dataset + "__" + std::string(to_string(variant)) + "__seed" + std::to_string(seed) + ".csv";
}

RunOutcome run_experiments(const RunConfig& config, unsigned jobs, std::ostream& log) {
  struct Cell {
    const DatasetConfig* dataset;
    LearnerVariant variant;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& ds : config.datasets)
    for (auto v : config.variants)
      for (auto seed : config.prequential.seeds) cells.push_back({&ds, v, seed});

  std::filesystem::create_directories(config.output_dir);
  // open every source once up front so schema errors surface before any work
  for (const auto& ds : config.datasets) ds.open();

  std::vector<RunRecord> records(cells.size());
  std::vector<std::filesystem::path> paths(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        const Cell& c = cells[i];
        auto source = c.dataset->open();
        TreeConfig tree = config.tree;
        tree.variant = c.variant;
        tree.rng_seed = c.seed;
        WindowedReport report = run_prequential(*source, tree, config.prequential, c.dataset->name);
        paths[i] = config.output_dir / report_file_name(c.dataset->name, c.variant, c.seed);
        write_report_csv(report, paths[i]);
        records[i] = RunRecord{c.dataset->name, c.variant, c.seed, std::move(report.windows)};
        std::lock_guard lock(mu);
        log << "done " << paths[i].filename().string() << " aRMSE=" << fixed(report.cumulative_armse)
            << " leaves=" << report.leaf_count << '\n';
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = cells.size();
        return;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  RunOutcome outcome;
  outcome.reports = paths;
  const Comparison cmp = compare_impl(records, config.output_dir, 0.05, false);
  outcome.summary = config.output_dir / "summary.csv";
  log << cmp.text;
  return outcome;
}

std::vector<RunRecord> load_runs(const std::filesystem::path& report_dir) {
  if (!std::filesystem::is_directory(report_dir))
    throw std::runtime_error("not a directory: " + report_dir.string());
  static const std::regex name_re(R"((.+)__([a-z_]+)__seed(\d+)\.csv)");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(report_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> runs;
  for (const auto& path : files) {
    std::smatch m;
    const std::string name = path.filename().string();
    if (!std::regex_match(name, m, name_re)) continue;
    auto v = parse_variant(m[2].str());
    if (!v) continue;
    runs.push_back(RunRecord{m[1].str(), *v, std::stoull(m[3].str()), read_report_csv(path)});
  }
  return runs;
}

Comparison compare_runs(const std::vector<RunRecord>& runs, const std::filesystem::path& out_dir, double alpha) {
  return compare_impl(runs, out_dir, alpha, true);
}

int main(int argc, char** argv) {
  CLI::App app{"Incremental multi-target Hoeffding trees: prequential runs, comparisons and synthetic streams"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run a prequential experiment matrix from a config file");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--jobs", jobs, "parallel cells")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (overrides config and $SSTHT_OUT_DIR)");
  run->add_option("--seed", seed, "base seed; seeds become seed, seed+1, ...");

  std::string report_dir;
  double alpha = 0.05;
  auto* compare = app.add_subcommand("compare", "rank variants and run Friedman/Nemenyi over saved reports");
  compare->add_option("report_dir", report_dir, "directory holding run reports")->required();
  compare->add_option("--alpha", alpha, "significance level (0.05 or 0.10)");
  compare->add_option("--out", out_dir, "where to write summary.csv (default: report_dir)");

  std::string gen_config;
  std::string family = "friedman_mt";
  std::size_t targets = 4, length = 10000;
  double noise = 0.0;
  std::string name = "stream";
  auto* generate = app.add_subcommand("generate", "write a synthetic stream as CSV plus schema declaration");
  generate->add_option("--config", gen_config, "generator spec (JSON); flags below are ignored when given");
  generate->add_option("--family", family, "friedman_mt | plane_mt | mv_like");
  generate->add_option("--targets", targets, "number of targets");
  generate->add_option("--length", length, "number of rows");
  generate->add_option("--noise", noise, "noise standard deviation");
  generate->add_option("--seed", seed, "generator seed");
  generate->add_option("--name", name, "output file stem");
  generate->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto resolve_out = [&](const std::filesystem::path& from_config) -> std::filesystem::path {
    if (!out_dir.empty()) return out_dir;
    if (!from_config.empty()) return from_config;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "sstht_out";
  };

  try {
    if (*run) {
      RunConfig cfg;
      try {
        cfg = RunConfig::load(config_path, seed);
        cfg.output_dir = resolve_out(cfg.output_dir);
        for (const auto& ds : cfg.datasets) ds.open();
      } catch (const ConfigurationError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kExitUsage;
      }
      run_experiments(cfg, jobs, std::cout);
      return kExitOk;
    }
    if (*compare) {
      const std::filesystem::path dest = out_dir.empty() ? std::filesystem::path(report_dir) : std::filesystem::path(out_dir);
      const Comparison cmp = compare_runs(load_runs(report_dir), dest, alpha);
      std::cout << cmp.text;
      std::ofstream(dest / "comparison.txt") << cmp.text;
      return kExitOk;
    }
    if (*generate) {
      GeneratorSpec spec;
      try {
        if (!gen_config.empty()) {
          spec = parse_generator_spec(read_file(gen_config));
        } else {
          auto f = parse_family(family);
          if (!f) throw ConfigurationError("unknown generator family '" + family + "'");
          spec.family = *f;
          spec.targets = targets;
          spec.length = length;
          spec.noise_sd = noise;
          if (seed) spec.seed = *seed;
          spec.validate();
        }
      } catch (const ConfigurationError& e) {
        std::cerr << "invalid generator spec: " << e.what() << '\n';
        return kExitUsage;
      }
      const std::filesystem::path dir = resolve_out({});
      std::filesystem::create_directories(dir);
      GeneratorSource source(spec);
      const std::size_t rows = write_csv(source, dir / (name + ".csv"));
      std::ofstream schema_out(dir / (name + ".schema.json"));
      schema_out << SchemaDeclaration{source.schema(), {}}.dump();
      if (!schema_out) throw std::runtime_error("cannot write schema declaration");
      std::cout << "wrote " << rows << " rows to " << (dir / (name + ".csv")).string() << '\n';
      return kExitOk;
    }
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sstht::cli
