#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sstht/evaluation.hpp"
#include "sstht/streams.hpp"
#include "sstht/tree.hpp"

namespace sstht::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable consulted for the output directory when neither
/// --out nor the config provides one.
inline constexpr const char* kOutDirEnv = "SSTHT_OUT_DIR";

struct DatasetConfig {
  std::string name;
  std::optional<GeneratorSpec> generator;
  std::filesystem::path csv;
  std::filesystem::path schema;

  std::unique_ptr<StreamSource> open() const;
};

/// Experiment matrix. Omitted fields take the default hyperparameters
/// (delta 1e-7, tau 0.05, grace period 200, warm start 200, window 200,
/// 30 repetitions, learning rate 0.01, all five variants).
struct RunConfig {
  std::vector<DatasetConfig> datasets;
  std::vector<LearnerVariant> variants;
  TreeConfig tree;
  PrequentialConfig prequential;
  std::filesystem::path output_dir;

  /// Relative csv/schema paths resolve against `base_dir`. Throws
  /// ConfigurationError on any invalid field.
  static RunConfig parse(const std::string& json_text, const std::filesystem::path& base_dir = {},
                         std::optional<std::uint64_t> seed_override = std::nullopt);
  static RunConfig load(const std::filesystem::path& path,
                        std::optional<std::uint64_t> seed_override = std::nullopt);
};

GeneratorSpec parse_generator_spec(const std::string& json_text);

/// Report file name for one run: <dataset>__<variant>__seed<seed>.csv
std::string report_file_name(const std::string& dataset, LearnerVariant variant, std::uint64_t seed);

struct RunOutcome {
  std::vector<std::filesystem::path> reports;
  std::filesystem::path summary;
};

/// Runs every (dataset, variant, seed) cell on up to `jobs` threads, writes
/// one report per cell plus summary.csv into config.output_dir.
RunOutcome run_experiments(const RunConfig& config, unsigned jobs, std::ostream& log);

/// One finished (dataset, variant, seed) run as read back from disk.
struct RunRecord {
  std::string dataset;
  LearnerVariant variant;
  std::uint64_t seed;
  std::vector<WindowRecord> windows;
};

struct Comparison {
  std::vector<std::string> datasets;
  std::vector<LearnerVariant> variants;
  /// Blocks are datasets when there are several, windows otherwise.
  std::string block_kind;
  RankTable ranks;
  std::optional<FriedmanNemenyi> test;
  std::string text;
};

/// Average ranks plus Friedman/Nemenyi verdicts over aligned runs. Writes
/// summary.csv into `out_dir`. Throws std::runtime_error when fewer than two
/// variants are present or window counts disagree.
Comparison compare_runs(const std::vector<RunRecord>& runs, const std::filesystem::path& out_dir,
                        double alpha = 0.05);
std::vector<RunRecord> load_runs(const std::filesystem::path& report_dir);

/// Entry point behind the `sstht` executable.
int main(int argc, char** argv);

}  // namespace sstht::cli
