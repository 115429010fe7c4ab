#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sstht/streams.hpp"
#include "sstht/tree.hpp"

namespace sstht {

struct PrequentialConfig {
  std::size_t window = 200;
  std::size_t warm_start = 200;
  std::size_t repetitions = 30;
  std::vector<std::uint64_t> seeds;  // one per repetition

  /// Seeds base, base + 1, ... for every repetition.
  static std::vector<std::uint64_t> default_seeds(std::size_t repetitions, std::uint64_t base = 1);
  void validate() const;
};

/// Average over targets of per-target RMSE, from per-target sums of squared
/// errors over `count` examples. Throws std::invalid_argument for count 0.
double armse(std::span<const double> squared_error_sums, std::size_t count);

struct WindowRecord {
  std::size_t index = 0;
  double armse = 0.0;
  double cum_armse = 0.0;
  double elapsed_s = 0.0;
  std::size_t model_bytes = 0;
  std::size_t count = 0;
  std::vector<double> squared_errors;  // per target, this window only
};

struct WindowedReport {
  std::string dataset;
  LearnerVariant variant = LearnerVariant::SsthtAdaptive;
  std::uint64_t seed = 0;
  std::vector<WindowRecord> windows;
  std::size_t evaluated = 0;
  std::vector<double> squared_errors;  // per target, all evaluated examples
  double cumulative_armse = 0.0;       // 0 when nothing was evaluated
  double elapsed_s = 0.0;
  std::size_t model_bytes = 0;
  std::size_t leaf_count = 0;
};

/// Test-then-train over the whole source (restarted first). The first
/// warm_start instances are only learned. Timing covers predict and learn,
/// warm start included. Model size is sampled at every window boundary.
/// Throws std::runtime_error when the source yields no instance at all.
WindowedReport run_prequential(StreamSource& source, const TreeConfig& tree, const PrequentialConfig& config,
                               std::string dataset = {});

/// Columns: window_index,armse,cum_armse,elapsed_s,model_bytes
void write_report_csv(const WindowedReport& report, const std::filesystem::path& path);
std::vector<WindowRecord> read_report_csv(const std::filesystem::path& path);

/// Ranks of k algorithms within each of N blocks (1 = best).
struct RankTable {
  std::vector<std::vector<double>> ranks;  // N x k
  std::vector<double> average_ranks;       // k

  std::size_t blocks() const { return ranks.size(); }
  std::size_t algorithms() const { return average_ranks.size(); }

  /// Ranks each row of `scores`, lower score = better rank; ties share the
  /// average of the ranks they span.
  static RankTable from_scores(const std::vector<std::vector<double>>& scores);
};

struct FriedmanNemenyi {
  double chi2 = 0.0;       // Friedman statistic
  double f_stat = 0.0;     // Iman-Davenport refinement, F((k-1), (k-1)(N-1))
  double p_value = 1.0;
  bool reject = false;     // p_value < alpha
  double q_alpha = 0.0;
  double cd = 0.0;         // Nemenyi critical difference
  /// significant[i][j]: |R_i - R_j| >= cd
  std::vector<std::vector<bool>> significant;
  /// Maximal runs of algorithms (sorted by average rank) whose spread is
  /// below cd; each group lists algorithm indices, best first.
  std::vector<std::vector<std::size_t>> groups;
};

/// Studentized range statistic divided by sqrt(2) for the two-tailed
/// Nemenyi test, k = 2..10, alpha in {0.05, 0.10}. Values from the standard
/// table used for critical-difference diagrams.
double nemenyi_q(std::size_t k, double alpha);
double nemenyi_cd(std::size_t k, std::size_t blocks, double alpha);

/// Requires k >= 2 and N >= 2 (std::invalid_argument otherwise).
FriedmanNemenyi friedman_nemenyi(const RankTable& table, double alpha = 0.05);

}  // namespace sstht
