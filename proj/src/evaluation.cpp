#include "sstht/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/fisher_f.hpp>

namespace sstht {

std::vector<std::uint64_t> PrequentialConfig::default_seeds(std::size_t repetitions, std::uint64_t base) {
  std::vector<std::uint64_t> seeds(repetitions);
  std::iota(seeds.begin(), seeds.end(), base);
  return seeds;
}

void PrequentialConfig::validate() const {
  if (window < 1) throw ConfigurationError("window must be at least 1");
  if (repetitions < 1) throw ConfigurationError("repetitions must be at least 1");
  if (seeds.size() != repetitions) throw ConfigurationError("seed list length must equal repetitions");
}

double armse(std::span<const double> squared_error_sums, std::size_t count) {
  if (count == 0) throw std::invalid_argument("armse needs at least one example");
  if (squared_error_sums.empty()) throw std::invalid_argument("armse needs at least one target");
  double acc = 0.0;
  for (double s : squared_error_sums) acc += std::sqrt(s / static_cast<double>(count));
  return acc / static_cast<double>(squared_error_sums.size());
}

WindowedReport run_prequential(StreamSource& source, const TreeConfig& tree_config, const PrequentialConfig& config,
                               std::string dataset) {
  const StreamSchema& schema = source.schema();
  if (config.window < 1) throw ConfigurationError("window must be at least 1");
  using clock = std::chrono::steady_clock;
  const std::size_t d = schema.num_targets();
  HoeffdingTree tree(schema, tree_config);

  WindowedReport report;
  report.dataset = std::move(dataset);
  report.variant = tree_config.variant;
  report.seed = tree_config.rng_seed;
  report.squared_errors.assign(d, 0.0);

  WindowRecord current;
  current.squared_errors.assign(d, 0.0);
  clock::duration busy{};
  auto flush = [&] {
    current.index = report.windows.size();
    current.armse = armse(current.squared_errors, current.count);
    current.cum_armse = armse(report.squared_errors, report.evaluated);
    current.elapsed_s = std::chrono::duration<double>(busy).count();
    current.model_bytes = tree.model_size_bytes();
    report.windows.push_back(current);
    current.count = 0;
    std::fill(current.squared_errors.begin(), current.squared_errors.end(), 0.0);
  };

  source.restart();
  std::size_t seen = 0;
  while (auto x = source.next()) {
    ++seen;
    if (seen <= config.warm_start) {
      const auto t0 = clock::now();
      tree.learn(*x);
      busy += clock::now() - t0;
      continue;
    }
    const auto t0 = clock::now();
    const Prediction p = tree.predict(*x);
    tree.learn(*x);
    busy += clock::now() - t0;
    bool finite = true;
    for (double y : x->targets) finite = finite && std::isfinite(y);
    if (!finite) continue;  // rejected by the learner too; not scored
    for (std::size_t t = 0; t < d; ++t) {
      const double e = x->targets[t] - p.values[t];
      current.squared_errors[t] += e * e;
      report.squared_errors[t] += e * e;
    }
    ++current.count;
    ++report.evaluated;
    if (current.count == config.window) flush();
  }
  if (seen == 0) throw std::runtime_error("stream produced no instances");
  if (current.count > 0) flush();

  report.cumulative_armse = report.evaluated > 0 ? armse(report.squared_errors, report.evaluated) : 0.0;
  report.elapsed_s = std::chrono::duration<double>(busy).count();
  report.model_bytes = tree.model_size_bytes();
  report.leaf_count = tree.leaf_count();
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const WindowedReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "window_index,armse,cum_armse,elapsed_s,model_bytes\n";
  for (const auto& w : report.windows)
    out << w.index << ',' << fmt(w.armse) << ',' << fmt(w.cum_armse) << ',' << fmt(w.elapsed_s) << ','
        << w.model_bytes << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<WindowRecord> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("window_index,armse,cum_armse,elapsed_s,model_bytes", 0) != 0)
    throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<WindowRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    WindowRecord w;
    if (!(fields >> w.index >> w.armse >> w.cum_armse >> w.elapsed_s >> w.model_bytes))
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    rows.push_back(w);
  }
  return rows;
}

RankTable RankTable::from_scores(const std::vector<std::vector<double>>& scores) {
  RankTable table;
  if (scores.empty()) return table;
  const std::size_t k = scores.front().size();
  table.average_ranks.assign(k, 0.0);
  std::vector<std::size_t> order(k);
  for (const auto& row : scores) {
    if (row.size() != k) throw std::invalid_argument("score rows differ in length");
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    std::vector<double> ranks(k);
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i;
      while (j + 1 < k && row[order[j + 1]] == row[order[i]]) ++j;
      const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
      for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = r;
      i = j + 1;
    }
    for (std::size_t a = 0; a < k; ++a) table.average_ranks[a] += ranks[a];
    table.ranks.push_back(std::move(ranks));
  }
  for (auto& r : table.average_ranks) r /= static_cast<double>(scores.size());
  return table;
}

double nemenyi_q(std::size_t k, double alpha) {
  static constexpr double kQ05[] = {1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};
  static constexpr double kQ10[] = {1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920};
  if (k < 2 || k > 10) throw std::invalid_argument("Nemenyi critical values are tabulated for 2 <= k <= 10");
  if (std::abs(alpha - 0.05) < 1e-12) return kQ05[k - 2];
  if (std::abs(alpha - 0.10) < 1e-12) return kQ10[k - 2];
  throw std::invalid_argument("Nemenyi critical values are tabulated for alpha 0.05 and 0.10");
}

double nemenyi_cd(std::size_t k, std::size_t blocks, double alpha) {
  if (blocks == 0) throw std::invalid_argument("need at least one block");
  const double kk = static_cast<double>(k);
  return nemenyi_q(k, alpha) * std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(blocks)));
}

FriedmanNemenyi friedman_nemenyi(const RankTable& table, double alpha) {
  const std::size_t k = table.algorithms();
  const std::size_t n = table.blocks();
  if (k < 2 || n < 2) throw std::invalid_argument("Friedman test needs k >= 2 algorithms and N >= 2 blocks");
  const double kk = static_cast<double>(k);
  const double nn = static_cast<double>(n);

  FriedmanNemenyi out;
  double sum_sq = 0.0;
  for (double r : table.average_ranks) sum_sq += r * r;
  out.chi2 = 12.0 * nn / (kk * (kk + 1.0)) * (sum_sq - kk * (kk + 1.0) * (kk + 1.0) / 4.0);
  if (out.chi2 < 1e-12) out.chi2 = 0.0;

  const double denom = nn * (kk - 1.0) - out.chi2;
  if (out.chi2 == 0.0) {
    out.f_stat = 0.0;
    out.p_value = 1.0;
  } else if (denom <= 1e-12) {
    out.f_stat = INFINITY;
    out.p_value = 0.0;
  } else {
    out.f_stat = (nn - 1.0) * out.chi2 / denom;
    boost::math::fisher_f_distribution<double> f(kk - 1.0, (kk - 1.0) * (nn - 1.0));
    out.p_value = boost::math::cdf(boost::math::complement(f, out.f_stat));
  }
  out.reject = out.p_value < alpha;

  out.q_alpha = nemenyi_q(k, alpha);
  out.cd = nemenyi_cd(k, n, alpha);
  const auto& R = table.average_ranks;
  out.significant.assign(k, std::vector<bool>(k, false));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) out.significant[i][j] = std::abs(R[i] - R[j]) >= out.cd;

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return R[a] < R[b]; });
  std::size_t last_end = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i;
    while (j + 1 < k && R[order[j + 1]] - R[order[i]] < out.cd) ++j;
    if (j > i && j + 1 > last_end) {
      out.groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                              order.begin() + static_cast<std::ptrdiff_t>(j + 1));
      last_end = j + 1;
    }
  }
  return out;
}

}  // namespace sstht
