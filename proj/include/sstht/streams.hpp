#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sstht/core.hpp"

namespace sstht {

/// Single-consumer iterator over instances. restart() rewinds to the first
/// instance and replays the identical sequence.
class StreamSource {
 public:
  virtual ~StreamSource() = default;
  virtual const StreamSchema& schema() const = 0;
  virtual std::optional<Instance> next() = 0;
  virtual void restart() = 0;
  /// Total number of instances when known up front.
  virtual std::optional<std::size_t> size_hint() const { return std::nullopt; }
};

/// Schema plus per-column ingestion rules, stored as JSON:
///
///   {"features": [{"name": "x1", "kind": "numeric", "missing_sentinel": -1},
///                 {"name": "c", "kind": "nominal", "categories": ["a", "b"]}],
///    "targets": ["y1", "y2"]}
///
/// `missing_sentinel` is optional and only valid for numeric features.
struct SchemaDeclaration {
  StreamSchema schema;
  std::map<std::string, double> missing_sentinels;

  static SchemaDeclaration parse(const std::string& json_text);
  static SchemaDeclaration load(const std::filesystem::path& path);
  std::string dump() const;
};

/// Comma-separated file with a header row. Columns are matched by name and
/// extra columns are ignored. Quoted fields are not supported.
///
/// Numeric feature cells that are empty, '?', unparseable or equal to the
/// column's declared sentinel become missing. Rows with the wrong field
/// count, an unparseable or non-finite target, or an unknown nominal label
/// are skipped and counted.
class CsvSource : public StreamSource {
 public:
  /// Throws ConfigurationError if the file cannot be opened or the header
  /// lacks a declared column.
  CsvSource(std::filesystem::path path, SchemaDeclaration decl);

  const StreamSchema& schema() const override { return decl_.schema; }
  std::optional<Instance> next() override;
  void restart() override;

  std::size_t skipped_rows() const { return skipped_lines_.size(); }
  const std::vector<std::size_t>& skipped_lines() const { return skipped_lines_; }

 private:
  void open();

  std::filesystem::path path_;
  SchemaDeclaration decl_;
  std::ifstream in_;
  std::size_t header_fields_ = 0;
  std::size_t line_no_ = 0;
  std::vector<std::size_t> feature_col_;
  std::vector<std::size_t> target_col_;
  std::vector<std::optional<double>> sentinel_;
  std::vector<std::size_t> skipped_lines_;
  std::string line_;
  std::vector<std::string_view> fields_;
};

std::unique_ptr<CsvSource> read_csv(const std::filesystem::path& path, const SchemaDeclaration& decl);

enum class GeneratorFamily { FriedmanMt, PlaneMt, MvLike };
enum class DriftMode { Synchronous, Asynchronous };

std::string_view to_string(GeneratorFamily f);
std::optional<GeneratorFamily> parse_family(std::string_view name);

struct DriftSpec {
  DriftMode mode = DriftMode::Synchronous;
  /// One position for synchronous drift, one per target for asynchronous.
  std::vector<std::size_t> positions;
};

struct GeneratorSpec {
  GeneratorFamily family = GeneratorFamily::FriedmanMt;
  std::size_t targets = 4;
  std::size_t length = 10000;
  double noise_sd = 0.0;
  std::optional<DriftSpec> drift;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Seeded synthetic multi-target stream.
///
/// Every family computes a scalar base response g(x) and emits target t as
/// a_t * g(x) + b_t + N(0, noise_sd), with a_t ~ U[0.5, 2] and b_t ~ U[-5, 5]
/// drawn once from the seed. Targets are therefore affine in one shared
/// response and strongly inter-correlated.
///
/// friedman_mt: x ~ U[0,1]^10,
///   g = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5.
///   After drift the roles of (x1..x5) are taken by (x4, x5, x1, x2, x3).
/// plane_mt: x1 in {-1, 1}, x2..x10 in {-1, 0, 1}, uniformly,
///   g = 3 + 3 x2 + 2 x3 + x4 if x1 = 1, else -3 + 3 x5 + 2 x6 + x7.
///   After drift the regime test flips to x1 = -1.
/// mv_like: numeric x1 ~ U[-5,5], x2 ~ U[-15,-10], x3 ~ U[-1,1],
///   x4 ~ U[0,1], x5 ~ U[0,10], x6 ~ U[-1,1]; nominal
///   color = green iff x1 > 0 (red, green), level uniform (low, mid, high),
///   flag = yes with probability 0.3 (no, yes), region uniform
///   (north, south, east, west) with offsets (-2, 0, 1, 3);
///   g = (green ? x1 + 2 x2 : x1 / 2 + x2) + 4 level + (yes ? 3 : -3) x3
///       + offset(region) + 2 x4 x6.
///   After drift the color branches swap.
///
/// Drift for target t applies from its position (0-based instance index)
/// onward.
class GeneratorSource : public StreamSource {
 public:
  explicit GeneratorSource(GeneratorSpec spec);

  const StreamSchema& schema() const override { return schema_; }
  std::optional<Instance> next() override;
  void restart() override;
  std::optional<std::size_t> size_hint() const override { return spec_.length; }

  const GeneratorSpec& spec() const { return spec_; }
  std::span<const double> slopes() const { return slope_; }
  std::span<const double> offsets() const { return offset_; }

  /// Base responses for a feature vector, without and with drift applied.
  static double friedman_base(std::span<const double> x, bool drifted = false);
  static double plane_base(std::span<const double> x, bool drifted = false);
  static double mv_base(std::span<const double> x, bool drifted = false);
  double base(std::span<const double> x, bool drifted) const;

  static StreamSchema schema_for(GeneratorFamily family, std::size_t targets);

 private:
  void draw_features(std::vector<double>& x);
  bool drifted(std::size_t target) const;

  GeneratorSpec spec_;
  StreamSchema schema_;
  std::vector<double> slope_;
  std::vector<double> offset_;
  std::mt19937_64 rng_;
  std::size_t index_ = 0;
};

/// Writes the next `count` instances (or until exhaustion) as CSV with a
/// header row, numbers in 17 significant digits and nominal values as labels.
std::size_t write_csv(StreamSource& source, const std::filesystem::path& path,
                      std::optional<std::size_t> count = std::nullopt);

}  // namespace sstht
